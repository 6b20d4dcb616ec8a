// Copyright (c) the freqres project authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FREQRES_MODELS_IMPL_HPP_
#define FREQRES_MODELS_IMPL_HPP_

#include <cmath>

namespace freqres {

namespace detail {

template <class T>
ConvParamT<T> MakeConv(const std::string& name, int out_ch, int in_ch, int k) {
  ConvParamT<T> p;
  p.w = ParameterT<T>(name + ".w", out_ch, in_ch, k, k);
  p.b = ParameterT<T>(name + ".b", out_ch, 1, 1, 1);
  return p;
}

template <class T>
void MakeFeatureNet(FeatureNetT<T>& net, const std::string& prefix,
                    const ModelDims& dims) {
  net.conv1 = MakeConv<T>(prefix + ".conv1", dims.stem, 1, 3);
  net.down1 = MakeConv<T>(prefix + ".down1", dims.features, dims.stem, 3);
  net.res1a = MakeConv<T>(prefix + ".res1a", dims.features, dims.features, 3);
  net.res1b = MakeConv<T>(prefix + ".res1b", dims.features, dims.features, 3);
  net.down2 = MakeConv<T>(prefix + ".down2", dims.features, dims.features, 3);
  net.res2a = MakeConv<T>(prefix + ".res2a", dims.features, dims.features, 3);
  net.res2b = MakeConv<T>(prefix + ".res2b", dims.features, dims.features, 3);
}

template <class T>
void CollectFeatureNet(FeatureNetT<T>& net, std::vector<ParameterT<T>*>& out) {
  for (ConvParamT<T>* c : {&net.conv1, &net.down1, &net.res1a, &net.res1b,
                           &net.down2, &net.res2a, &net.res2b}) {
    out.push_back(&c->w);
    out.push_back(&c->b);
  }
}

}  // namespace detail

template <class T>
std::vector<ParameterT<T>*> ClassifierModelT<T>::Parameters() {
  std::vector<ParameterT<T>*> out;
  detail::CollectFeatureNet(f, out);
  for (StageBlockT<T>& s : stages) {
    for (ConvParamT<T>* c : {&s.conv1, &s.conv2, &s.head}) {
      out.push_back(&c->w);
      out.push_back(&c->b);
    }
  }
  return out;
}

template <class T>
std::vector<ParameterT<T>*> CEDModelT<T>::Parameters() {
  std::vector<ParameterT<T>*> out;
  detail::CollectFeatureNet(enc, out);
  for (ConvParamT<T>* c :
       {&d_in, &d_res_a, &d_res_b, &d_up1, &d_up2, &d_out}) {
    out.push_back(&c->w);
    out.push_back(&c->b);
  }
  return out;
}

template <class T>
ClassifierModelT<T> MakeClassifier(const ModelDims& dims, int w_b, int h_b,
                                   int n_cl, int stages) {
  if (stages < 1) throw DataError("classifier: need at least one stage");
  ClassifierModelT<T> m;
  m.dims = dims;
  m.w_b = w_b;
  m.h_b = h_b;
  m.n_cl = n_cl;
  m.n_ch = w_b * h_b;
  detail::MakeFeatureNet(m.f, "f", dims);
  const int out_dim = m.n_ch * n_cl;
  for (int t = 0; t < stages; ++t) {
    const std::string prefix = "stage" + std::to_string(t + 1);
    const int in_ch = t == 0 ? dims.features : dims.features + out_dim;
    StageBlockT<T> s;
    s.conv1 = detail::MakeConv<T>(prefix + ".conv1", dims.stage_hidden, in_ch, 3);
    s.conv2 = detail::MakeConv<T>(prefix + ".conv2", dims.stage_hidden,
                                  dims.stage_hidden, 3);
    s.head = detail::MakeConv<T>(prefix + ".head", out_dim, dims.stage_hidden, 1);
    m.stages.push_back(std::move(s));
  }
  return m;
}

template <class T>
CEDModelT<T> MakeCed(const ModelDims& dims, int w_b, int h_b) {
  if (dims.up % 4 != 0) throw DataError("ced: up width must be divisible by 4");
  CEDModelT<T> m;
  m.dims = dims;
  m.w_b = w_b;
  m.h_b = h_b;
  m.n_ch = w_b * h_b;
  detail::MakeFeatureNet(m.enc, "enc", dims);
  const int shuffled = dims.up / 4;
  m.d_in = detail::MakeConv<T>("dec.in", dims.features, dims.features + m.n_ch, 3);
  m.d_res_a = detail::MakeConv<T>("dec.res_a", dims.features, dims.features, 3);
  m.d_res_b = detail::MakeConv<T>("dec.res_b", dims.features, dims.features, 3);
  m.d_up1 = detail::MakeConv<T>("dec.up1", dims.up, dims.features, 3);
  m.d_up2 = detail::MakeConv<T>("dec.up2", dims.up, shuffled, 3);
  m.d_out = detail::MakeConv<T>("dec.out", 1, shuffled, 3);
  return m;
}

template <class T>
void InitParameters(const std::vector<ParameterT<T>*>& params, Rng& rng) {
  const double gain =
      std::sqrt(2.0 / (1.0 + kLeakySlope * kLeakySlope));  // leaky-ReLU gain
  for (ParameterT<T>* p : params) {
    const bool is_weight =
        p->name.size() > 2 && p->name.compare(p->name.size() - 2, 2, ".w") == 0;
    if (!is_weight) {
      std::fill(p->t.v.begin(), p->t.v.end(), T(0));
      continue;
    }
    const int fan_in = p->t.c * p->t.h * p->t.w;
    const double bound = gain * std::sqrt(3.0 / fan_in);
    for (T& v : p->t.v) v = static_cast<T>(rng.Uniform(-bound, bound));
  }
}

template <class T>
TensorT<T>* FeatureForward(Graph<T>& g, FeatureNetT<T>& net, TensorT<T>* x) {
  const T slope = static_cast<T>(kLeakySlope);
  TensorT<T>* h = g.LeakyRelu(g.Conv2d(x, &net.conv1.w, &net.conv1.b, 1, 1), slope);
  h = g.LeakyRelu(g.Conv2d(h, &net.down1.w, &net.down1.b, 2, 1), slope);
  h = ResidualBlock(g, h, &net.res1a.w, &net.res1a.b, &net.res1b.w,
                    &net.res1b.b, slope);
  h = g.LeakyRelu(g.Conv2d(h, &net.down2.w, &net.down2.b, 2, 1), slope);
  h = ResidualBlock(g, h, &net.res2a.w, &net.res2a.b, &net.res2b.w,
                    &net.res2b.b, slope);
  return h;
}

template <class T>
TensorT<T>* StageLogits(Graph<T>& g, ClassifierModelT<T>& model, int t,
                        TensorT<T>* f, TensorT<T>* prev_probs) {
  if ((t == 0) != (prev_probs == nullptr)) {
    throw DataError("stage_forward: previous-stage map presence mismatch");
  }
  StageBlockT<T>& s = model.stages[t];
  const T slope = static_cast<T>(kLeakySlope);
  TensorT<T>* in = t == 0 ? f : g.ConcatChannels(f, prev_probs);
  TensorT<T>* h = g.LeakyRelu(g.Conv2d(in, &s.conv1.w, &s.conv1.b, 1, 1), slope);
  h = g.LeakyRelu(g.Conv2d(h, &s.conv2.w, &s.conv2.b, 1, 1), slope);
  return g.Conv2d(h, &s.head.w, &s.head.b, 1, 0);
}

template <class T>
ClassifierOutputs<T> ClassifierForward(Graph<T>& g, ClassifierModelT<T>& model,
                                       TensorT<T>* x) {
  if (x->h % model.h_b != 0 || x->w % model.w_b != 0) {
    throw DataError("classifier: image dimensions not divisible by the patch size");
  }
  ClassifierOutputs<T> out;
  out.features = FeatureForward(g, model.f, x);
  TensorT<T>* prev = nullptr;
  for (int t = 0; t < model.stage_count(); ++t) {
    TensorT<T>* logits = StageLogits(g, model, t, out.features, prev);
    TensorT<T>* probs = g.GroupSoftmax(logits, model.n_cl);
    out.logits.push_back(logits);
    out.probs.push_back(probs);
    prev = probs;
  }
  return out;
}

template <class T>
TensorT<T>* DecoderForward(Graph<T>& g, CEDModelT<T>& model, TensorT<T>* f,
                           TensorT<T>* q) {
  if (q->h != f->h || q->w != f->w || q->b != f->b) {
    throw DataError("decode: coefficient grid does not match the feature grid");
  }
  if (q->c != model.n_ch) throw DataError("decode: coefficient channel mismatch");
  const T slope = static_cast<T>(kLeakySlope);
  TensorT<T>* h = g.ConcatChannels(f, q);
  h = g.LeakyRelu(g.Conv2d(h, &model.d_in.w, &model.d_in.b, 1, 1), slope);
  h = ResidualBlock(g, h, &model.d_res_a.w, &model.d_res_a.b, &model.d_res_b.w,
                    &model.d_res_b.b, slope);
  h = g.LeakyRelu(g.PixelShuffle(g.Conv2d(h, &model.d_up1.w, &model.d_up1.b, 1, 1), 2), slope);
  h = g.LeakyRelu(g.PixelShuffle(g.Conv2d(h, &model.d_up2.w, &model.d_up2.b, 1, 1), 2), slope);
  return g.Conv2d(h, &model.d_out.w, &model.d_out.b, 1, 1);
}

template <class T>
TensorT<T> ImageToTensor(const ImageBuffer& img) {
  if (img.planes != 1) throw DataError("image_to_tensor: expected 1 plane");
  TensorT<T> t(1, 1, img.height, img.width);
  for (size_t i = 0; i < img.data.size(); ++i) {
    t.v[i] = static_cast<T>(img.data[i] / 255.0);
  }
  return t;
}

template <class T>
ImageBuffer TensorToImage(const TensorT<T>& t, int batch_index) {
  ImageBuffer img(t.w, t.h, 1, Domain::kReal);
  const size_t plane = static_cast<size_t>(t.h) * t.w;
  const size_t base = static_cast<size_t>(batch_index) * t.c * plane;
  for (size_t i = 0; i < plane; ++i) {
    img.data[i] = static_cast<double>(t.v[base + i]) * 255.0;
  }
  return img;
}

template <class T>
TensorT<T> CoeffToTensor(const CoeffMap& coeffs, const BinSpec& bins) {
  if (coeffs.n_ch != bins.n_ch) {
    throw DataError("coeff_to_tensor: channel mismatch");
  }
  TensorT<T> t(1, coeffs.n_ch, coeffs.n_h, coeffs.n_w);
  for (int c = 0; c < coeffs.n_ch; ++c) {
    const double mean = bins.channel_mean[c];
    const double inv_std = 1.0 / bins.channel_std[c];
    for (int gy = 0; gy < coeffs.n_h; ++gy) {
      for (int gx = 0; gx < coeffs.n_w; ++gx) {
        t.at(0, c, gy, gx) =
            static_cast<T>((coeffs.at(gx, gy, c) - mean) * inv_std);
      }
    }
  }
  return t;
}

template <class T>
TensorT<T> ZeroCoeffTensor(int n_ch, int n_w, int n_h) {
  return TensorT<T>(1, n_ch, n_h, n_w);
}

inline ClassMap ArgmaxLabels(const ClassDistMap& dist) {
  ClassMap labels(dist.n_w, dist.n_h, dist.n_ch);
  for (int gy = 0; gy < dist.n_h; ++gy) {
    for (int gx = 0; gx < dist.n_w; ++gx) {
      for (int c = 0; c < dist.n_ch; ++c) {
        int best = 0;
        double best_p = dist.at(gx, gy, c, 0);
        for (int k = 1; k < dist.n_cl; ++k) {
          if (dist.at(gx, gy, c, k) > best_p) {
            best_p = dist.at(gx, gy, c, k);
            best = k;
          }
        }
        labels.at(gx, gy, c) = best;
      }
    }
  }
  return labels;
}

template <class T>
Classification Classify(ClassifierModelT<T>& model, const ImageBuffer& luma,
                        bool parallel) {
  Graph<T> g(parallel);
  TensorT<T>* x = g.Leaf(ImageToTensor<T>(luma));
  ClassifierOutputs<T> out = ClassifierForward(g, model, x);
  TensorT<T>* probs = out.probs.back();
  Classification result;
  result.dist = ClassDistMap(probs->w, probs->h, model.n_ch, model.n_cl);
  for (int gy = 0; gy < probs->h; ++gy) {
    for (int gx = 0; gx < probs->w; ++gx) {
      for (int c = 0; c < model.n_ch; ++c) {
        for (int k = 0; k < model.n_cl; ++k) {
          result.dist.at(gx, gy, c, k) =
              static_cast<double>(probs->at(0, c * model.n_cl + k, gy, gx));
        }
      }
    }
  }
  result.labels = ArgmaxLabels(result.dist);
  return result;
}

template <class T>
ImageBuffer Restore(ClassifierModelT<T>* classifier, CEDModelT<T>& ced,
                    const BinSpec& bins, const ImageBuffer& degraded,
                    RestoreMode mode, bool parallel) {
  if (degraded.planes != 1) throw DataError("restore: expected 1 plane");
  if (degraded.width % ced.w_b != 0 || degraded.height % ced.h_b != 0) {
    throw DataError("restore: dimensions not divisible by the patch size");
  }
  TensorT<T> q_tensor;
  if (mode == RestoreMode::kClassifier) {
    if (classifier == nullptr) {
      throw DataError("restore: classifier checkpoint required");
    }
    Classification cls = Classify(*classifier, degraded, parallel);
    q_tensor = CoeffToTensor<T>(ClassToCoeff(cls.labels, bins), bins);
  } else {
    q_tensor = ZeroCoeffTensor<T>(ced.n_ch, degraded.width / ced.w_b,
                                  degraded.height / ced.h_b);
  }
  Graph<T> g(parallel);
  TensorT<T>* x = g.Leaf(ImageToTensor<T>(degraded));
  TensorT<T>* f = FeatureForward(g, ced.enc, x);
  TensorT<T>* q = g.Leaf(std::move(q_tensor));
  TensorT<T>* out = DecoderForward(g, ced, f, q);
  return TensorToImage(*out);
}

}  // namespace freqres

#endif  // FREQRES_MODELS_IMPL_HPP_

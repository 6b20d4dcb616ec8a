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

#ifndef FREQRES_OPS_HPP_
#define FREQRES_OPS_HPP_

#include <cmath>
#include <deque>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "freqres/nnkernels.hpp"
#include "freqres/tensor.hpp"

namespace freqres {

// Reverse-mode tape over one forward pass. Tensors live in the graph's
// arena; parameters live outside and receive accumulated gradients.
// Build the forward once, call Backward once, then discard the graph.
template <class T>
class Graph {
 public:
  using Tensor = TensorT<T>;
  using Param = ParameterT<T>;

  explicit Graph(bool parallel_kernels = true) : parallel_(parallel_kernels) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Tensor* Leaf(Tensor value) {
    arena_.push_back(std::move(value));
    Tensor* t = &arena_.back();
    t->EnsureGrad();
    return t;
  }

  // Cross-correlation; weight shape (out_ch, in_ch, k, k), bias (out_ch,1,1,1).
  Tensor* Conv2d(Tensor* x, Param* weight, Param* bias, int stride, int pad) {
    const TensorT<T>& wt = weight->t;
    if (wt.h != wt.w) throw DataError("conv2d: non-square kernel");
    if (wt.c != x->c) throw DataError("conv2d: channel mismatch");
    if (bias->t.size() != wt.b) throw DataError("conv2d: bias size mismatch");
    const ConvShape s =
        ConvShape::Of(x->b, x->c, x->h, x->w, wt.b, wt.h, stride, pad);
    Tensor* out = NewTensor(s.batch, s.out_ch, s.out_h, s.out_w);
    Conv2dForward(x->v.data(), wt.v.data(), bias->t.v.data(), s,
                  out->v.data(), parallel_);
    weight->t.EnsureGrad();
    bias->t.EnsureGrad();
    const bool par = parallel_;
    tape_.push_back([x, weight, bias, out, s, par] {
      Conv2dBackwardInput(weight->t.v.data(), out->g.data(), s, x->g.data(),
                          par);
      Conv2dBackwardParams(x->v.data(), out->g.data(), s, weight->t.g.data(),
                           bias->t.g.data(), par);
    });
    return out;
  }

  Tensor* LeakyRelu(Tensor* x, T slope) {
    if (!(slope > T(0) && slope < T(1))) {
      throw DataError("leaky_relu: slope must be in (0, 1)");
    }
    Tensor* out = NewTensor(x->b, x->c, x->h, x->w);
    for (size_t i = 0; i < x->v.size(); ++i) {
      out->v[i] = x->v[i] >= T(0) ? x->v[i] : slope * x->v[i];
    }
    tape_.push_back([x, out, slope] {
      for (size_t i = 0; i < x->v.size(); ++i) {
        x->g[i] += out->g[i] * (x->v[i] >= T(0) ? T(1) : slope);
      }
    });
    return out;
  }

  // (B, C r^2, H, W) -> (B, C, H r, W r); input channel c r^2 + dy r + dx
  // lands at output offset (dy, dx) within each r x r cell.
  Tensor* PixelShuffle(Tensor* x, int r) {
    if (r < 1 || x->c % (r * r) != 0) {
      throw DataError("pixel_shuffle: channels not divisible by r^2");
    }
    const int oc = x->c / (r * r);
    Tensor* out = NewTensor(x->b, oc, x->h * r, x->w * r);
    for (int b = 0; b < x->b; ++b) {
      for (int c = 0; c < oc; ++c) {
        for (int oh = 0; oh < out->h; ++oh) {
          for (int ow = 0; ow < out->w; ++ow) {
            const int ic = c * r * r + (oh % r) * r + (ow % r);
            out->at(b, c, oh, ow) = x->at(b, ic, oh / r, ow / r);
          }
        }
      }
    }
    tape_.push_back([x, out, r, oc] {
      for (int b = 0; b < x->b; ++b) {
        for (int c = 0; c < oc; ++c) {
          for (int oh = 0; oh < out->h; ++oh) {
            for (int ow = 0; ow < out->w; ++ow) {
              const int ic = c * r * r + (oh % r) * r + (ow % r);
              x->g[x->index(b, ic, oh / r, ow / r)] +=
                  out->g[out->index(b, c, oh, ow)];
            }
          }
        }
      }
    });
    return out;
  }

  Tensor* Add(Tensor* a, Tensor* b) {
    if (!a->same_shape(*b)) throw DataError("add: shape mismatch");
    Tensor* out = NewTensor(a->b, a->c, a->h, a->w);
    for (size_t i = 0; i < a->v.size(); ++i) out->v[i] = a->v[i] + b->v[i];
    tape_.push_back([a, b, out] {
      for (size_t i = 0; i < a->v.size(); ++i) {
        a->g[i] += out->g[i];
        b->g[i] += out->g[i];
      }
    });
    return out;
  }

  Tensor* ConcatChannels(Tensor* a, Tensor* b) {
    if (a->b != b->b || a->h != b->h || a->w != b->w) {
      throw DataError("concat: spatial/batch mismatch");
    }
    Tensor* out = NewTensor(a->b, a->c + b->c, a->h, a->w);
    const size_t plane = static_cast<size_t>(a->h) * a->w;
    for (int bi = 0; bi < a->b; ++bi) {
      std::copy_n(&a->v[bi * a->c * plane], a->c * plane,
                  &out->v[bi * out->c * plane]);
      std::copy_n(&b->v[bi * b->c * plane], b->c * plane,
                  &out->v[bi * out->c * plane + a->c * plane]);
    }
    tape_.push_back([a, b, out, plane] {
      for (int bi = 0; bi < a->b; ++bi) {
        for (size_t i = 0; i < a->c * plane; ++i) {
          a->g[bi * a->c * plane + i] += out->g[bi * out->c * plane + i];
        }
        for (size_t i = 0; i < b->c * plane; ++i) {
          b->g[bi * b->c * plane + i] +=
              out->g[bi * out->c * plane + a->c * plane + i];
        }
      }
    });
    return out;
  }

  // Softmax over every consecutive group of n_cl channels, per spatial cell.
  Tensor* GroupSoftmax(Tensor* x, int n_cl) {
    if (n_cl < 1 || x->c % n_cl != 0) {
      throw DataError("group_softmax: channels not divisible by n_cl");
    }
    Tensor* out = NewTensor(x->b, x->c, x->h, x->w);
    const int groups = x->c / n_cl;
    const size_t plane = static_cast<size_t>(x->h) * x->w;
    for (int b = 0; b < x->b; ++b) {
      for (int g = 0; g < groups; ++g) {
        for (size_t p = 0; p < plane; ++p) {
          const size_t base =
              (static_cast<size_t>(b) * x->c + g * n_cl) * plane + p;
          T maxv = x->v[base];
          for (int k = 1; k < n_cl; ++k) {
            maxv = std::max(maxv, x->v[base + k * plane]);
          }
          T sum = T(0);
          for (int k = 0; k < n_cl; ++k) {
            const T e = std::exp(x->v[base + k * plane] - maxv);
            out->v[base + k * plane] = e;
            sum += e;
          }
          for (int k = 0; k < n_cl; ++k) out->v[base + k * plane] /= sum;
        }
      }
    }
    tape_.push_back([x, out, n_cl, groups, plane] {
      for (int b = 0; b < x->b; ++b) {
        for (int g = 0; g < groups; ++g) {
          for (size_t p = 0; p < plane; ++p) {
            const size_t base =
                (static_cast<size_t>(b) * x->c + g * n_cl) * plane + p;
            T dot = T(0);
            for (int k = 0; k < n_cl; ++k) {
              dot += out->v[base + k * plane] * out->g[base + k * plane];
            }
            for (int k = 0; k < n_cl; ++k) {
              x->g[base + k * plane] +=
                  out->v[base + k * plane] * (out->g[base + k * plane] - dot);
            }
          }
        }
      }
    });
    return out;
  }

  // Fused stable softmax + cross entropy, averaged over every
  // (batch, group, spatial) cell. Targets are indexed
  // ((b * groups + g) * h + y) * w + x; backward is (p - onehot) / count.
  Tensor* SoftmaxCrossEntropy(Tensor* logits, const std::vector<int>& targets,
                              int n_cl) {
    if (n_cl < 1 || logits->c % n_cl != 0) {
      throw DataError("softmax_ce: channels not divisible by n_cl");
    }
    const int groups = logits->c / n_cl;
    const size_t plane = static_cast<size_t>(logits->h) * logits->w;
    const size_t count = static_cast<size_t>(logits->b) * groups * plane;
    if (targets.size() != count) {
      throw DataError("softmax_ce: target count mismatch");
    }
    auto probs = std::make_shared<std::vector<T>>(logits->v.size());
    double loss = 0.0;
    size_t cell = 0;
    for (int b = 0; b < logits->b; ++b) {
      for (int g = 0; g < groups; ++g) {
        for (size_t p = 0; p < plane; ++p, ++cell) {
          const int target = targets[cell];
          if (target < 0 || target >= n_cl) {
            throw DataError("softmax_ce: target out of range");
          }
          const size_t base =
              (static_cast<size_t>(b) * logits->c + g * n_cl) * plane + p;
          T maxv = logits->v[base];
          for (int k = 1; k < n_cl; ++k) {
            maxv = std::max(maxv, logits->v[base + k * plane]);
          }
          T sum = T(0);
          for (int k = 0; k < n_cl; ++k) {
            const T e = std::exp(logits->v[base + k * plane] - maxv);
            (*probs)[base + k * plane] = e;
            sum += e;
          }
          for (int k = 0; k < n_cl; ++k) (*probs)[base + k * plane] /= sum;
          loss -= static_cast<double>(logits->v[base + target * plane] - maxv) -
                  std::log(static_cast<double>(sum));
        }
      }
    }
    Tensor* out = NewTensor(1, 1, 1, 1);
    out->v[0] = static_cast<T>(loss / static_cast<double>(count));
    tape_.push_back([logits, out, probs, targets, n_cl, groups, plane, count] {
      const T scale = out->g[0] / static_cast<T>(count);
      size_t cell = 0;
      for (int b = 0; b < logits->b; ++b) {
        for (int g = 0; g < groups; ++g) {
          for (size_t p = 0; p < plane; ++p, ++cell) {
            const size_t base =
                (static_cast<size_t>(b) * logits->c + g * n_cl) * plane + p;
            for (int k = 0; k < n_cl; ++k) {
              const T onehot = k == targets[cell] ? T(1) : T(0);
              logits->g[base + k * plane] +=
                  scale * ((*probs)[base + k * plane] - onehot);
            }
          }
        }
      }
    });
    return out;
  }

  // Mean of squared differences over all elements.
  Tensor* MseLoss(Tensor* pred, Tensor* target) {
    if (!pred->same_shape(*target)) throw DataError("mse: shape mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < pred->v.size(); ++i) {
      const double d = static_cast<double>(pred->v[i]) - target->v[i];
      sum += d * d;
    }
    Tensor* out = NewTensor(1, 1, 1, 1);
    const size_t n = pred->v.size();
    out->v[0] = static_cast<T>(sum / static_cast<double>(n));
    tape_.push_back([pred, target, out, n] {
      const T scale = out->g[0] * T(2) / static_cast<T>(n);
      for (size_t i = 0; i < n; ++i) {
        const T d = pred->v[i] - target->v[i];
        pred->g[i] += scale * d;
        target->g[i] -= scale * d;
      }
    });
    return out;
  }

  // Fixed-weight projection to a scalar; the reduction the finite-difference
  // oracle drives non-scalar ops through.
  Tensor* WeightedSum(Tensor* x, const std::vector<T>& weights) {
    if (weights.size() != x->v.size()) {
      throw DataError("weighted_sum: weight count mismatch");
    }
    double sum = 0.0;
    for (size_t i = 0; i < x->v.size(); ++i) {
      sum += static_cast<double>(weights[i]) * x->v[i];
    }
    Tensor* out = NewTensor(1, 1, 1, 1);
    out->v[0] = static_cast<T>(sum);
    auto w = std::make_shared<std::vector<T>>(weights);
    tape_.push_back([x, out, w] {
      for (size_t i = 0; i < x->v.size(); ++i) {
        x->g[i] += (*w)[i] * out->g[0];
      }
    });
    return out;
  }

  // Scalar linear combination, e.g. the (1/T) stage-loss average.
  Tensor* ScalarCombine(const std::vector<std::pair<T, Tensor*>>& terms) {
    if (terms.empty()) throw DataError("scalar_combine: no terms");
    double sum = 0.0;
    for (const auto& [coeff, t] : terms) {
      if (t->size() != 1) throw DataError("scalar_combine: non-scalar term");
      sum += static_cast<double>(coeff) * t->v[0];
    }
    Tensor* out = NewTensor(1, 1, 1, 1);
    out->v[0] = static_cast<T>(sum);
    auto terms_copy = std::make_shared<std::vector<std::pair<T, Tensor*>>>(terms);
    tape_.push_back([out, terms_copy] {
      for (auto& [coeff, t] : *terms_copy) t->g[0] += coeff * out->g[0];
    });
    return out;
  }

  // Seeds d(loss)/d(loss) = 1 and runs the tape in reverse. One shot.
  void Backward(Tensor* loss) {
    if (loss->size() != 1) throw DataError("backward: loss must be scalar");
    loss->g[0] = T(1);
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
  }

  bool parallel() const { return parallel_; }

 private:
  Tensor* NewTensor(int b, int c, int h, int w) {
    arena_.emplace_back(b, c, h, w);
    Tensor* t = &arena_.back();
    t->EnsureGrad();
    return t;
  }

  std::deque<Tensor> arena_;
  std::vector<std::function<void()>> tape_;
  bool parallel_;
};

// y = x + conv(lrelu(conv(x))), both convs 3x3 stride 1 pad 1.
template <class T>
TensorT<T>* ResidualBlock(Graph<T>& g, TensorT<T>* x, ParameterT<T>* w1,
                          ParameterT<T>* b1, ParameterT<T>* w2,
                          ParameterT<T>* b2, T slope) {
  TensorT<T>* h = g.Conv2d(x, w1, b1, 1, 1);
  h = g.LeakyRelu(h, slope);
  h = g.Conv2d(h, w2, b2, 1, 1);
  return g.Add(x, h);
}

}  // namespace freqres

#endif  // FREQRES_OPS_HPP_

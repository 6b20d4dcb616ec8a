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

#ifndef FREQRES_MODELS_HPP_
#define FREQRES_MODELS_HPP_

#include <string>
#include <vector>

#include "freqres/bins.hpp"
#include "freqres/ops.hpp"

namespace freqres {

inline constexpr double kLeakySlope = 0.2;

// Channel widths; the defaults are the reference architecture, every width
// stays configurable for small-machine training runs.
struct ModelDims {
  int stem = 32;          // first conv width of F / E
  int features = 64;      // n_f, the feature-map depth at grid resolution
  int stage_hidden = 128; // stage block width
  int up = 256;           // decoder pre-shuffle width (divisible by 4)
};

template <class T>
struct ConvParamT {
  ParameterT<T> w, b;
};

// Shared trunk of the classifier's feature extractor F and the encoder E:
// conv 1->stem, then two stride-2 blocks (conv + lrelu + residual) that
// bring the image to the w_b x h_b patch grid.
template <class T>
struct FeatureNetT {
  ConvParamT<T> conv1;
  ConvParamT<T> down1, res1a, res1b;
  ConvParamT<T> down2, res2a, res2b;
};

template <class T>
struct StageBlockT {
  ConvParamT<T> conv1, conv2, head;
};

template <class T>
struct ClassifierModelT {
  ModelDims dims;
  int w_b = 4, h_b = 4, n_cl = 7, n_ch = 16;
  FeatureNetT<T> f;
  std::vector<StageBlockT<T>> stages;

  int stage_count() const { return static_cast<int>(stages.size()); }
  std::vector<ParameterT<T>*> Parameters();
};

template <class T>
struct CEDModelT {
  ModelDims dims;
  int w_b = 4, h_b = 4, n_ch = 16;
  FeatureNetT<T> enc;
  ConvParamT<T> d_in;            // (features + n_ch) -> features
  ConvParamT<T> d_res_a, d_res_b;
  ConvParamT<T> d_up1, d_up2;    // -> up, pixel-shuffled down by 4
  ConvParamT<T> d_out;           // -> 1, no activation after

  std::vector<ParameterT<T>*> Parameters();
};

template <class T>
ClassifierModelT<T> MakeClassifier(const ModelDims& dims, int w_b, int h_b,
                                   int n_cl, int stages);
template <class T>
CEDModelT<T> MakeCed(const ModelDims& dims, int w_b, int h_b);

// Kaiming-uniform fan-in init for conv weights (leaky-ReLU gain), zero bias.
template <class T>
void InitParameters(const std::vector<ParameterT<T>*>& params, Rng& rng);

// x [B, 1, h, w] -> feature map [B, features, h/4, w/4]; h, w must be
// divisible by w_b (the net is fully convolutional beyond that).
template <class T>
TensorT<T>* FeatureForward(Graph<T>& g, FeatureNetT<T>& net, TensorT<T>* x);

// One stage block: softmax logits for every (patch, channel) cell.
// t is 0-based; stages beyond the first concatenate the previous stage's
// probability map to the feature map.
template <class T>
TensorT<T>* StageLogits(Graph<T>& g, ClassifierModelT<T>& model, int t,
                        TensorT<T>* f, TensorT<T>* prev_probs);

template <class T>
struct ClassifierOutputs {
  TensorT<T>* features = nullptr;
  std::vector<TensorT<T>*> logits;  // per stage
  std::vector<TensorT<T>*> probs;   // per stage (GroupSoftmax of logits)
};

template <class T>
ClassifierOutputs<T> ClassifierForward(Graph<T>& g, ClassifierModelT<T>& model,
                                       TensorT<T>* x);

// concat(f, q) -> conv + lrelu + residual -> two (conv, shuffle x2, lrelu)
// upsampling blocks -> output conv, no activation.
template <class T>
TensorT<T>* DecoderForward(Graph<T>& g, CEDModelT<T>& model, TensorT<T>* f,
                           TensorT<T>* q);

// Image <-> tensor plumbing: pixels map to [0, 1] on the way in and back
// to a Real [0, 255] buffer on the way out.
template <class T>
TensorT<T> ImageToTensor(const ImageBuffer& img);
template <class T>
ImageBuffer TensorToImage(const TensorT<T>& t, int batch_index = 0);

// Coefficient map as a normalized n_ch-channel tensor at grid resolution.
template <class T>
TensorT<T> CoeffToTensor(const CoeffMap& coeffs, const BinSpec& bins);
template <class T>
TensorT<T> ZeroCoeffTensor(int n_ch, int n_w, int n_h);

struct Classification {
  ClassDistMap dist;  // final stage
  ClassMap labels;    // argmax, lowest index wins ties
};

// Runs the classifier on one luma image (any domain; values on [0, 255]).
template <class T>
Classification Classify(ClassifierModelT<T>& model, const ImageBuffer& luma,
                        bool parallel = true);

// Lowest-index argmax over the class axis.
ClassMap ArgmaxLabels(const ClassDistMap& dist);

enum class RestoreMode {
  kClassifier,  // decoder conditioned on the classifier's coefficients
  kZero,        // ED baseline: zero coefficient map
};

// Full restoration of one degraded luma image. `classifier` may be null in
// kZero mode. Output is a Real buffer; clamping happens only at save time.
template <class T>
ImageBuffer Restore(ClassifierModelT<T>* classifier, CEDModelT<T>& ced,
                    const BinSpec& bins, const ImageBuffer& degraded,
                    RestoreMode mode, bool parallel = true);

}  // namespace freqres

#include "freqres/models_impl.hpp"

#endif  // FREQRES_MODELS_HPP_

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

#include "freqres/gradcheck.hpp"

#include "freqres/models.hpp"
#include "freqres/ops.hpp"

namespace freqres {

namespace {

using Tensor = TensorT<double>;
using Param = ParameterT<double>;

std::vector<double> RandomVector(Rng& rng, size_t n, double lim = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.Uniform(-lim, lim);
  return v;
}

// Keeps leaky-ReLU probes away from the kink at zero, where the one-sided
// derivative makes finite differences meaningless.
std::vector<double> RandomAwayFromZero(Rng& rng, size_t n, double margin) {
  std::vector<double> v(n);
  for (double& x : v) {
    do {
      x = rng.Uniform(-1.0, 1.0);
    } while (std::abs(x) < margin);
  }
  return v;
}

Tensor FromFlat(const std::vector<double>& flat, int b, int c, int h, int w) {
  Tensor t(b, c, h, w);
  t.v = flat;
  return t;
}

// Checks d(loss)/d(input) for a graph builder that maps an input tensor to
// a scalar loss node.
double CheckInput(
    const std::vector<double>& point, int b, int c, int h, int w,
    const std::function<Tensor*(Graph<double>&, Tensor*)>& build) {
  GradEvalFn eval = [&](const std::vector<double>& x,
                        std::vector<double>* grad) -> double {
    Graph<double> g(false);
    Tensor* in = g.Leaf(FromFlat(x, b, c, h, w));
    Tensor* loss = build(g, in);
    if (grad) {
      g.Backward(loss);
      grad->assign(in->g.begin(), in->g.end());
    }
    return loss->v[0];
  };
  return GradCheckMaxRelErr(eval, point);
}

// Checks d(loss)/d(param) for a fixed-input graph builder.
double CheckParam(Param* param,
                  const std::function<Tensor*(Graph<double>&)>& build) {
  GradEvalFn eval = [&](const std::vector<double>& x,
                        std::vector<double>* grad) -> double {
    param->t.v = x;
    param->t.ZeroGrad();
    Graph<double> g(false);
    Tensor* loss = build(g);
    if (grad) {
      g.Backward(loss);
      grad->assign(param->t.g.begin(), param->t.g.end());
    }
    return loss->v[0];
  };
  return GradCheckMaxRelErr(eval, param->t.v);
}

struct CaseResult {
  double err = 0.0;
  void Fold(double e) { err = std::max(err, e); }
};

}  // namespace

std::vector<GradCheckEntry> RunGradCheckSuite(int n_seeds) {
  CaseResult conv_input, conv_weight, conv_bias, lrelu, shuffle, residual,
      gsoftmax, ce, mse, concat, classifier_stub, ced_stub;

  for (int seed = 1; seed <= n_seeds; ++seed) {
    Rng rng(static_cast<uint64_t>(seed) * 7919);

    // conv2d over the (stride, pad, k) grid; linear in the input.
    for (int stride : {1, 2}) {
      for (int pad : {0, 1}) {
        for (int k : {1, 3}) {
          if (4 + 2 * pad < k) continue;
          Param w("w.w", 3, 2, k, k);
          w.t.v = RandomVector(rng, w.t.v.size());
          Param b("b.b", 3, 1, 1, 1);
          b.t.v = RandomVector(rng, 3);
          const auto weights = RandomVector(
              rng, static_cast<size_t>(2) * 3 * ((4 + 2 * pad - k) / stride + 1) *
                       ((6 + 2 * pad - k) / stride + 1));
          auto project = [&](Graph<double>& g, Tensor* out) {
            return g.WeightedSum(out, weights);
          };
          conv_input.Fold(CheckInput(
              RandomVector(rng, 2 * 2 * 4 * 6), 2, 2, 4, 6,
              [&](Graph<double>& g, Tensor* in) {
                return project(g, g.Conv2d(in, &w, &b, stride, pad));
              }));
          Tensor input = FromFlat(RandomVector(rng, 2 * 2 * 4 * 6), 2, 2, 4, 6);
          conv_weight.Fold(CheckParam(&w, [&](Graph<double>& g) {
            return project(g, g.Conv2d(g.Leaf(input), &w, &b, stride, pad));
          }));
          conv_bias.Fold(CheckParam(&b, [&](Graph<double>& g) {
            return project(g, g.Conv2d(g.Leaf(input), &w, &b, stride, pad));
          }));
        }
      }
    }

    {
      const auto weights = RandomVector(rng, 1 * 3 * 4 * 4);
      lrelu.Fold(CheckInput(RandomAwayFromZero(rng, 1 * 3 * 4 * 4, 0.05), 1, 3,
                            4, 4, [&](Graph<double>& g, Tensor* in) {
                              return g.WeightedSum(g.LeakyRelu(in, 0.2),
                                                   weights);
                            }));
    }

    {
      const auto weights = RandomVector(rng, 1 * 2 * 4 * 6);
      shuffle.Fold(CheckInput(RandomVector(rng, 1 * 8 * 2 * 3), 1, 8, 2, 3,
                              [&](Graph<double>& g, Tensor* in) {
                                return g.WeightedSum(g.PixelShuffle(in, 2),
                                                     weights);
                              }));
    }

    {
      Param w1("r1.w", 4, 4, 3, 3), w2("r2.w", 4, 4, 3, 3);
      Param b1("r1.b", 4, 1, 1, 1), b2("r2.b", 4, 1, 1, 1);
      w1.t.v = RandomVector(rng, w1.t.v.size(), 0.5);
      w2.t.v = RandomVector(rng, w2.t.v.size(), 0.5);
      b1.t.v = RandomVector(rng, 4, 0.1);
      b2.t.v = RandomVector(rng, 4, 0.1);
      const auto weights = RandomVector(rng, 1 * 4 * 6 * 6);
      auto body = [&](Graph<double>& g, Tensor* in) {
        return g.WeightedSum(
            ResidualBlock(g, in, &w1, &b1, &w2, &b2, 0.2), weights);
      };
      residual.Fold(CheckInput(RandomAwayFromZero(rng, 1 * 4 * 6 * 6, 0.02), 1,
                               4, 6, 6, body));
      Tensor input =
          FromFlat(RandomAwayFromZero(rng, 1 * 4 * 6 * 6, 0.02), 1, 4, 6, 6);
      residual.Fold(CheckParam(&w1, [&](Graph<double>& g) {
        return body(g, g.Leaf(input));
      }));
    }

    {
      const auto weights = RandomVector(rng, 1 * 6 * 2 * 2);
      gsoftmax.Fold(CheckInput(RandomVector(rng, 1 * 6 * 2 * 2, 2.0), 1, 6, 2,
                               2, [&](Graph<double>& g, Tensor* in) {
                                 return g.WeightedSum(g.GroupSoftmax(in, 3),
                                                      weights);
                               }));
    }

    {
      std::vector<int> targets(1 * 2 * 2 * 2);
      for (int& t : targets) t = static_cast<int>(rng.Below(3));
      ce.Fold(CheckInput(RandomVector(rng, 1 * 6 * 2 * 2, 2.0), 1, 6, 2, 2,
                         [&](Graph<double>& g, Tensor* in) {
                           return g.SoftmaxCrossEntropy(in, targets, 3);
                         }));
    }

    {
      Tensor target = FromFlat(RandomVector(rng, 1 * 2 * 3 * 3), 1, 2, 3, 3);
      mse.Fold(CheckInput(RandomVector(rng, 1 * 2 * 3 * 3), 1, 2, 3, 3,
                          [&](Graph<double>& g, Tensor* in) {
                            return g.MseLoss(in, g.Leaf(target));
                          }));
    }

    {
      Tensor other = FromFlat(RandomVector(rng, 1 * 3 * 2 * 2), 1, 3, 2, 2);
      const auto weights = RandomVector(rng, 1 * 5 * 2 * 2);
      concat.Fold(CheckInput(RandomVector(rng, 1 * 2 * 2 * 2), 1, 2, 2, 2,
                             [&](Graph<double>& g, Tensor* in) {
                               return g.WeightedSum(
                                   g.ConcatChannels(in, g.Leaf(other)),
                                   weights);
                             }));
    }

    // Composed classifier stub: full loss through both stages.
    {
      ModelDims dims;
      dims.stem = 4;
      dims.features = 6;
      dims.stage_hidden = 6;
      auto model = MakeClassifier<double>(dims, 4, 4, 3, 2);
      Rng init = rng.Fork(1);
      InitParameters(model.Parameters(), init);
      std::vector<int> targets(1 * 16 * 2 * 2);
      for (int& t : targets) t = static_cast<int>(rng.Below(3));
      auto loss = [&](Graph<double>& g, Tensor* in) -> Tensor* {
        ClassifierOutputs<double> out = ClassifierForward(g, model, in);
        std::vector<std::pair<double, Tensor*>> terms;
        for (Tensor* logits : out.logits) {
          terms.emplace_back(1.0 / out.logits.size(),
                             g.SoftmaxCrossEntropy(logits, targets, 3));
        }
        return g.ScalarCombine(terms);
      };
      classifier_stub.Fold(
          CheckInput(RandomVector(rng, 8 * 8), 1, 1, 8, 8, loss));
      Tensor input = FromFlat(RandomVector(rng, 8 * 8), 1, 1, 8, 8);
      classifier_stub.Fold(CheckParam(
          &model.f.conv1.w, [&](Graph<double>& g) { return loss(g, g.Leaf(input)); }));
      classifier_stub.Fold(CheckParam(
          &model.stages[0].head.w,
          [&](Graph<double>& g) { return loss(g, g.Leaf(input)); }));
    }

    // Composed encoder/decoder stub: reconstruction loss end to end.
    {
      ModelDims dims;
      dims.stem = 4;
      dims.features = 6;
      dims.up = 8;
      auto model = MakeCed<double>(dims, 4, 4);
      Rng init = rng.Fork(2);
      InitParameters(model.Parameters(), init);
      Tensor target = FromFlat(RandomVector(rng, 8 * 8), 1, 1, 8, 8);
      Tensor q = FromFlat(RandomVector(rng, 16 * 2 * 2), 1, 16, 2, 2);
      auto loss = [&](Graph<double>& g, Tensor* in) -> Tensor* {
        Tensor* f = FeatureForward(g, model.enc, in);
        Tensor* out = DecoderForward(g, model, f, g.Leaf(q));
        return g.MseLoss(out, g.Leaf(target));
      };
      ced_stub.Fold(CheckInput(RandomVector(rng, 8 * 8), 1, 1, 8, 8, loss));
      Tensor input = FromFlat(RandomVector(rng, 8 * 8), 1, 1, 8, 8);
      ced_stub.Fold(CheckParam(
          &model.d_up1.w, [&](Graph<double>& g) { return loss(g, g.Leaf(input)); }));
      ced_stub.Fold(CheckParam(
          &model.enc.down1.w, [&](Graph<double>& g) { return loss(g, g.Leaf(input)); }));
    }
  }

  return {
      {"conv2d.input", conv_input.err, 1e-7, true},
      {"conv2d.weights", conv_weight.err, 1e-7, true},
      {"conv2d.bias", conv_bias.err, 1e-7, true},
      {"leaky_relu", lrelu.err, 1e-4, false},
      {"pixel_shuffle", shuffle.err, 1e-7, true},
      {"residual_block", residual.err, 1e-4, false},
      {"group_softmax", gsoftmax.err, 1e-4, false},
      {"softmax_ce", ce.err, 1e-4, false},
      {"mse_loss", mse.err, 1e-4, false},
      {"concat", concat.err, 1e-7, true},
      {"classifier_stub", classifier_stub.err, 1e-4, false},
      {"ced_stub", ced_stub.err, 1e-4, false},
  };
}

}  // namespace freqres

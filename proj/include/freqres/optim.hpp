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

#ifndef FREQRES_OPTIM_HPP_
#define FREQRES_OPTIM_HPP_

#include <cmath>
#include <vector>

#include "freqres/tensor.hpp"

namespace freqres {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction; gradients are cleared afterwards.
template <class T>
void AdamStep(const std::vector<ParameterT<T>*>& params,
              const AdamConfig& cfg) {
  for (ParameterT<T>* p : params) {
    const size_t n = p->t.v.size();
    if (p->t.g.size() != n) {
      throw NumericError("adam_step: missing gradients for " + p->name);
    }
    if (p->adam_m.size() != n) {
      p->adam_m.assign(n, T(0));
      p->adam_v.assign(n, T(0));
    }
    p->step_count += 1;
    const T b1 = static_cast<T>(cfg.beta1);
    const T b2 = static_cast<T>(cfg.beta2);
    const T m_corr = static_cast<T>(
        1.0 / (1.0 - std::pow(cfg.beta1, static_cast<double>(p->step_count))));
    const T v_corr = static_cast<T>(
        1.0 / (1.0 - std::pow(cfg.beta2, static_cast<double>(p->step_count))));
    const T lr = static_cast<T>(cfg.lr);
    const T eps = static_cast<T>(cfg.eps);
    for (size_t i = 0; i < n; ++i) {
      const T grad = p->t.g[i];
      p->adam_m[i] = b1 * p->adam_m[i] + (T(1) - b1) * grad;
      p->adam_v[i] = b2 * p->adam_v[i] + (T(1) - b2) * grad * grad;
      const T m_hat = p->adam_m[i] * m_corr;
      const T v_hat = p->adam_v[i] * v_corr;
      p->t.v[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
    p->t.ZeroGrad();
  }
}

}  // namespace freqres

#endif  // FREQRES_OPTIM_HPP_

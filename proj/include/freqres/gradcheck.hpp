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

#ifndef FREQRES_GRADCHECK_HPP_
#define FREQRES_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace freqres {

// eval(point, grad): forward loss at `point`; when grad is non-null, also
// fill the analytic gradient (same length as point).
using GradEvalFn =
    std::function<double(const std::vector<double>&, std::vector<double>*)>;

// Central finite differences per coordinate at 64-bit precision. Returns
// max over coordinates of |analytic - numeric| / max(1e-8, |a| + |n|).
inline double GradCheckMaxRelErr(const GradEvalFn& eval,
                                 std::vector<double> point,
                                 double eps = 1e-5) {
  std::vector<double> analytic(point.size(), 0.0);
  eval(point, &analytic);
  double max_err = 0.0;
  for (size_t i = 0; i < point.size(); ++i) {
    const double keep = point[i];
    point[i] = keep + eps;
    const double up = eval(point, nullptr);
    point[i] = keep - eps;
    const double down = eval(point, nullptr);
    point[i] = keep;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom =
        std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
    max_err = std::max(max_err, std::abs(analytic[i] - numeric) / denom);
  }
  return max_err;
}

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 1e-4;
  bool linear = false;  // linear maps must hit 1e-7
};

// Every differentiable operator plus composed classifier and
// encoder/decoder stubs, randomized over `n_seeds` seeds; the worst
// relative error per case is reported.
std::vector<GradCheckEntry> RunGradCheckSuite(int n_seeds = 3);

}  // namespace freqres

#endif  // FREQRES_GRADCHECK_HPP_

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

#include <doctest.h>
#include <omp.h>

#include "freqres/nnkernels.hpp"
#include "freqres/tensor.hpp"
#include "testutil.hpp"

using namespace freqres;

namespace {

std::vector<double> RandomVec(Rng& rng, size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.Uniform(-1.0, 1.0);
  return v;
}

}  // namespace

// The OpenMP kernels must reproduce the serial reference bit for bit: the
// parallel loops only split disjoint output slices and never reorder the
// per-element accumulation.
TEST_SUITE("kernels") {

TEST_CASE("conv kernels match their serial reference bit-exactly") {
  Rng rng(901);
  for (int stride : {1, 2}) {
    for (int pad : {0, 1}) {
      for (int k : {1, 3}) {
        for (const auto& [h, w] : std::vector<std::pair<int, int>>{
                 {9, 13}, {16, 16}, {5, 24}}) {
          if (h + 2 * pad < k || w + 2 * pad < k) continue;
          const ConvShape s = ConvShape::Of(3, 4, h, w, 5, k, stride, pad);
          const auto x = RandomVec(rng, static_cast<size_t>(3) * 4 * h * w);
          const auto weight = RandomVec(rng, static_cast<size_t>(5) * 4 * k * k);
          const auto bias = RandomVec(rng, 5);
          const size_t out_n = static_cast<size_t>(3) * 5 * s.out_h * s.out_w;

          std::vector<double> out_p(out_n), out_s(out_n);
          Conv2dForward(x.data(), weight.data(), bias.data(), s, out_p.data(), true);
          Conv2dForward(x.data(), weight.data(), bias.data(), s, out_s.data(), false);
          CHECK(out_p == out_s);

          const auto dout = RandomVec(rng, out_n);
          std::vector<double> dx_p(x.size(), 0.0), dx_s(x.size(), 0.0);
          Conv2dBackwardInput(weight.data(), dout.data(), s, dx_p.data(), true);
          Conv2dBackwardInput(weight.data(), dout.data(), s, dx_s.data(), false);
          CHECK(dx_p == dx_s);

          std::vector<double> dw_p(weight.size(), 0.0), dw_s(weight.size(), 0.0);
          std::vector<double> db_p(5, 0.0), db_s(5, 0.0);
          Conv2dBackwardParams(x.data(), dout.data(), s, dw_p.data(), db_p.data(), true);
          Conv2dBackwardParams(x.data(), dout.data(), s, dw_s.data(), db_s.data(), false);
          CHECK(dw_p == dw_s);
          CHECK(db_p == db_s);
        }
      }
    }
  }
}

TEST_CASE("results do not depend on the thread count") {
  Rng rng(907);
  const ConvShape s = ConvShape::Of(2, 3, 17, 11, 4, 3, 1, 1);
  const auto x = RandomVec(rng, static_cast<size_t>(2) * 3 * 17 * 11);
  const auto weight = RandomVec(rng, static_cast<size_t>(4) * 3 * 9);
  const auto bias = RandomVec(rng, 4);
  const size_t out_n = static_cast<size_t>(2) * 4 * s.out_h * s.out_w;

  const int saved = omp_get_max_threads();
  std::vector<std::vector<double>> results;
  for (int threads : {1, 2, 4}) {
    omp_set_num_threads(threads);
    std::vector<double> out(out_n);
    Conv2dForward(x.data(), weight.data(), bias.data(), s, out.data(), true);
    results.push_back(std::move(out));
  }
  omp_set_num_threads(saved);
  CHECK(results[0] == results[1]);
  CHECK(results[0] == results[2]);
}

TEST_CASE("conv shape construction rejects oversized kernels") {
  CHECK_THROWS_AS(ConvShape::Of(1, 1, 2, 2, 1, 5, 1, 0), DataError);
}

}  // TEST_SUITE

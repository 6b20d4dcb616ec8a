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

#ifndef FREQRES_TENSOR_HPP_
#define FREQRES_TENSOR_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "freqres/common.hpp"

namespace freqres {

// Rank-4 array (batch, channels, height, width) with an optional gradient
// slot of the same shape. Values are dense row-major in (b, c, h, w).
template <class T>
struct TensorT {
  int b = 0, c = 0, h = 0, w = 0;
  std::vector<T> v;
  std::vector<T> g;

  TensorT() = default;
  TensorT(int b_, int c_, int h_, int w_)
      : b(b_), c(c_), h(h_), w(w_),
        v(static_cast<size_t>(b_) * c_ * h_ * w_, T(0)) {}

  int64_t size() const { return static_cast<int64_t>(b) * c * h * w; }

  size_t index(int bi, int ci, int y, int x) const {
    return ((static_cast<size_t>(bi) * c + ci) * h + y) * w + x;
  }
  T& at(int bi, int ci, int y, int x) { return v[index(bi, ci, y, x)]; }
  T at(int bi, int ci, int y, int x) const { return v[index(bi, ci, y, x)]; }

  bool same_shape(const TensorT& o) const {
    return b == o.b && c == o.c && h == o.h && w == o.w;
  }

  void EnsureGrad() {
    if (g.size() != v.size()) g.assign(v.size(), T(0));
  }
  void ZeroGrad() {
    if (!g.empty()) std::fill(g.begin(), g.end(), T(0));
  }
};

// Learnable tensor with Adam moment state.
template <class T>
struct ParameterT {
  std::string name;
  TensorT<T> t;
  std::vector<T> adam_m, adam_v;
  int64_t step_count = 0;

  ParameterT() = default;
  ParameterT(std::string n, int b, int c, int h, int w)
      : name(std::move(n)), t(b, c, h, w) {}
};

using Tensor32 = TensorT<float>;
using Tensor64 = TensorT<double>;

}  // namespace freqres

#endif  // FREQRES_TENSOR_HPP_

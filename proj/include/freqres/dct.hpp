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

#ifndef FREQRES_DCT_HPP_
#define FREQRES_DCT_HPP_

#include <vector>

#include "freqres/image.hpp"

namespace freqres {

// Per-patch DCT coefficients on an n_w x n_h grid with n_ch = w_b * h_b
// frequency channels. Channel c maps to frequency (u, v) as c = u * w_b + v,
// row-major with (0, 0) the DC term.
struct CoeffMap {
  int n_w = 0, n_h = 0, n_ch = 0;
  std::vector<double> values;  // [(gy * n_w + gx) * n_ch + c]

  CoeffMap() = default;
  CoeffMap(int nw, int nh, int nch)
      : n_w(nw), n_h(nh), n_ch(nch),
        values(static_cast<size_t>(nw) * nh * nch, 0.0) {}

  double& at(int gx, int gy, int c) {
    return values[(static_cast<size_t>(gy) * n_w + gx) * n_ch + c];
  }
  double at(int gx, int gy, int c) const {
    return values[(static_cast<size_t>(gy) * n_w + gx) * n_ch + c];
  }
};

// Orthonormal DCT-II basis for size n (supported: 4 and 8), row-major
// [k * n + i]: basis[k][i] = a_k cos((2i + 1) k pi / 2n), a_0 = sqrt(1/n),
// a_k = sqrt(2/n). Orthonormality gives Parseval for free.
const std::vector<double>& DctBasis(int n);

// 2-D orthonormal DCT-II of an n x n block (row-major). n must be 4 or 8.
std::vector<double> Dct2(const std::vector<double>& block, int n);

// Exact inverse of Dct2.
std::vector<double> Idct2(const std::vector<double>& coeffs, int n);

// Tiles a 1-plane image into non-overlapping w_b x h_b patches and
// transforms each. Image dimensions must be divisible by the patch size.
CoeffMap PatchDct(const ImageBuffer& img, int w_b, int h_b);
CoeffMap PatchDctSerial(const ImageBuffer& img, int w_b, int h_b);

// Blockwise inverse; reassembles the tiles into an image (domain Real).
ImageBuffer PatchIdct(const CoeffMap& coeffs, int w_b, int h_b);
ImageBuffer PatchIdctSerial(const CoeffMap& coeffs, int w_b, int h_b);

}  // namespace freqres

#endif  // FREQRES_DCT_HPP_

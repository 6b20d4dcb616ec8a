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

#include "freqres/dct.hpp"

#include <cmath>

namespace freqres {

namespace {

std::vector<double> MakeBasis(int n) {
  std::vector<double> basis(static_cast<size_t>(n) * n);
  const double a0 = std::sqrt(1.0 / n);
  const double ak = std::sqrt(2.0 / n);
  for (int k = 0; k < n; ++k) {
    const double a = (k == 0) ? a0 : ak;
    for (int i = 0; i < n; ++i) {
      basis[static_cast<size_t>(k) * n + i] =
          a * std::cos((2 * i + 1) * k * M_PI / (2.0 * n));
    }
  }
  return basis;
}

void CheckBlockSize(int n) {
  if (n != 4 && n != 8) {
    throw DataError("dct2: unsupported block size " + std::to_string(n));
  }
}

// out = Ch * X * Cw^T for an h x w block; forward when the bases are the
// DCT matrices, inverse when both are transposed (handled by the flag).
void SeparableTransform(const double* in, double* out, int h, int w,
                        const double* ch, const double* cw, bool inverse) {
  double tmp[64];
  // rows: tmp = (Ch op) * in, where op is transpose for the inverse.
  for (int u = 0; u < h; ++u) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int y = 0; y < h; ++y) {
        const double c = inverse ? ch[static_cast<size_t>(y) * h + u]
                                 : ch[static_cast<size_t>(u) * h + y];
        s += c * in[static_cast<size_t>(y) * w + x];
      }
      tmp[static_cast<size_t>(u) * w + x] = s;
    }
  }
  // cols: out = tmp * (Cw op)^T.
  for (int u = 0; u < h; ++u) {
    for (int v = 0; v < w; ++v) {
      double s = 0.0;
      for (int x = 0; x < w; ++x) {
        const double c = inverse ? cw[static_cast<size_t>(x) * w + v]
                                 : cw[static_cast<size_t>(v) * w + x];
        s += tmp[static_cast<size_t>(u) * w + x] * c;
      }
      out[static_cast<size_t>(u) * w + v] = s;
    }
  }
}

}  // namespace

const std::vector<double>& DctBasis(int n) {
  CheckBlockSize(n);
  static const std::vector<double> basis4 = MakeBasis(4);
  static const std::vector<double> basis8 = MakeBasis(8);
  return n == 4 ? basis4 : basis8;
}

std::vector<double> Dct2(const std::vector<double>& block, int n) {
  CheckBlockSize(n);
  if (block.size() != static_cast<size_t>(n) * n) {
    throw DataError("dct2: block is not square of size n");
  }
  std::vector<double> out(block.size());
  const double* basis = DctBasis(n).data();
  SeparableTransform(block.data(), out.data(), n, n, basis, basis, false);
  return out;
}

std::vector<double> Idct2(const std::vector<double>& coeffs, int n) {
  CheckBlockSize(n);
  if (coeffs.size() != static_cast<size_t>(n) * n) {
    throw DataError("idct2: block is not square of size n");
  }
  std::vector<double> out(coeffs.size());
  const double* basis = DctBasis(n).data();
  SeparableTransform(coeffs.data(), out.data(), n, n, basis, basis, true);
  return out;
}

namespace {

void CheckPatchArgs(int w_b, int h_b) {
  CheckBlockSize(w_b);
  CheckBlockSize(h_b);
}

void PatchDctRow(const ImageBuffer& img, int w_b, int h_b, int gy,
                 CoeffMap& out) {
  const double* ch = DctBasis(h_b).data();
  const double* cw = DctBasis(w_b).data();
  double block[64], freq[64];
  for (int gx = 0; gx < out.n_w; ++gx) {
    for (int y = 0; y < h_b; ++y) {
      for (int x = 0; x < w_b; ++x) {
        block[static_cast<size_t>(y) * w_b + x] =
            img.at(0, gy * h_b + y, gx * w_b + x);
      }
    }
    SeparableTransform(block, freq, h_b, w_b, ch, cw, false);
    for (int c = 0; c < out.n_ch; ++c) out.at(gx, gy, c) = freq[c];
  }
}

void PatchIdctRow(const CoeffMap& coeffs, int w_b, int h_b, int gy,
                  ImageBuffer& out) {
  const double* ch = DctBasis(h_b).data();
  const double* cw = DctBasis(w_b).data();
  double freq[64], block[64];
  for (int gx = 0; gx < coeffs.n_w; ++gx) {
    for (int c = 0; c < coeffs.n_ch; ++c) freq[c] = coeffs.at(gx, gy, c);
    SeparableTransform(freq, block, h_b, w_b, ch, cw, true);
    for (int y = 0; y < h_b; ++y) {
      for (int x = 0; x < w_b; ++x) {
        out.at(0, gy * h_b + y, gx * w_b + x) =
            block[static_cast<size_t>(y) * w_b + x];
      }
    }
  }
}

CoeffMap PatchDctImpl(const ImageBuffer& img, int w_b, int h_b, bool parallel) {
  CheckPatchArgs(w_b, h_b);
  if (img.planes != 1) throw DataError("patch_dct: expected 1 plane");
  if (img.width % w_b != 0 || img.height % h_b != 0) {
    throw DataError("patch_dct: dimensions not divisible by patch size");
  }
  CoeffMap out(img.width / w_b, img.height / h_b, w_b * h_b);
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int gy = 0; gy < out.n_h; ++gy) PatchDctRow(img, w_b, h_b, gy, out);
  } else {
    for (int gy = 0; gy < out.n_h; ++gy) PatchDctRow(img, w_b, h_b, gy, out);
  }
  return out;
}

ImageBuffer PatchIdctImpl(const CoeffMap& coeffs, int w_b, int h_b,
                          bool parallel) {
  CheckPatchArgs(w_b, h_b);
  if (coeffs.n_ch != w_b * h_b) {
    throw DataError("patch_idct: channel count does not match patch size");
  }
  ImageBuffer out(coeffs.n_w * w_b, coeffs.n_h * h_b, 1, Domain::kReal);
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int gy = 0; gy < coeffs.n_h; ++gy) PatchIdctRow(coeffs, w_b, h_b, gy, out);
  } else {
    for (int gy = 0; gy < coeffs.n_h; ++gy) PatchIdctRow(coeffs, w_b, h_b, gy, out);
  }
  return out;
}

}  // namespace

CoeffMap PatchDct(const ImageBuffer& img, int w_b, int h_b) {
  return PatchDctImpl(img, w_b, h_b, true);
}

CoeffMap PatchDctSerial(const ImageBuffer& img, int w_b, int h_b) {
  return PatchDctImpl(img, w_b, h_b, false);
}

ImageBuffer PatchIdct(const CoeffMap& coeffs, int w_b, int h_b) {
  return PatchIdctImpl(coeffs, w_b, h_b, true);
}

ImageBuffer PatchIdctSerial(const CoeffMap& coeffs, int w_b, int h_b) {
  return PatchIdctImpl(coeffs, w_b, h_b, false);
}

}  // namespace freqres

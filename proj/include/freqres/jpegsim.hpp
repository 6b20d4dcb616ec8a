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

#ifndef FREQRES_JPEGSIM_HPP_
#define FREQRES_JPEGSIM_HPP_

#include <array>

#include "freqres/image.hpp"

namespace freqres {

// Scaled luminance quantization table.
struct QTable {
  std::array<int, 64> entries;  // row-major 8x8, each in [1, 255]
  int quality_factor = 0;
};

// The standard luminance table (T.81 Annex K).
const std::array<int, 64>& StandardLuminanceTable();

// IJG scaling: scale = 5000/qf below 50, else 200 - 2*qf;
// entry' = clamp(floor((entry * scale + 50) / 100), 1, 255).
QTable QualityTable(int qf);

// Simulated JPEG luminance degradation: per 8x8 block, level shift by -128,
// orthonormal DCT, divide by the quality table and round half away from
// zero, multiply back, inverse DCT, shift, round, clamp. The quantization
// divisors apply to the orthonormal coefficients directly: for 8x8 blocks
// the normative JPEG FDCT scaling (T.81 A.3.3) coincides with the
// orthonormal DCT, so no compensating factor is needed.
// Entropy coding is lossless and therefore not simulated.
ImageBuffer JpegDegrade(const ImageBuffer& img, int qf);
ImageBuffer JpegDegradeSerial(const ImageBuffer& img, int qf);

// Center-crop to the largest dimensions divisible by `multiple` (4 or 8).
ImageBuffer PrepareDims(const ImageBuffer& img, int multiple);

}  // namespace freqres

#endif  // FREQRES_JPEGSIM_HPP_

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

#ifndef FREQRES_IMAGE_HPP_
#define FREQRES_IMAGE_HPP_

#include <string>
#include <vector>

#include "freqres/common.hpp"

namespace freqres {

// U8 buffers hold integer values in [0,255]; Real buffers are unbounded.
enum class Domain { kU8, kReal };

// Planar row-major storage: plane 0 fully, then plane 1, plane 2.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  int planes = 1;
  Domain domain = Domain::kU8;
  std::vector<double> data;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, int p, Domain d)
      : width(w), height(h), planes(p), domain(d),
        data(static_cast<size_t>(w) * h * p, 0.0) {}

  double& at(int plane, int y, int x) {
    return data[(static_cast<size_t>(plane) * height + y) * width + x];
  }
  double at(int plane, int y, int x) const {
    return data[(static_cast<size_t>(plane) * height + y) * width + x];
  }
  size_t size() const { return data.size(); }
};

// Reads PGM (P5), PPM (P6) with maxval 255, or 8-bit PNG. Returns a U8
// buffer with 1 plane (grayscale) or 3 planes (color).
ImageBuffer LoadImage(const std::string& path);

// Writes by extension (.pgm, .ppm, .png). Real buffers are rounded
// half-up and clamped to [0,255] first.
void SaveImage(const ImageBuffer& img, const std::string& path);

// Full-range BT.601: Y = 0.299 R + 0.587 G + 0.114 B, kept real-valued.
ImageBuffer RgbToLuma(const ImageBuffer& img);

// 4-neighbor Laplacian [[0,1,0],[1,-4,1],[0,1,0]] with replicate-padded
// borders; output has the input's size, domain Real.
ImageBuffer Laplacian(const ImageBuffer& img);

// Single-thread reference for Laplacian, kept for kernel tests and the
// benchmark. Outputs are bit-identical.
ImageBuffer LaplacianSerial(const ImageBuffer& img);

// Rounds a Real buffer into the U8 domain (no-op for U8 input).
ImageBuffer ToU8(const ImageBuffer& img);

// Horizontal mirror, all planes.
ImageBuffer FlipHorizontal(const ImageBuffer& img);

// Center-crop to exactly w x h (throws if the image is smaller).
ImageBuffer CenterCrop(const ImageBuffer& img, int w, int h);

// Bilinear resample to exactly w x h.
ImageBuffer ResizeBilinear(const ImageBuffer& img, int w, int h);

}  // namespace freqres

#endif  // FREQRES_IMAGE_HPP_

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

#include "freqres/jpegsim.hpp"

#include <cmath>

#include "freqres/dct.hpp"

namespace freqres {

const std::array<int, 64>& StandardLuminanceTable() {
  static const std::array<int, 64> kTable = {
      16, 11, 10, 16, 24,  40,  51,  61,   //
      12, 12, 14, 19, 26,  58,  60,  55,   //
      14, 13, 16, 24, 40,  57,  69,  56,   //
      14, 17, 22, 29, 51,  87,  80,  62,   //
      18, 22, 37, 56, 68,  109, 103, 77,   //
      24, 35, 55, 64, 81,  104, 113, 92,   //
      49, 64, 78, 87, 103, 121, 120, 101,  //
      72, 92, 95, 98, 112, 100, 103, 99};
  return kTable;
}

QTable QualityTable(int qf) {
  if (qf < 1 || qf > 100) {
    throw DataError("quality_table: qf " + std::to_string(qf) +
                    " out of [1, 100]");
  }
  const int scale = qf < 50 ? 5000 / qf : 200 - 2 * qf;
  QTable q;
  q.quality_factor = qf;
  const auto& base = StandardLuminanceTable();
  for (int i = 0; i < 64; ++i) {
    int v = (base[i] * scale + 50) / 100;
    q.entries[i] = v < 1 ? 1 : (v > 255 ? 255 : v);
  }
  return q;
}

namespace {

void DegradeBlockRow(const ImageBuffer& img, const QTable& q, int by,
                     ImageBuffer& out) {
  const double* basis = DctBasis(8).data();
  double block[64], freq[64];
  const int bw = img.width / 8;
  for (int bx = 0; bx < bw; ++bx) {
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        block[y * 8 + x] = img.at(0, by * 8 + y, bx * 8 + x) - 128.0;
      }
    }
    // freq = C block C^T
    double tmp[64];
    for (int u = 0; u < 8; ++u) {
      for (int x = 0; x < 8; ++x) {
        double s = 0.0;
        for (int y = 0; y < 8; ++y) s += basis[u * 8 + y] * block[y * 8 + x];
        tmp[u * 8 + x] = s;
      }
    }
    for (int u = 0; u < 8; ++u) {
      for (int v = 0; v < 8; ++v) {
        double s = 0.0;
        for (int x = 0; x < 8; ++x) s += tmp[u * 8 + x] * basis[v * 8 + x];
        // Quantize: round half away from zero, then dequantize.
        const double div = q.entries[u * 8 + v];
        freq[u * 8 + v] = std::round(s / div) * div;
      }
    }
    // block = C^T freq C
    for (int y = 0; y < 8; ++y) {
      for (int v = 0; v < 8; ++v) {
        double s = 0.0;
        for (int u = 0; u < 8; ++u) s += basis[u * 8 + y] * freq[u * 8 + v];
        tmp[y * 8 + v] = s;
      }
    }
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        double s = 0.0;
        for (int v = 0; v < 8; ++v) s += tmp[y * 8 + v] * basis[v * 8 + x];
        out.at(0, by * 8 + y, bx * 8 + x) = ClampU8(s + 128.0);
      }
    }
  }
}

ImageBuffer DegradeImpl(const ImageBuffer& img, int qf, bool parallel) {
  if (img.planes != 1) throw DataError("jpeg_degrade: expected 1 plane");
  if (img.domain != Domain::kU8) {
    throw DataError("jpeg_degrade: expected a U8 buffer");
  }
  if (img.width % 8 != 0 || img.height % 8 != 0) {
    throw DataError("jpeg_degrade: dimensions not divisible by 8");
  }
  const QTable q = QualityTable(qf);
  ImageBuffer out(img.width, img.height, 1, Domain::kU8);
  const int bh = img.height / 8;
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int by = 0; by < bh; ++by) DegradeBlockRow(img, q, by, out);
  } else {
    for (int by = 0; by < bh; ++by) DegradeBlockRow(img, q, by, out);
  }
  return out;
}

}  // namespace

ImageBuffer JpegDegrade(const ImageBuffer& img, int qf) {
  return DegradeImpl(img, qf, true);
}

ImageBuffer JpegDegradeSerial(const ImageBuffer& img, int qf) {
  return DegradeImpl(img, qf, false);
}

ImageBuffer PrepareDims(const ImageBuffer& img, int multiple) {
  if (multiple != 4 && multiple != 8) {
    throw DataError("prepare_dims: multiple must be 4 or 8");
  }
  const int w = (img.width / multiple) * multiple;
  const int h = (img.height / multiple) * multiple;
  if (w < multiple || h < multiple) {
    throw DataError("prepare_dims: image smaller than " +
                    std::to_string(multiple) + "x" + std::to_string(multiple));
  }
  if (w == img.width && h == img.height) return img;
  return CenterCrop(img, w, h);
}

}  // namespace freqres

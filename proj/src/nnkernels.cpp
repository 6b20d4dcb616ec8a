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

#include "freqres/nnkernels.hpp"

#include <algorithm>

#include "freqres/common.hpp"

namespace freqres {

ConvShape ConvShape::Of(int batch, int in_ch, int in_h, int in_w, int out_ch,
                        int k, int stride, int pad) {
  if (in_h + 2 * pad < k || in_w + 2 * pad < k) {
    throw DataError("conv2d: kernel larger than padded input");
  }
  ConvShape s;
  s.batch = batch;
  s.in_ch = in_ch;
  s.in_h = in_h;
  s.in_w = in_w;
  s.out_ch = out_ch;
  s.k = k;
  s.stride = stride;
  s.pad = pad;
  s.out_h = (in_h + 2 * pad - k) / stride + 1;
  s.out_w = (in_w + 2 * pad - k) / stride + 1;
  return s;
}

namespace {

// First index with index * stride - pad + offset >= 0.
inline int LowBound(int pad, int offset, int stride) {
  const int num = pad - offset;
  return num <= 0 ? 0 : (num + stride - 1) / stride;
}

// Last index with index * stride - pad + offset <= limit - 1.
inline int HighBound(int limit, int pad, int offset, int stride) {
  return (limit - 1 + pad - offset) / stride;
}

}  // namespace

template <class T>
void Conv2dForward(const T* x, const T* weight, const T* bias,
                   const ConvShape& s, T* out, bool parallel) {
  const int64_t in_plane = static_cast<int64_t>(s.in_h) * s.in_w;
  const int64_t out_plane = static_cast<int64_t>(s.out_h) * s.out_w;
#pragma omp parallel for collapse(2) schedule(static) if (parallel)
  for (int b = 0; b < s.batch; ++b) {
    for (int oc = 0; oc < s.out_ch; ++oc) {
      T* op = out + (static_cast<int64_t>(b) * s.out_ch + oc) * out_plane;
      std::fill(op, op + out_plane, bias[oc]);
      for (int ic = 0; ic < s.in_ch; ++ic) {
        const T* xp = x + (static_cast<int64_t>(b) * s.in_ch + ic) * in_plane;
        const T* wp =
            weight + (static_cast<int64_t>(oc) * s.in_ch + ic) * s.k * s.k;
        for (int ky = 0; ky < s.k; ++ky) {
          const int oh_lo = LowBound(s.pad, ky, s.stride);
          const int oh_hi =
              std::min(s.out_h - 1, HighBound(s.in_h, s.pad, ky, s.stride));
          for (int kx = 0; kx < s.k; ++kx) {
            const T wv = wp[ky * s.k + kx];
            const int ow_lo = LowBound(s.pad, kx, s.stride);
            const int ow_hi =
                std::min(s.out_w - 1, HighBound(s.in_w, s.pad, kx, s.stride));
            for (int oh = oh_lo; oh <= oh_hi; ++oh) {
              const int ih = oh * s.stride - s.pad + ky;
              const T* xrow = xp + static_cast<int64_t>(ih) * s.in_w +
                              (ow_lo * s.stride - s.pad + kx);
              T* orow = op + static_cast<int64_t>(oh) * s.out_w;
              if (s.stride == 1) {
                for (int ow = ow_lo; ow <= ow_hi; ++ow) {
                  orow[ow] += wv * xrow[ow - ow_lo];
                }
              } else {
                for (int ow = ow_lo; ow <= ow_hi; ++ow) {
                  orow[ow] += wv * xrow[(ow - ow_lo) * s.stride];
                }
              }
            }
          }
        }
      }
    }
  }
}

template <class T>
void Conv2dBackwardInput(const T* weight, const T* dout, const ConvShape& s,
                         T* dx, bool parallel) {
  const int64_t in_plane = static_cast<int64_t>(s.in_h) * s.in_w;
  const int64_t out_plane = static_cast<int64_t>(s.out_h) * s.out_w;
#pragma omp parallel for collapse(2) schedule(static) if (parallel)
  for (int b = 0; b < s.batch; ++b) {
    for (int ic = 0; ic < s.in_ch; ++ic) {
      T* dxp = dx + (static_cast<int64_t>(b) * s.in_ch + ic) * in_plane;
      for (int oc = 0; oc < s.out_ch; ++oc) {
        const T* dop =
            dout + (static_cast<int64_t>(b) * s.out_ch + oc) * out_plane;
        const T* wp =
            weight + (static_cast<int64_t>(oc) * s.in_ch + ic) * s.k * s.k;
        for (int ky = 0; ky < s.k; ++ky) {
          const int oh_lo = LowBound(s.pad, ky, s.stride);
          const int oh_hi =
              std::min(s.out_h - 1, HighBound(s.in_h, s.pad, ky, s.stride));
          for (int kx = 0; kx < s.k; ++kx) {
            const T wv = wp[ky * s.k + kx];
            const int ow_lo = LowBound(s.pad, kx, s.stride);
            const int ow_hi =
                std::min(s.out_w - 1, HighBound(s.in_w, s.pad, kx, s.stride));
            for (int oh = oh_lo; oh <= oh_hi; ++oh) {
              const int ih = oh * s.stride - s.pad + ky;
              T* dxrow = dxp + static_cast<int64_t>(ih) * s.in_w +
                         (ow_lo * s.stride - s.pad + kx);
              const T* dorow = dop + static_cast<int64_t>(oh) * s.out_w;
              if (s.stride == 1) {
                for (int ow = ow_lo; ow <= ow_hi; ++ow) {
                  dxrow[ow - ow_lo] += wv * dorow[ow];
                }
              } else {
                for (int ow = ow_lo; ow <= ow_hi; ++ow) {
                  dxrow[(ow - ow_lo) * s.stride] += wv * dorow[ow];
                }
              }
            }
          }
        }
      }
    }
  }
}

template <class T>
void Conv2dBackwardParams(const T* x, const T* dout, const ConvShape& s,
                          T* dweight, T* dbias, bool parallel) {
  const int64_t in_plane = static_cast<int64_t>(s.in_h) * s.in_w;
  const int64_t out_plane = static_cast<int64_t>(s.out_h) * s.out_w;
#pragma omp parallel for schedule(static) if (parallel)
  for (int oc = 0; oc < s.out_ch; ++oc) {
    T db = T(0);
    T* dwp = dweight + static_cast<int64_t>(oc) * s.in_ch * s.k * s.k;
    for (int b = 0; b < s.batch; ++b) {
      const T* dop =
          dout + (static_cast<int64_t>(b) * s.out_ch + oc) * out_plane;
      for (int64_t i = 0; i < out_plane; ++i) db += dop[i];
      for (int ic = 0; ic < s.in_ch; ++ic) {
        const T* xp = x + (static_cast<int64_t>(b) * s.in_ch + ic) * in_plane;
        for (int ky = 0; ky < s.k; ++ky) {
          const int oh_lo = LowBound(s.pad, ky, s.stride);
          const int oh_hi =
              std::min(s.out_h - 1, HighBound(s.in_h, s.pad, ky, s.stride));
          for (int kx = 0; kx < s.k; ++kx) {
            const int ow_lo = LowBound(s.pad, kx, s.stride);
            const int ow_hi =
                std::min(s.out_w - 1, HighBound(s.in_w, s.pad, kx, s.stride));
            // Eight independent accumulators in a fixed lane order: the
            // reduction vectorizes without any floating-point reassociation,
            // so serial and parallel results stay bit-identical.
            T lanes[8] = {T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0)};
            for (int oh = oh_lo; oh <= oh_hi; ++oh) {
              const int ih = oh * s.stride - s.pad + ky;
              const T* xrow = xp + static_cast<int64_t>(ih) * s.in_w +
                              (ow_lo * s.stride - s.pad + kx);
              const T* dorow = dop + static_cast<int64_t>(oh) * s.out_w + ow_lo;
              const int n = ow_hi - ow_lo + 1;
              int i = 0;
              if (s.stride == 1) {
                for (; i + 8 <= n; i += 8) {
                  for (int l = 0; l < 8; ++l) {
                    lanes[l] += dorow[i + l] * xrow[i + l];
                  }
                }
                for (; i < n; ++i) lanes[i % 8] += dorow[i] * xrow[i];
              } else {
                for (; i + 8 <= n; i += 8) {
                  for (int l = 0; l < 8; ++l) {
                    lanes[l] += dorow[i + l] * xrow[(i + l) * s.stride];
                  }
                }
                for (; i < n; ++i) lanes[i % 8] += dorow[i] * xrow[i * s.stride];
              }
            }
            T acc = T(0);
            for (int l = 0; l < 8; ++l) acc += lanes[l];
            dwp[static_cast<int64_t>(ic) * s.k * s.k + ky * s.k + kx] += acc;
          }
        }
      }
    }
    dbias[oc] += db;
  }
}

template void Conv2dForward<float>(const float*, const float*, const float*,
                                   const ConvShape&, float*, bool);
template void Conv2dForward<double>(const double*, const double*, const double*,
                                    const ConvShape&, double*, bool);
template void Conv2dBackwardInput<float>(const float*, const float*,
                                         const ConvShape&, float*, bool);
template void Conv2dBackwardInput<double>(const double*, const double*,
                                          const ConvShape&, double*, bool);
template void Conv2dBackwardParams<float>(const float*, const float*,
                                          const ConvShape&, float*, float*,
                                          bool);
template void Conv2dBackwardParams<double>(const double*, const double*,
                                           const ConvShape&, double*, double*,
                                           bool);

}  // namespace freqres

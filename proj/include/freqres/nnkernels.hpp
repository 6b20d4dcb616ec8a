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

#ifndef FREQRES_NNKERNELS_HPP_
#define FREQRES_NNKERNELS_HPP_

namespace freqres {

// Convolution kernels, the training hot path. The parallel variants split
// work over disjoint output slices (batch x channel planes, or weight rows)
// and keep the per-element accumulation order fixed, so results are
// bit-identical to the serial run for any thread count. `parallel = false`
// runs the same loops single-threaded and is the reference the kernel
// tests and the benchmark compare against.
struct ConvShape {
  int batch = 0;
  int in_ch = 0, in_h = 0, in_w = 0;
  int out_ch = 0, k = 0;
  int stride = 1, pad = 0;
  int out_h = 0, out_w = 0;  // out = (in + 2 pad - k) / stride + 1

  static ConvShape Of(int batch, int in_ch, int in_h, int in_w, int out_ch,
                      int k, int stride, int pad);
};

// Cross-correlation with bias: out[b, oc] = bias[oc] + sum w[oc, ic] * x[b, ic].
template <class T>
void Conv2dForward(const T* x, const T* weight, const T* bias,
                   const ConvShape& s, T* out, bool parallel);

// Accumulates dL/dx given dL/dout.
template <class T>
void Conv2dBackwardInput(const T* weight, const T* dout, const ConvShape& s,
                         T* dx, bool parallel);

// Accumulates dL/dweight and dL/dbias.
template <class T>
void Conv2dBackwardParams(const T* x, const T* dout, const ConvShape& s,
                          T* dweight, T* dbias, bool parallel);

}  // namespace freqres

#endif  // FREQRES_NNKERNELS_HPP_

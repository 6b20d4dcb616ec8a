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

// Serial reference vs OpenMP kernel timings. Every pair must agree
// bit-exactly; the table reports the best-of-N wall times and speedup.

#include <omp.h>

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "freqres/dct.hpp"
#include "freqres/image.hpp"
#include "freqres/jpegsim.hpp"
#include "freqres/metrics.hpp"
#include "freqres/nnkernels.hpp"

namespace {

using freqres::ConvShape;
using freqres::Domain;
using freqres::ImageBuffer;
using freqres::Rng;

double BestOf(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const double t0 = omp_get_wtime();
    fn();
    best = std::min(best, omp_get_wtime() - t0);
  }
  return best;
}

void Report(const char* name, double serial_s, double parallel_s, bool equal) {
  std::printf("%-26s %9.2f ms %9.2f ms %6.2fx  %s\n", name, serial_s * 1e3,
              parallel_s * 1e3, serial_s / parallel_s,
              equal ? "bit-equal" : "MISMATCH");
}

ImageBuffer RandomImage(Rng& rng, int w, int h) {
  ImageBuffer img(w, h, 1, Domain::kU8);
  for (double& v : img.data) v = static_cast<double>(rng.Below(256));
  return img;
}

}  // namespace

int main(int argc, char** argv) {
  int jobs = omp_get_max_threads();
  int reps = 3;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--jobs" && i + 1 < argc) jobs = std::atoi(argv[++i]);
    else if (arg == "--reps" && i + 1 < argc) reps = std::atoi(argv[++i]);
    else {
      std::printf("usage: freqres_bench [--jobs N] [--reps N]\n");
      return 1;
    }
  }
  omp_set_num_threads(jobs);
  std::printf("threads: %d, best of %d\n", jobs, reps);
  std::printf("%-26s %12s %12s %7s\n", "kernel", "serial", "openmp", "speedup");

  Rng rng(42);

  {  // conv2d forward, training-like shape
    const ConvShape s = ConvShape::Of(8, 32, 48, 48, 64, 3, 1, 1);
    std::vector<float> x(static_cast<size_t>(8) * 32 * 48 * 48);
    std::vector<float> w(static_cast<size_t>(64) * 32 * 9);
    std::vector<float> b(64);
    for (float& v : x) v = static_cast<float>(rng.Uniform(-1, 1));
    for (float& v : w) v = static_cast<float>(rng.Uniform(-1, 1));
    std::vector<float> out_s(static_cast<size_t>(8) * 64 * s.out_h * s.out_w);
    std::vector<float> out_p(out_s.size());
    const double ts = BestOf(reps, [&] {
      freqres::Conv2dForward(x.data(), w.data(), b.data(), s, out_s.data(), false);
    });
    const double tp = BestOf(reps, [&] {
      freqres::Conv2dForward(x.data(), w.data(), b.data(), s, out_p.data(), true);
    });
    Report("conv2d fwd 8x32x48x48", ts, tp, out_s == out_p);

    std::vector<float> dout(out_s.size());
    for (float& v : dout) v = static_cast<float>(rng.Uniform(-1, 1));
    std::vector<float> dx_s(x.size()), dx_p(x.size());
    const double bs = BestOf(reps, [&] {
      std::fill(dx_s.begin(), dx_s.end(), 0.0f);
      freqres::Conv2dBackwardInput(w.data(), dout.data(), s, dx_s.data(), false);
    });
    const double bp = BestOf(reps, [&] {
      std::fill(dx_p.begin(), dx_p.end(), 0.0f);
      freqres::Conv2dBackwardInput(w.data(), dout.data(), s, dx_p.data(), true);
    });
    Report("conv2d bwd-input", bs, bp, dx_s == dx_p);

    std::vector<float> dw_s(w.size()), dw_p(w.size()), db_s(64), db_p(64);
    const double ws = BestOf(reps, [&] {
      std::fill(dw_s.begin(), dw_s.end(), 0.0f);
      std::fill(db_s.begin(), db_s.end(), 0.0f);
      freqres::Conv2dBackwardParams(x.data(), dout.data(), s, dw_s.data(),
                                    db_s.data(), false);
    });
    const double wp = BestOf(reps, [&] {
      std::fill(dw_p.begin(), dw_p.end(), 0.0f);
      std::fill(db_p.begin(), db_p.end(), 0.0f);
      freqres::Conv2dBackwardParams(x.data(), dout.data(), s, dw_p.data(),
                                    db_p.data(), true);
    });
    Report("conv2d bwd-params", ws, wp, dw_s == dw_p && db_s == db_p);
  }

  {  // blockwise DCT
    ImageBuffer img = RandomImage(rng, 1024, 1024);
    freqres::CoeffMap out_s, out_p;
    const double ts =
        BestOf(reps, [&] { out_s = freqres::PatchDctSerial(img, 4, 4); });
    const double tp = BestOf(reps, [&] { out_p = freqres::PatchDct(img, 4, 4); });
    Report("patch_dct 1024^2 / 4x4", ts, tp, out_s.values == out_p.values);
  }

  {  // JPEG-equivalent degradation
    ImageBuffer img = RandomImage(rng, 1024, 1024);
    ImageBuffer out_s, out_p;
    const double ts =
        BestOf(reps, [&] { out_s = freqres::JpegDegradeSerial(img, 10); });
    const double tp = BestOf(reps, [&] { out_p = freqres::JpegDegrade(img, 10); });
    Report("jpeg_degrade 1024^2 qf10", ts, tp, out_s.data == out_p.data);
  }

  {  // SSIM
    ImageBuffer a = RandomImage(rng, 512, 512);
    ImageBuffer b = freqres::JpegDegrade(a, 20);
    double ssim_s = 0.0, ssim_p = 0.0;
    const double ts = BestOf(reps, [&] { ssim_s = freqres::SsimSerial(a, b); });
    const double tp = BestOf(reps, [&] { ssim_p = freqres::Ssim(a, b); });
    Report("ssim 512^2", ts, tp, ssim_s == ssim_p);
  }

  {  // Laplacian
    ImageBuffer img = RandomImage(rng, 2048, 2048);
    ImageBuffer out_s, out_p;
    const double ts =
        BestOf(reps, [&] { out_s = freqres::LaplacianSerial(img); });
    const double tp = BestOf(reps, [&] { out_p = freqres::Laplacian(img); });
    Report("laplacian 2048^2", ts, tp, out_s.data == out_p.data);
  }

  return 0;
}

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

#ifndef FREQRES_METRICS_HPP_
#define FREQRES_METRICS_HPP_

#include <string>
#include <vector>

#include "freqres/image.hpp"

namespace freqres {

struct MetricReport {
  double psnr = 0.0;    // dB; +inf sentinel for identical images
  double psnr_b = 0.0;  // dB; <= psnr always
  double ssim = 0.0;
  double bef = 0.0;
  double bef_over_mse = 0.0;
};

// Mean squared difference, both buffers interpreted on [0, 255].
double Mse(const ImageBuffer& a, const ImageBuffer& b);

// 10 log10(255^2 / MSE); +inf for identical images.
double Psnr(const ImageBuffer& a, const ImageBuffer& b);

// Blocking effect factor: the eta-weighted excess of mean squared
// differences across block-boundary adjacent pixel pairs over the interior
// adjacent pairs. Boundary pairs are (x, x+1) with (x+1) % block == 0,
// and the vertical analogue. eta = log2(block) / log2(min(w, h)) when the
// boundary term exceeds the interior term, else 0 (and BEF is 0).
double Bef(const ImageBuffer& img, int block = 8);

// 10 log10(255^2 / (MSE(a, b) + BEF(b))); `a` is the reference.
double PsnrB(const ImageBuffer& a, const ImageBuffer& b);

// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
// K2 = 0.03, L = 255, averaged over valid window positions only.
double Ssim(const ImageBuffer& a, const ImageBuffer& b);
double SsimSerial(const ImageBuffer& a, const ImageBuffer& b);

// Jensen lower bound of mean BEF/MSE from aggregate PSNR figures:
// 10^((mean_psnr - mean_psnr_b) / 10) - 1. Per image the same expression
// is exact; convexity of 10^(t/10) makes the mean a lower bound.
double BefMseLowerBound(double mean_psnr, double mean_psnr_b);

// All per-image metrics of `distorted` against `reference`.
MetricReport Evaluate(const ImageBuffer& reference, const ImageBuffer& distorted);

struct DatasetEval {
  std::vector<std::string> names;
  std::vector<MetricReport> rows;
  double mean_psnr = 0.0;          // finite rows only
  double mean_psnr_b = 0.0;        // finite rows only
  double mean_ssim = 0.0;
  double mean_bef_over_mse = 0.0;  // finite rows only
  double bound = 0.0;              // BefMseLowerBound of the means
};

// Evaluates every file of `candidate_dir` against the same filename in
// `reference_dir` (sorted order; the file sets must match). Color images
// are reduced to luma first.
DatasetEval EvaluateDirPair(const std::string& candidate_dir,
                            const std::string& reference_dir);

// Table 3-style evaluation: restored images against references, plus the
// degraded inputs against the same references when `degraded_dir` is
// non-empty (emitted as a second CSV section).
struct DatasetReport {
  DatasetEval restored;
  DatasetEval degraded;  // empty names when not requested
  bool has_degraded = false;
};
DatasetReport EvaluateDataset(const std::string& restored_dir,
                              const std::string& reference_dir,
                              const std::string& degraded_dir = "");

// CSV schema: filename, psnr, psnr_b, ssim, bef, bef_over_mse with trailing
// aggregate rows prefixed #mean and #bound. Infinite PSNR prints as "inf"
// and is excluded from the means.
std::string DatasetEvalToCsv(const DatasetEval& eval);
std::string DatasetReportToCsv(const DatasetReport& report);

}  // namespace freqres

#endif  // FREQRES_METRICS_HPP_

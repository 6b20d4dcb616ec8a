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

#include "freqres/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

namespace freqres {

namespace {

void CheckPair(const ImageBuffer& a, const ImageBuffer& b, const char* op) {
  if (a.planes != 1 || b.planes != 1) {
    throw DataError(std::string(op) + ": expected 1-plane images");
  }
  if (a.width != b.width || a.height != b.height) {
    throw DataError(std::string(op) + ": dimension mismatch");
  }
}

}  // namespace

double Mse(const ImageBuffer& a, const ImageBuffer& b) {
  CheckPair(a, b, "mse");
  double sum = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.data.size());
}

double Psnr(const ImageBuffer& a, const ImageBuffer& b) {
  const double mse = Mse(a, b);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double Bef(const ImageBuffer& img, int block) {
  if (img.planes != 1) throw DataError("bef: expected 1 plane");
  if (img.width < 2 * block || img.height < 2 * block) {
    throw DataError("bef: image smaller than two blocks");
  }
  double boundary_sum = 0.0, interior_sum = 0.0;
  int64_t boundary_n = 0, interior_n = 0;
  // Horizontal pairs (x, x+1); boundary when x+1 is a block column.
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x + 1 < img.width; ++x) {
      const double d = img.at(0, y, x) - img.at(0, y, x + 1);
      if ((x + 1) % block == 0) {
        boundary_sum += d * d;
        ++boundary_n;
      } else {
        interior_sum += d * d;
        ++interior_n;
      }
    }
  }
  // Vertical pairs (y, y+1).
  for (int y = 0; y + 1 < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double d = img.at(0, y, x) - img.at(0, y + 1, x);
      if ((y + 1) % block == 0) {
        boundary_sum += d * d;
        ++boundary_n;
      } else {
        interior_sum += d * d;
        ++interior_n;
      }
    }
  }
  const double d_b = boundary_sum / static_cast<double>(boundary_n);
  const double d_c = interior_sum / static_cast<double>(interior_n);
  if (d_b <= d_c) return 0.0;
  const double eta =
      std::log2(static_cast<double>(block)) /
      std::log2(static_cast<double>(std::min(img.width, img.height)));
  return eta * (d_b - d_c);
}

double PsnrB(const ImageBuffer& a, const ImageBuffer& b) {
  const double denom = Mse(a, b) + Bef(b);
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / denom);
}

namespace {

constexpr int kSsimWindow = 11;

const std::array<double, kSsimWindow * kSsimWindow>& SsimKernel() {
  static const auto kernel = [] {
    std::array<double, kSsimWindow * kSsimWindow> k{};
    const double sigma = 1.5;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
      for (int j = 0; j < kSsimWindow; ++j) {
        const double dy = i - kSsimWindow / 2, dx = j - kSsimWindow / 2;
        k[i * kSsimWindow + j] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
        sum += k[i * kSsimWindow + j];
      }
    }
    for (double& v : k) v /= sum;
    return k;
  }();
  return kernel;
}

// Sum of the SSIM map over one row of valid window positions.
double SsimRow(const ImageBuffer& a, const ImageBuffer& b, int y0) {
  const auto& w = SsimKernel();
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  double row_sum = 0.0;
  for (int x0 = 0; x0 + kSsimWindow <= a.width; ++x0) {
    double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
      for (int j = 0; j < kSsimWindow; ++j) {
        const double wa = a.at(0, y0 + i, x0 + j);
        const double wb = b.at(0, y0 + i, x0 + j);
        const double wij = w[i * kSsimWindow + j];
        mu_a += wij * wa;
        mu_b += wij * wb;
        aa += wij * wa * wa;
        bb += wij * wb * wb;
        ab += wij * wa * wb;
      }
    }
    const double var_a = aa - mu_a * mu_a;
    const double var_b = bb - mu_b * mu_b;
    const double cov = ab - mu_a * mu_b;
    row_sum += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
  }
  return row_sum;
}

double SsimImpl(const ImageBuffer& a, const ImageBuffer& b, bool parallel) {
  CheckPair(a, b, "ssim");
  if (a.width < kSsimWindow || a.height < kSsimWindow) {
    throw DataError("ssim: image smaller than the 11x11 window");
  }
  const int rows = a.height - kSsimWindow + 1;
  const int cols = a.width - kSsimWindow + 1;
  std::vector<double> row_sums(rows, 0.0);
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < rows; ++y) row_sums[y] = SsimRow(a, b, y);
  } else {
    for (int y = 0; y < rows; ++y) row_sums[y] = SsimRow(a, b, y);
  }
  double total = 0.0;  // fixed merge order keeps the result schedule-free
  for (double v : row_sums) total += v;
  return total / (static_cast<double>(rows) * cols);
}

}  // namespace

double Ssim(const ImageBuffer& a, const ImageBuffer& b) {
  return SsimImpl(a, b, true);
}

double SsimSerial(const ImageBuffer& a, const ImageBuffer& b) {
  return SsimImpl(a, b, false);
}

double BefMseLowerBound(double mean_psnr, double mean_psnr_b) {
  if (mean_psnr < mean_psnr_b) {
    throw DataError("bef_mse_lower_bound: mean PSNR below mean PSNR-B");
  }
  return std::pow(10.0, (mean_psnr - mean_psnr_b) / 10.0) - 1.0;
}

MetricReport Evaluate(const ImageBuffer& reference, const ImageBuffer& distorted) {
  MetricReport r;
  const double mse = Mse(reference, distorted);
  r.bef = Bef(distorted);
  r.psnr = mse == 0.0 ? std::numeric_limits<double>::infinity()
                      : 10.0 * std::log10(255.0 * 255.0 / mse);
  r.psnr_b = (mse + r.bef) == 0.0
                 ? std::numeric_limits<double>::infinity()
                 : 10.0 * std::log10(255.0 * 255.0 / (mse + r.bef));
  r.ssim = Ssim(reference, distorted);
  r.bef_over_mse = mse == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                              : r.bef / mse;
  return r;
}

namespace {

std::vector<std::string> SortedImageNames(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError(dir + ": not a directory");
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm" || ext == ".ppm" || ext == ".png") {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw DataError(dir + ": no images found");
  return names;
}

ImageBuffer LoadLuma(const std::string& path) {
  ImageBuffer img = LoadImage(path);
  return img.planes == 3 ? RgbToLuma(img) : img;
}

}  // namespace

DatasetEval EvaluateDirPair(const std::string& candidate_dir,
                            const std::string& reference_dir) {
  namespace fs = std::filesystem;
  DatasetEval eval;
  eval.names = SortedImageNames(candidate_dir);
  const auto ref_names = SortedImageNames(reference_dir);
  if (ref_names != eval.names) {
    throw DataError("evaluate: filename mismatch between " + candidate_dir +
                    " and " + reference_dir);
  }
  eval.rows.resize(eval.names.size());
  const int n = static_cast<int>(eval.names.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const ImageBuffer cand =
        LoadLuma((fs::path(candidate_dir) / eval.names[i]).string());
    const ImageBuffer ref =
        LoadLuma((fs::path(reference_dir) / eval.names[i]).string());
    eval.rows[i] = Evaluate(ref, cand);
  }
  double psnr_sum = 0.0, psnr_b_sum = 0.0, ssim_sum = 0.0, ratio_sum = 0.0;
  int64_t finite_n = 0;
  for (const MetricReport& r : eval.rows) {
    ssim_sum += r.ssim;
    if (std::isfinite(r.psnr)) {
      psnr_sum += r.psnr;
      psnr_b_sum += r.psnr_b;
      ratio_sum += r.bef_over_mse;
      ++finite_n;
    }
  }
  eval.mean_ssim = ssim_sum / static_cast<double>(eval.rows.size());
  if (finite_n > 0) {
    eval.mean_psnr = psnr_sum / static_cast<double>(finite_n);
    eval.mean_psnr_b = psnr_b_sum / static_cast<double>(finite_n);
    eval.mean_bef_over_mse = ratio_sum / static_cast<double>(finite_n);
    eval.bound = BefMseLowerBound(eval.mean_psnr, eval.mean_psnr_b);
  } else {
    eval.mean_psnr = std::numeric_limits<double>::infinity();
    eval.mean_psnr_b = std::numeric_limits<double>::infinity();
    eval.mean_bef_over_mse = 0.0;
    eval.bound = 0.0;
  }
  return eval;
}

DatasetReport EvaluateDataset(const std::string& restored_dir,
                              const std::string& reference_dir,
                              const std::string& degraded_dir) {
  DatasetReport report;
  report.restored = EvaluateDirPair(restored_dir, reference_dir);
  if (!degraded_dir.empty()) {
    report.degraded = EvaluateDirPair(degraded_dir, reference_dir);
    report.has_degraded = true;
  }
  return report;
}

namespace {

void AppendValue(std::ostringstream& out, double v) {
  if (std::isinf(v)) {
    out << "inf";
  } else if (std::isnan(v)) {
    out << "nan";
  } else {
    out << v;
  }
}

}  // namespace

std::string DatasetEvalToCsv(const DatasetEval& eval) {
  std::ostringstream out;
  out.precision(10);
  out << "filename,psnr,psnr_b,ssim,bef,bef_over_mse\n";
  for (size_t i = 0; i < eval.names.size(); ++i) {
    const MetricReport& r = eval.rows[i];
    out << eval.names[i] << ",";
    AppendValue(out, r.psnr);
    out << ",";
    AppendValue(out, r.psnr_b);
    out << "," << r.ssim << "," << r.bef << ",";
    AppendValue(out, r.bef_over_mse);
    out << "\n";
  }
  out << "#mean,";
  AppendValue(out, eval.mean_psnr);
  out << ",";
  AppendValue(out, eval.mean_psnr_b);
  out << "," << eval.mean_ssim << ",,";
  AppendValue(out, eval.mean_bef_over_mse);
  out << "\n";
  out << "#bound,,,,," << eval.bound << "\n";
  return out.str();
}

std::string DatasetReportToCsv(const DatasetReport& report) {
  std::string csv = DatasetEvalToCsv(report.restored);
  if (report.has_degraded) {
    csv += "#set,degraded\n";
    csv += DatasetEvalToCsv(report.degraded);
  }
  return csv;
}

}  // namespace freqres

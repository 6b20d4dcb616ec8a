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

#include "freqres/bins.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>

namespace freqres {

namespace {

double MedianOfSorted(const std::vector<double>& s, size_t lo, size_t hi) {
  const size_t m = hi - lo;
  if (m % 2 == 1) return s[lo + m / 2];
  return 0.5 * (s[lo + m / 2 - 1] + s[lo + m / 2]);
}

}  // namespace

BinSpec FitBins(const std::vector<std::vector<double>>& samples, int n_cl,
                std::vector<std::string>* warnings) {
  if (n_cl < 1) throw DataError("fit_bins: n_cl must be >= 1");
  BinSpec bins;
  bins.n_ch = static_cast<int>(samples.size());
  bins.n_cl = n_cl;
  bins.boundaries.resize(samples.size());
  bins.representatives.resize(samples.size());
  bins.channel_mean.resize(samples.size(), 0.0);
  bins.channel_std.resize(samples.size(), 0.0);

  for (size_t ch = 0; ch < samples.size(); ++ch) {
    const size_t n = samples[ch].size();
    if (n < static_cast<size_t>(n_cl)) {
      throw DataError("fit_bins: channel " + std::to_string(ch) + " has " +
                      std::to_string(n) + " samples, fewer than n_cl");
    }
    std::vector<double> s = samples[ch];
    std::sort(s.begin(), s.end());

    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    // Sample standard deviation; population form for a single sample.
    var /= static_cast<double>(n > 1 ? n - 1 : 1);
    double stddev = std::sqrt(var);
    if (stddev < 1e-6) {
      stddev = 1e-6;
      if (warnings) {
        warnings->push_back("fit_bins: channel " + std::to_string(ch) +
                            " has (near) zero variance; std floored at 1e-6");
      }
    }
    bins.channel_mean[ch] = mean;
    bins.channel_std[ch] = stddev;

    // Boundary k at the (k * n / n_cl)-th order statistic (0-indexed).
    // With lower-inclusive assignment and distinct values this puts
    // floor/ceil(n / n_cl) samples in every bin.
    auto& bounds = bins.boundaries[ch];
    bounds.resize(n_cl - 1);
    for (int k = 1; k < n_cl; ++k) {
      bounds[k - 1] = s[static_cast<size_t>(k) * n / n_cl];
    }
    // Duplicated sample values can collapse quantiles; keep the boundary
    // sequence strictly increasing so the bin intervals stay well formed.
    for (int k = 1; k < n_cl - 1; ++k) {
      if (bounds[k] <= bounds[k - 1]) {
        bounds[k] = std::nextafter(bounds[k - 1],
                                   std::numeric_limits<double>::infinity());
      }
    }

    auto& reps = bins.representatives[ch];
    reps.resize(n_cl);
    // Segment the sorted samples by the same rule CoeffToClass applies.
    size_t lo = 0;
    for (int k = 0; k < n_cl; ++k) {
      size_t hi = (k < n_cl - 1)
                      ? std::lower_bound(s.begin() + lo, s.end(), bounds[k]) -
                            s.begin()
                      : n;
      if (hi > lo) {
        reps[k] = MedianOfSorted(s, lo, hi);
      } else if (k == 0) {
        reps[k] = bounds[0] - 1.0;
      } else if (k == n_cl - 1) {
        reps[k] = bounds[k - 1];
      } else {
        reps[k] = 0.5 * (bounds[k - 1] + bounds[k]);
      }
      lo = hi;
    }
  }
  return bins;
}

int ClassOf(const BinSpec& bins, int channel, double value) {
  const auto& bounds = bins.boundaries[channel];
  // Class = number of boundaries <= value (lower-inclusive rule).
  return static_cast<int>(std::upper_bound(bounds.begin(), bounds.end(), value) -
                          bounds.begin());
}

ClassMap CoeffToClass(const CoeffMap& coeffs, const BinSpec& bins) {
  if (coeffs.n_ch != bins.n_ch) {
    throw DataError("coeff_to_class: channel count mismatch");
  }
  ClassMap out(coeffs.n_w, coeffs.n_h, coeffs.n_ch);
  const size_t cells = static_cast<size_t>(coeffs.n_w) * coeffs.n_h;
  for (size_t i = 0; i < cells; ++i) {
    for (int c = 0; c < coeffs.n_ch; ++c) {
      out.labels[i * coeffs.n_ch + c] =
          ClassOf(bins, c, coeffs.values[i * coeffs.n_ch + c]);
    }
  }
  return out;
}

CoeffMap ClassToCoeff(const ClassMap& labels, const BinSpec& bins) {
  if (labels.n_ch != bins.n_ch) {
    throw DataError("class_to_coeff: channel count mismatch");
  }
  CoeffMap out(labels.n_w, labels.n_h, labels.n_ch);
  const size_t cells = static_cast<size_t>(labels.n_w) * labels.n_h;
  for (size_t i = 0; i < cells; ++i) {
    for (int c = 0; c < labels.n_ch; ++c) {
      const int k = labels.labels[i * labels.n_ch + c];
      if (k < 0 || k >= bins.n_cl) {
        throw DataError("class_to_coeff: label " + std::to_string(k) +
                        " out of range");
      }
      out.values[i * labels.n_ch + c] = bins.representatives[c][k];
    }
  }
  return out;
}

namespace {

// Luma, center-cropped to a multiple of the block size, Laplacian applied.
ImageBuffer PrepareForSpectrum(const ImageBuffer& img, int block) {
  ImageBuffer luma = img.planes == 3 ? RgbToLuma(img) : img;
  const int w = (luma.width / block) * block;
  const int h = (luma.height / block) * block;
  if (w < block || h < block) {
    throw DataError("freq_histogram: image smaller than one block");
  }
  return Laplacian(CenterCrop(luma, w, h));
}

}  // namespace

std::vector<double> CollectChannelCoeffs(const std::vector<ImageBuffer>& images,
                                         int block, int u, int v) {
  if (images.empty()) throw DataError("freq_histogram: empty image list");
  if (u < 0 || u >= block || v < 0 || v >= block) {
    throw DataError("freq_histogram: channel out of range");
  }
  std::vector<double> out;
  const int c = u * block + v;
  for (const ImageBuffer& img : images) {
    ImageBuffer lap = PrepareForSpectrum(img, block);
    CoeffMap coeffs = PatchDct(lap, block, block);
    const size_t cells = static_cast<size_t>(coeffs.n_w) * coeffs.n_h;
    for (size_t i = 0; i < cells; ++i) {
      out.push_back(coeffs.values[i * coeffs.n_ch + c]);
    }
  }
  return out;
}

std::vector<int64_t> FreqHistogram(const std::vector<ImageBuffer>& images,
                                   int block, int u, int v,
                                   const std::vector<double>& bin_edges) {
  if (bin_edges.size() < 2) throw DataError("freq_histogram: need >= 2 edges");
  std::vector<int64_t> counts(bin_edges.size() - 1, 0);
  const std::vector<double> values = CollectChannelCoeffs(images, block, u, v);
  const int last = static_cast<int>(counts.size()) - 1;
  for (double x : values) {
    // Edge intervals are [e_i, e_{i+1}); out-of-range values land in the
    // first/last bin so every patch is counted.
    int idx = static_cast<int>(std::upper_bound(bin_edges.begin(),
                                                bin_edges.end(), x) -
                               bin_edges.begin()) - 1;
    counts[std::clamp(idx, 0, last)] += 1;
  }
  return counts;
}

namespace {

constexpr char kBinMagic[] = "freqres-bins";
constexpr int kBinVersion = 1;

void WriteDoubles(std::ostream& out, const std::vector<double>& v) {
  out.precision(17);
  for (size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
  out << "\n";
}

std::vector<double> ReadDoubles(std::istream& in, size_t n, const char* what) {
  std::vector<double> v(n);
  for (size_t i = 0; i < n; ++i) {
    if (!(in >> v[i])) throw DataError(std::string("binspec: truncated ") + what);
  }
  return v;
}

}  // namespace

std::string BinSpecToString(const BinSpec& bins) {
  std::ostringstream out;
  out << kBinMagic << " " << kBinVersion << "\n";
  out << "n_ch " << bins.n_ch << "\n";
  out << "n_cl " << bins.n_cl << "\n";
  for (int ch = 0; ch < bins.n_ch; ++ch) {
    out << "channel " << ch << "\n";
    WriteDoubles(out, bins.boundaries[ch]);
    WriteDoubles(out, bins.representatives[ch]);
    out.precision(17);
    out << bins.channel_mean[ch] << " " << bins.channel_std[ch] << "\n";
  }
  return out.str();
}

BinSpec BinSpecFromString(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kBinMagic) {
    throw DataError("binspec: bad header");
  }
  if (version != kBinVersion) {
    throw DataError("binspec: unsupported version " + std::to_string(version));
  }
  std::string key;
  BinSpec bins;
  if (!(in >> key >> bins.n_ch) || key != "n_ch" || bins.n_ch <= 0) {
    throw DataError("binspec: bad n_ch");
  }
  if (!(in >> key >> bins.n_cl) || key != "n_cl" || bins.n_cl <= 0) {
    throw DataError("binspec: bad n_cl");
  }
  bins.boundaries.resize(bins.n_ch);
  bins.representatives.resize(bins.n_ch);
  bins.channel_mean.resize(bins.n_ch);
  bins.channel_std.resize(bins.n_ch);
  for (int ch = 0; ch < bins.n_ch; ++ch) {
    int idx = -1;
    if (!(in >> key >> idx) || key != "channel" || idx != ch) {
      throw DataError("binspec: bad channel header");
    }
    bins.boundaries[ch] = ReadDoubles(in, bins.n_cl - 1, "boundaries");
    bins.representatives[ch] = ReadDoubles(in, bins.n_cl, "representatives");
    auto stats = ReadDoubles(in, 2, "stats");
    bins.channel_mean[ch] = stats[0];
    bins.channel_std[ch] = stats[1];
    if (bins.channel_std[ch] <= 0.0) throw DataError("binspec: std must be > 0");
    for (int k = 1; k < bins.n_cl - 1; ++k) {
      if (bins.boundaries[ch][k] <= bins.boundaries[ch][k - 1]) {
        throw DataError("binspec: boundaries not strictly increasing");
      }
    }
  }
  return bins;
}

void SaveBinSpec(const BinSpec& bins, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError(path + ": unwritable path");
  out << BinSpecToString(bins);
  if (!out) throw DataError(path + ": write failed");
}

BinSpec LoadBinSpec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": unreadable file");
  std::stringstream buf;
  buf << in.rdbuf();
  return BinSpecFromString(buf.str());
}

}  // namespace freqres

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

#ifndef FREQRES_BINS_HPP_
#define FREQRES_BINS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "freqres/dct.hpp"
#include "freqres/image.hpp"

namespace freqres {

// Per-patch integer class labels, same grid layout as CoeffMap.
struct ClassMap {
  int n_w = 0, n_h = 0, n_ch = 0;
  std::vector<int> labels;

  ClassMap() = default;
  ClassMap(int nw, int nh, int nch)
      : n_w(nw), n_h(nh), n_ch(nch),
        labels(static_cast<size_t>(nw) * nh * nch, 0) {}

  int& at(int gx, int gy, int c) {
    return labels[(static_cast<size_t>(gy) * n_w + gx) * n_ch + c];
  }
  int at(int gx, int gy, int c) const {
    return labels[(static_cast<size_t>(gy) * n_w + gx) * n_ch + c];
  }
};

// Per-patch per-channel probability vectors over n_cl classes.
struct ClassDistMap {
  int n_w = 0, n_h = 0, n_ch = 0, n_cl = 0;
  std::vector<double> probs;

  ClassDistMap() = default;
  ClassDistMap(int nw, int nh, int nch, int ncl)
      : n_w(nw), n_h(nh), n_ch(nch), n_cl(ncl),
        probs(static_cast<size_t>(nw) * nh * nch * ncl, 0.0) {}

  double& at(int gx, int gy, int c, int k) {
    return probs[((static_cast<size_t>(gy) * n_w + gx) * n_ch + c) * n_cl + k];
  }
  double at(int gx, int gy, int c, int k) const {
    return probs[((static_cast<size_t>(gy) * n_w + gx) * n_ch + c) * n_cl + k];
  }
};

// Equal-frequency class bins per frequency channel: the class-to-coefficient
// mapping plus the normalization statistics used by the decoder input.
//
// Assignment rule (lower-inclusive): value x belongs to bin k iff
// boundaries[k-1] <= x < boundaries[k]; bin 0 is open below and the last
// bin takes everything at or above the final boundary.
struct BinSpec {
  int n_ch = 0;
  int n_cl = 0;
  std::vector<std::vector<double>> boundaries;       // per channel, n_cl - 1
  std::vector<std::vector<double>> representatives;  // per channel, n_cl
  std::vector<double> channel_mean;
  std::vector<double> channel_std;
};

// Fits per-channel bins so that each class holds the same number of the
// fitting samples (counts balanced to within one for distinct values).
// Boundary k sits at the (k * n / n_cl)-th order statistic; the
// representative of a bin is the median of the samples assigned to it.
// Channels with zero variance get std floored at 1e-6 and a warning line.
BinSpec FitBins(const std::vector<std::vector<double>>& samples, int n_cl,
                std::vector<std::string>* warnings = nullptr);

// Class of a single value under the lower-inclusive rule.
int ClassOf(const BinSpec& bins, int channel, double value);

// Per-value binary search of each coefficient against its channel bins.
ClassMap CoeffToClass(const CoeffMap& coeffs, const BinSpec& bins);

// Representative lookup: the mapping from class indices back to real
// coefficient values.
CoeffMap ClassToCoeff(const ClassMap& labels, const BinSpec& bins);

// Collects the (u, v) DCT coefficient of Laplacian-filtered block x block
// patches over a set of images (color inputs are reduced to luma,
// dimensions center-cropped to multiples of the block size).
std::vector<double> CollectChannelCoeffs(const std::vector<ImageBuffer>& images,
                                         int block, int u, int v);

// Histogram of CollectChannelCoeffs samples. Values outside the edge range
// are counted in the first/last bin so that total counts equal the number
// of patches.
std::vector<int64_t> FreqHistogram(const std::vector<ImageBuffer>& images,
                                   int block, int u, int v,
                                   const std::vector<double>& bin_edges);

// Text persistence (versioned header; full double precision).
void SaveBinSpec(const BinSpec& bins, const std::string& path);
BinSpec LoadBinSpec(const std::string& path);
std::string BinSpecToString(const BinSpec& bins);
BinSpec BinSpecFromString(const std::string& text);

}  // namespace freqres

#endif  // FREQRES_BINS_HPP_

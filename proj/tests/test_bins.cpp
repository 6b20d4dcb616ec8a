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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "freqres/bins.hpp"
#include "freqres/jpegsim.hpp"
#include "testutil.hpp"

using namespace freqres;
using testutil::RandomU8Image;
using testutil::SyntheticNaturalImage;
using testutil::TempDir;

namespace {

// Independent assignment oracle: sort-based counting of samples per bin.
std::vector<int> CountPerBin(const BinSpec& bins, int ch,
                             const std::vector<double>& samples) {
  std::vector<int> counts(bins.n_cl, 0);
  for (double v : samples) counts[ClassOf(bins, ch, v)] += 1;
  return counts;
}

}  // namespace

TEST_SUITE("freqlab") {

TEST_CASE("fit_bins splits 1..14 into seven pairs") {
  std::vector<double> samples(14);
  std::iota(samples.begin(), samples.end(), 1.0);
  BinSpec bins = FitBins({samples}, 7);
  REQUIRE(bins.boundaries[0].size() == 6);
  CHECK(bins.boundaries[0] == std::vector<double>{3, 5, 7, 9, 11, 13});
  const std::vector<int> counts = CountPerBin(bins, 0, samples);
  for (int c : counts) CHECK(c == 2);
  CHECK(bins.representatives[0][0] == 1.5);
  CHECK(bins.representatives[0][6] == 13.5);
}

TEST_CASE("n_cl = 1 degenerates to the overall median") {
  std::vector<double> samples = {5.0, 1.0, 9.0};
  BinSpec bins = FitBins({samples}, 1);
  CHECK(bins.boundaries[0].empty());
  CHECK(bins.representatives[0][0] == 5.0);
}

TEST_CASE("per-bin counts are balanced within one") {
  Rng rng(211);
  for (int iter = 0; iter < 5; ++iter) {
    const size_t n = 500 + rng.Below(1000);
    std::vector<double> samples(n);
    for (double& v : samples) v = rng.Uniform(-100.0, 100.0);
    BinSpec bins = FitBins({samples}, 7);
    const std::vector<int> counts = CountPerBin(bins, 0, samples);
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    CHECK(*hi - *lo <= 1);
    CHECK(std::accumulate(counts.begin(), counts.end(), 0) ==
          static_cast<int>(n));
  }
}

TEST_CASE("boundary values belong to the upper bin") {
  std::vector<double> samples(14);
  std::iota(samples.begin(), samples.end(), 1.0);
  BinSpec bins = FitBins({samples}, 7);
  CHECK(ClassOf(bins, 0, bins.boundaries[0][2]) == 3);
  CHECK(ClassOf(bins, 0, -1e9) == 0);
  CHECK(ClassOf(bins, 0, 1e9) == 6);
}

TEST_CASE("class assignment is monotone in the value") {
  Rng rng(223);
  std::vector<double> samples(400);
  for (double& v : samples) v = rng.Normal() * 10.0;
  BinSpec bins = FitBins({samples}, 7);
  int prev = 0;
  for (double v = -50.0; v <= 50.0; v += 0.25) {
    const int k = ClassOf(bins, 0, v);
    CHECK(k >= prev);
    prev = k;
  }
}

TEST_CASE("representatives are strictly increasing and sit inside their bins") {
  Rng rng(227);
  std::vector<std::vector<double>> samples(3);
  for (auto& ch : samples) {
    ch.resize(512);
    for (double& v : ch) v = rng.Uniform(-1000.0, 1000.0);
  }
  BinSpec bins = FitBins(samples, 7);
  for (int ch = 0; ch < 3; ++ch) {
    for (int k = 0; k < 7; ++k) {
      CHECK(ClassOf(bins, ch, bins.representatives[ch][k]) == k);
      if (k > 0) {
        CHECK(bins.representatives[ch][k] > bins.representatives[ch][k - 1]);
      }
    }
  }
}

TEST_CASE("class/coefficient round-trip is exact for every class") {
  Rng rng(229);
  std::vector<std::vector<double>> samples(16);
  for (auto& ch : samples) {
    ch.resize(200);
    for (double& v : ch) v = rng.Normal() * 25.0;
  }
  BinSpec bins = FitBins(samples, 7);
  ClassMap labels(2, 2, 16);
  for (int k = 0; k < 7; ++k) {
    for (int c = 0; c < 16; ++c) {
      for (auto& l : labels.labels) l = k;
      CoeffMap coeffs = ClassToCoeff(labels, bins);
      ClassMap back = CoeffToClass(coeffs, bins);
      CHECK(back.labels == labels.labels);
      CHECK(coeffs.at(0, 0, c) == bins.representatives[c][k]);
    }
  }
}

TEST_CASE("with the 1..14 bins, label 0 maps to 1.5") {
  std::vector<double> samples(14);
  std::iota(samples.begin(), samples.end(), 1.0);
  BinSpec bins = FitBins({samples}, 7);
  ClassMap labels(1, 1, 1);
  labels.labels[0] = 0;
  CHECK(ClassToCoeff(labels, bins).values[0] == 1.5);
  labels.labels[0] = 7;
  CHECK_THROWS_AS(ClassToCoeff(labels, bins), DataError);
}

TEST_CASE("fit_bins rejects undersized channels and flags zero variance") {
  CHECK_THROWS_AS(FitBins({{1.0, 2.0}}, 7), DataError);
  std::vector<std::string> warnings;
  BinSpec bins = FitBins({std::vector<double>(50, 42.0)}, 3, &warnings);
  CHECK(!warnings.empty());
  CHECK(bins.channel_std[0] == 1e-6);
}

TEST_CASE("binspec text round-trips exactly") {
  Rng rng(233);
  std::vector<std::vector<double>> samples(4);
  for (auto& ch : samples) {
    ch.resize(128);
    for (double& v : ch) v = rng.Normal() * 3.0 + 0.1;
  }
  BinSpec bins = FitBins(samples, 5);
  TempDir dir("bins");
  SaveBinSpec(bins, dir.file("b.txt"));
  BinSpec back = LoadBinSpec(dir.file("b.txt"));
  CHECK(back.n_ch == bins.n_ch);
  CHECK(back.n_cl == bins.n_cl);
  for (int ch = 0; ch < bins.n_ch; ++ch) {
    CHECK(back.boundaries[ch] == bins.boundaries[ch]);
    CHECK(back.representatives[ch] == bins.representatives[ch]);
    CHECK(back.channel_mean[ch] == bins.channel_mean[ch]);
    CHECK(back.channel_std[ch] == bins.channel_std[ch]);
  }
  CHECK_THROWS_AS(BinSpecFromString("bogus 1"), DataError);
}

TEST_CASE("freq_histogram concentrates constant images at zero") {
  std::vector<ImageBuffer> images;
  ImageBuffer img(32, 32, 1, Domain::kU8);
  for (double& v : img.data) v = 123.0;
  images.push_back(img);
  const std::vector<double> edges = {-10.0, -1.0, -1e-9, 1e-9, 1.0, 10.0};
  std::vector<int64_t> counts = FreqHistogram(images, 8, 3, 5, edges);
  CHECK(counts[2] == 16);  // all 16 patches in the zero bin
  CHECK(std::accumulate(counts.begin(), counts.end(), int64_t{0}) == 16);
}

TEST_CASE("freq_histogram conserves the patch count") {
  Rng rng(239);
  std::vector<ImageBuffer> images;
  images.push_back(RandomU8Image(rng, 40, 40, 1));  // 25 patches
  images.push_back(RandomU8Image(rng, 24, 16, 1));  // 6 patches
  const std::vector<double> edges = {-2.0, 0.0, 2.0};  // deliberately narrow
  std::vector<int64_t> counts = FreqHistogram(images, 8, 7, 7, edges);
  CHECK(std::accumulate(counts.begin(), counts.end(), int64_t{0}) == 31);
  CHECK_THROWS_AS(FreqHistogram({}, 8, 0, 0, edges), DataError);
}

TEST_CASE("JPEG degradation narrows the high-frequency distribution") {
  Rng rng(241);
  std::vector<ImageBuffer> originals, degraded;
  for (int i = 0; i < 6; ++i) {
    ImageBuffer img = SyntheticNaturalImage(rng, 64, 64);
    originals.push_back(img);
    degraded.push_back(JpegDegrade(img, 10));
  }
  auto sample_std = [](const std::vector<double>& v) {
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::sqrt(var / (v.size() - 1));
  };
  const double std_orig = sample_std(CollectChannelCoeffs(originals, 8, 7, 7));
  const double std_jpeg = sample_std(CollectChannelCoeffs(degraded, 8, 7, 7));
  CHECK(std_jpeg < std_orig);
}

}  // TEST_SUITE

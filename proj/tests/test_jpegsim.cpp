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

#include <cmath>

#include "freqres/jpegsim.hpp"
#include "freqres/metrics.hpp"
#include "testutil.hpp"

using namespace freqres;
using testutil::RandomU8Image;
using testutil::SyntheticNaturalImage;

TEST_SUITE("jpegsim") {

TEST_CASE("quality 50 reproduces the standard table") {
  QTable q = QualityTable(50);
  CHECK(q.entries == StandardLuminanceTable());
}

TEST_CASE("quality scaling follows the IJG formula") {
  CHECK(QualityTable(10).entries[0] == 80);  // floor((16*500 + 50)/100)
  QTable lossless = QualityTable(100);
  for (int v : lossless.entries) CHECK(v == 1);
  // Low quality saturates at 255 for the large entries.
  QTable harsh = QualityTable(1);
  CHECK(harsh.entries[63] == 255);
  for (int v : harsh.entries) {
    CHECK(v >= 1);
    CHECK(v <= 255);
  }
}

TEST_CASE("quality factor bounds are enforced") {
  CHECK_THROWS_AS(QualityTable(0), DataError);
  CHECK_THROWS_AS(QualityTable(101), DataError);
}

TEST_CASE("constant 128 images pass through untouched") {
  ImageBuffer img(16, 16, 1, Domain::kU8);
  for (double& v : img.data) v = 128.0;
  for (int qf : {1, 10, 50, 100}) {
    CHECK(JpegDegrade(img, qf).data == img.data);
  }
}

TEST_CASE("quality 100 is lossless up to rounding") {
  Rng rng(307);
  ImageBuffer img = SyntheticNaturalImage(rng, 64, 64);
  ImageBuffer out = JpegDegrade(img, 100);
  CHECK(Psnr(img, out) >= 50.0);
  double max_dev = 0.0;
  for (size_t i = 0; i < img.data.size(); ++i) {
    max_dev = std::max(max_dev, std::abs(img.data[i] - out.data[i]));
  }
  CHECK(max_dev <= 2.0);
}

TEST_CASE("PSNR rises with the quality factor") {
  Rng rng(311);
  ImageBuffer img = SyntheticNaturalImage(rng, 96, 96);
  double prev = -1.0;
  for (int qf : {10, 20, 50, 90}) {
    const double psnr = Psnr(img, JpegDegrade(img, qf));
    CHECK(psnr >= prev);
    prev = psnr;
  }
}

TEST_CASE("double degradation is nearly idempotent") {
  Rng rng(313);
  ImageBuffer img = SyntheticNaturalImage(rng, 64, 64);
  ImageBuffer once = JpegDegrade(img, 10);
  ImageBuffer twice = JpegDegrade(once, 10);
  CHECK(std::abs(Psnr(img, once) - Psnr(img, twice)) < 1.0);
}

TEST_CASE("degradation at QF 10 raises the blocking factor") {
  Rng rng(317);
  ImageBuffer img = SyntheticNaturalImage(rng, 96, 96);
  CHECK(Bef(JpegDegrade(img, 10)) > Bef(img));
}

TEST_CASE("dimension and domain preconditions") {
  ImageBuffer odd(20, 16, 1, Domain::kU8);
  CHECK_THROWS_AS(JpegDegrade(odd, 50), DataError);
  ImageBuffer real(16, 16, 1, Domain::kReal);
  CHECK_THROWS_AS(JpegDegrade(real, 50), DataError);
}

TEST_CASE("prepare_dims center-crops to the block multiple") {
  Rng rng(331);
  ImageBuffer img = RandomU8Image(rng, 100, 100, 1);
  ImageBuffer cropped = PrepareDims(img, 8);
  CHECK(cropped.width == 96);
  CHECK(cropped.height == 96);
  CHECK(cropped.at(0, 0, 0) == img.at(0, 2, 2));

  ImageBuffer exact = RandomU8Image(rng, 96, 96, 1);
  ImageBuffer same = PrepareDims(exact, 8);
  CHECK(same.data == exact.data);

  ImageBuffer tiny(7, 7, 1, Domain::kU8);
  CHECK_THROWS_AS(PrepareDims(tiny, 8), DataError);
  CHECK_THROWS_AS(PrepareDims(exact, 5), DataError);
}

TEST_CASE("parallel degradation matches the serial reference bit-exactly") {
  Rng rng(337);
  ImageBuffer img = SyntheticNaturalImage(rng, 64, 48);
  CHECK(JpegDegrade(img, 10).data == JpegDegradeSerial(img, 10).data);
  CHECK(JpegDegrade(img, 90).data == JpegDegradeSerial(img, 90).data);
}

}  // TEST_SUITE

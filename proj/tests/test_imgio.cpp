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

#include <fstream>

#include "freqres/image.hpp"
#include "testutil.hpp"

using namespace freqres;
using testutil::RandomU8Image;
using testutil::TempDir;

TEST_SUITE("imgio") {

TEST_CASE("pgm load maps bytes directly") {
  TempDir dir("pgm");
  const std::string path = dir.file("a.pgm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n2 2\n255\n";
    const unsigned char bytes[4] = {0, 255, 128, 64};
    out.write(reinterpret_cast<const char*>(bytes), 4);
  }
  ImageBuffer img = LoadImage(path);
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.planes == 1);
  CHECK(img.domain == Domain::kU8);
  CHECK(img.data == std::vector<double>{0, 255, 128, 64});
}

TEST_CASE("pgm header comments are skipped") {
  TempDir dir("pgm");
  const std::string path = dir.file("c.pgm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n# a comment\n1 1\n# another\n255\n";
    const unsigned char byte = 7;
    out.write(reinterpret_cast<const char*>(&byte), 1);
  }
  CHECK(LoadImage(path).data[0] == 7);
}

TEST_CASE("save/load round-trips U8 buffers bit-exactly") {
  TempDir dir("roundtrip");
  Rng rng(11);
  for (const char* name : {"a.pgm", "a.png"}) {
    ImageBuffer img = RandomU8Image(rng, 13, 9, 1);
    SaveImage(img, dir.file(name));
    ImageBuffer back = LoadImage(dir.file(name));
    CHECK(back.data == img.data);
  }
  for (const char* name : {"c.ppm", "c.png"}) {
    ImageBuffer img = RandomU8Image(rng, 6, 5, 3);
    SaveImage(img, dir.file(name));
    ImageBuffer back = LoadImage(dir.file(name));
    CHECK(back.planes == 3);
    CHECK(back.data == img.data);
  }
}

TEST_CASE("truncated inputs are format errors") {
  TempDir dir("bad");
  {
    std::ofstream out(dir.file("t.pgm"), std::ios::binary);
    out << "P5\n2 ";
  }
  CHECK_THROWS_AS(LoadImage(dir.file("t.pgm")), DataError);
  {
    std::ofstream out(dir.file("p.pgm"), std::ios::binary);
    out << "P5\n4 4\n255\nab";  // 2 of 16 payload bytes
  }
  CHECK_THROWS_AS(LoadImage(dir.file("p.pgm")), DataError);
  CHECK_THROWS_AS(LoadImage(dir.file("missing.pgm")), DataError);
}

TEST_CASE("16-bit maxval is rejected") {
  TempDir dir("bad");
  {
    std::ofstream out(dir.file("deep.pgm"), std::ios::binary);
    out << "P5\n1 1\n65535\n";
    out.write("\0\0", 2);
  }
  CHECK_THROWS_AS(LoadImage(dir.file("deep.pgm")), DataError);
}

TEST_CASE("real buffers are rounded half-up and clamped on write") {
  TempDir dir("clamp");
  ImageBuffer img(3, 1, 1, Domain::kReal);
  img.at(0, 0, 0) = 255.7;
  img.at(0, 0, 1) = -3.2;
  img.at(0, 0, 2) = 127.5;
  SaveImage(img, dir.file("r.pgm"));
  ImageBuffer back = LoadImage(dir.file("r.pgm"));
  CHECK(back.data == std::vector<double>{255, 0, 128});
}

TEST_CASE("rgb_to_luma uses full-range BT.601 weights") {
  ImageBuffer img(1, 1, 3, Domain::kU8);
  img.at(0, 0, 0) = 255;
  img.at(1, 0, 0) = 255;
  img.at(2, 0, 0) = 255;
  CHECK(RgbToLuma(img).at(0, 0, 0) == doctest::Approx(255.0).epsilon(1e-12));

  img.at(0, 0, 0) = 0;
  img.at(1, 0, 0) = 0;
  img.at(2, 0, 0) = 0;
  CHECK(RgbToLuma(img).at(0, 0, 0) == 0.0);

  img.at(0, 0, 0) = 255;
  CHECK(RgbToLuma(img).at(0, 0, 0) == doctest::Approx(76.245).epsilon(1e-12));

  ImageBuffer gray(1, 1, 1, Domain::kU8);
  CHECK_THROWS_AS(RgbToLuma(gray), DataError);
}

TEST_CASE("rgb_to_luma output stays within [0, 255]") {
  Rng rng(5);
  ImageBuffer img = RandomU8Image(rng, 16, 16, 3);
  ImageBuffer luma = RgbToLuma(img);
  for (double v : luma.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 255.0);
  }
}

TEST_CASE("laplacian of a constant image is zero") {
  ImageBuffer img(8, 8, 1, Domain::kU8);
  for (double& v : img.data) v = 77;
  ImageBuffer lap = Laplacian(img);
  for (double v : lap.data) CHECK(v == 0.0);
}

TEST_CASE("laplacian stamps the kernel on an impulse") {
  ImageBuffer img(5, 5, 1, Domain::kU8);
  img.at(0, 2, 2) = 1;
  ImageBuffer lap = Laplacian(img);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) {
      const int md = std::abs(y - 2) + std::abs(x - 2);
      const double want = md == 0 ? -4.0 : (md == 1 ? 1.0 : 0.0);
      CHECK(lap.at(0, y, x) == want);
    }
  }
}

TEST_CASE("laplacian of an affine ramp vanishes in the interior") {
  ImageBuffer img(12, 12, 1, Domain::kU8);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 12; ++x) img.at(0, y, x) = x;
  }
  ImageBuffer lap = Laplacian(img);
  for (int y = 1; y < 11; ++y) {
    for (int x = 1; x < 11; ++x) CHECK(lap.at(0, y, x) == 0.0);
  }
}

TEST_CASE("laplacian range bound for U8 inputs") {
  Rng rng(17);
  ImageBuffer lap = Laplacian(RandomU8Image(rng, 32, 32, 1));
  for (double v : lap.data) {
    CHECK(v >= -1020.0);
    CHECK(v <= 1020.0);
  }
}

TEST_CASE("laplacian parallel path matches the serial reference") {
  Rng rng(23);
  ImageBuffer img = RandomU8Image(rng, 37, 21, 1);
  CHECK(Laplacian(img).data == LaplacianSerial(img).data);
}

TEST_CASE("flip mirrors rows") {
  Rng rng(29);
  ImageBuffer img = RandomU8Image(rng, 7, 3, 1);
  ImageBuffer flipped = FlipHorizontal(img);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 7; ++x) {
      CHECK(flipped.at(0, y, x) == img.at(0, y, 6 - x));
    }
  }
  CHECK(FlipHorizontal(flipped).data == img.data);
}

}  // TEST_SUITE

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
#include <sstream>

#include "freqres/cli.hpp"
#include "freqres/image.hpp"
#include "freqres/jpegsim.hpp"
#include "testutil.hpp"

using namespace freqres;
using testutil::SyntheticNaturalImage;
using testutil::TempDir;

namespace {

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

void WriteCorpus(const TempDir& dir, int n, uint64_t seed, int w = 32, int h = 32) {
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "img%03d.pgm", i);
    SaveImage(SyntheticNaturalImage(rng, w, h), dir.file(name));
  }
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help exits 0, bad usage exits 1") {
  CHECK(RunCli({"--help"}) == 0);
  CHECK(RunCli({"degrade", "--help"}) == 0);
  CHECK(RunCli({}) == 1);                         // missing subcommand
  CHECK(RunCli({"no-such-command"}) == 1);
  CHECK(RunCli({"degrade", "--bogus-flag"}) == 1);
  CHECK(RunCli({"degrade", "--qf", "10"}) == 1);  // missing required --in
  CHECK(RunCli({"degrade", "--qf", "500", "--in", "x", "--out", "y"}) == 1);
}

TEST_CASE("degrade on a single file and on a directory") {
  TempDir dir("cli_degrade");
  Rng rng(1001);
  SaveImage(SyntheticNaturalImage(rng, 100, 100), dir.file("a.pgm"));
  CHECK(RunCli({"degrade", "--qf", "10", "--in", dir.file("a.pgm"), "--out",
                dir.file("a_deg.pgm")}) == 0);
  ImageBuffer degraded = LoadImage(dir.file("a_deg.pgm"));
  CHECK(degraded.width == 96);  // cropped to the block multiple
  CHECK(degraded.height == 96);

  TempDir in("cli_din"), out("cli_dout"), ref("cli_dref");
  WriteCorpus(in, 3, 1003);
  CHECK(RunCli({"degrade", "--qf", "10", "--in", in.path().string(), "--out",
                out.path().string(), "--ref-out", ref.path().string()}) == 0);
  for (int i = 0; i < 3; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "img%03d.pgm", i);
    ImageBuffer d = LoadImage(out.file(name));
    ImageBuffer r = LoadImage(ref.file(name));
    CHECK(d.width == r.width);
    CHECK(d.data != r.data);  // QF 10 must actually degrade
  }

  CHECK(RunCli({"degrade", "--qf", "10", "--in", dir.file("missing.pgm"),
                "--out", dir.file("x.pgm")}) == 2);
}

TEST_CASE("evaluate emits the CSV schema and degraded section") {
  TempDir ref("cli_ref"), cand("cli_cand");
  Rng rng(1009);
  for (int i = 0; i < 2; ++i) {
    ImageBuffer img = SyntheticNaturalImage(rng, 32, 32);
    const std::string name = "i" + std::to_string(i) + ".pgm";
    SaveImage(img, ref.file(name));
    SaveImage(img, cand.file(name));
  }
  TempDir outdir("cli_eval");
  CHECK(RunCli({"evaluate", "--restored", cand.path().string(), "--reference",
                ref.path().string(), "--out", outdir.file("m.csv")}) == 0);
  const std::string csv = Slurp(outdir.file("m.csv"));
  CHECK(csv.find("filename,psnr,psnr_b,ssim,bef,bef_over_mse") != std::string::npos);
  CHECK(csv.find("inf") != std::string::npos);  // identical images
  CHECK(csv.find("#mean") != std::string::npos);
  CHECK(csv.find("#bound") != std::string::npos);

  CHECK(RunCli({"evaluate", "--restored", cand.path().string(), "--reference",
                "/nonexistent-dir"}) == 2);
}

TEST_CASE("fit-bins then label runs the inspection pipeline") {
  TempDir corpus("cli_bins");
  WriteCorpus(corpus, 4, 1013);
  TempDir out("cli_bins_out");
  CHECK(RunCli({"fit-bins", "--in", corpus.path().string(), "--out",
                out.file("bins.txt"), "--n-cl", "7"}) == 0);
  CHECK(RunCli({"label", "--in", corpus.file("img000.pgm"), "--bins",
                out.file("bins.txt"), "--out", out.file("labels.csv")}) == 0);
  const std::string csv = Slurp(out.file("labels.csv"));
  CHECK(csv.find("gx,gy,channel,label,coeff") != std::string::npos);
  // 32x32 image, 4x4 patches, 16 channels: 8*8*16 rows + header.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 8 * 8 * 16 + 1);
  CHECK(RunCli({"label", "--in", corpus.file("img000.pgm"), "--bins",
                out.file("bins.txt"), "--q-source", "bogus"}) == 1);
}

TEST_CASE("freq-hist compares original and degraded sets") {
  TempDir orig("cli_fh_orig"), deg("cli_fh_deg"), out("cli_fh_out");
  Rng rng(1019);
  for (int i = 0; i < 4; ++i) {
    ImageBuffer img = SyntheticNaturalImage(rng, 64, 64);
    const std::string name = "i" + std::to_string(i) + ".pgm";
    SaveImage(img, orig.file(name));
    SaveImage(JpegDegrade(img, 10), deg.file(name));
  }
  CHECK(RunCli({"freq-hist", "--in", orig.path().string(), "--in",
                deg.path().string(), "--channel", "7,7", "--block", "8",
                "--hist-bins", "32", "--out", out.file("h.csv")}) == 0);
  const std::string csv = Slurp(out.file("h.csv"));
  std::istringstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));  // header
  int64_t zero_orig = -1, zero_deg = -1;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string lo, hi, c_orig, c_deg;
    std::getline(row, lo, ',');
    std::getline(row, hi, ',');
    std::getline(row, c_orig, ',');
    std::getline(row, c_deg, ',');
    if (std::stod(lo) <= 0.0 && 0.0 < std::stod(hi)) {
      zero_orig = std::stoll(c_orig);
      zero_deg = std::stoll(c_deg);
    }
  }
  REQUIRE(zero_orig >= 0);
  // QF-10 crushes channel (7,7): the zero bin must gain mass.
  CHECK(zero_deg > zero_orig);

  CHECK(RunCli({"freq-hist", "--in", orig.path().string(), "--channel", "99"}) == 1);
}

TEST_CASE("grad-check subcommand passes") {
  CHECK(RunCli({"grad-check", "--seeds", "1"}) == 0);
}

TEST_CASE("train, restore and evaluate wire end to end") {
  TempDir corpus("cli_train");
  WriteCorpus(corpus, 4, 1021, 24, 24);
  TempDir work("cli_work");
  const std::vector<std::string> tiny_overrides = {
      "--set", "crop=16",          "--set", "epochs=1", "--set", "batch=4",
      "--set", "stem=4",           "--set", "features=8",
      "--set", "stage_hidden=8",   "--set", "up=8"};

  std::vector<std::string> train_c = {"train-classifier", "--in",
                                      corpus.path().string(), "--out",
                                      work.file("c.ckpt")};
  train_c.insert(train_c.end(), tiny_overrides.begin(), tiny_overrides.end());
  CHECK(RunCli(train_c) == 0);

  std::vector<std::string> train_e = {
      "train-ced", "--in", corpus.path().string(), "--mode", "gt",
      "--out", work.file("g.ckpt"), "--log", work.file("g.csv")};
  train_e.insert(train_e.end(), tiny_overrides.begin(), tiny_overrides.end());
  CHECK(RunCli(train_e) == 0);
  CHECK(Slurp(work.file("g.csv")).find("epoch,loss,val_psnr") == 0);

  // Degrade a couple of images, restore them, evaluate.
  TempDir deg("cli_deg2"), restored("cli_rest"), refs("cli_refs2");
  CHECK(RunCli({"degrade", "--qf", "10", "--in", corpus.path().string(),
                "--out", deg.path().string(), "--ref-out",
                refs.path().string()}) == 0);
  CHECK(RunCli({"restore", "--in", deg.path().string(), "--out",
                restored.path().string(), "--ced", work.file("g.ckpt"),
                "--classifier", work.file("c.ckpt")}) == 0);
  ImageBuffer r = LoadImage(restored.file("img000.pgm"));
  CHECK(r.width == 24);
  CHECK(r.height == 24);
  CHECK(RunCli({"evaluate", "--restored", restored.path().string(),
                "--reference", refs.path().string(), "--degraded",
                deg.path().string(), "--out", work.file("eval.csv")}) == 0);
  CHECK(Slurp(work.file("eval.csv")).find("#set,degraded") != std::string::npos);

  // A gt-mode checkpoint requires the classifier at restore time.
  CHECK(RunCli({"restore", "--in", deg.path().string(), "--out",
                restored.path().string(), "--ced", work.file("g.ckpt")}) == 1);

  // est mode without --classifier is a usage error.
  std::vector<std::string> bad_est = {
      "train-ced", "--in", corpus.path().string(), "--mode", "est",
      "--out", work.file("x.ckpt")};
  bad_est.insert(bad_est.end(), tiny_overrides.begin(), tiny_overrides.end());
  CHECK(RunCli(bad_est) == 1);
}

}  // TEST_SUITE

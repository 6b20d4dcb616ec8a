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
#include <fstream>

#include "freqres/checkpoint.hpp"
#include "freqres/models.hpp"
#include "testutil.hpp"

using namespace freqres;
using testutil::RandomU8Image;
using testutil::SyntheticNaturalImage;
using testutil::TempDir;

namespace {

ModelDims TinyDims() {
  ModelDims dims;
  dims.stem = 4;
  dims.features = 8;
  dims.stage_hidden = 8;
  dims.up = 8;
  return dims;
}

// Random bins over 16 channels so coefficient plumbing has realistic stats.
BinSpec TestBins(uint64_t seed, int n_ch = 16, int n_cl = 7) {
  Rng rng(seed);
  std::vector<std::vector<double>> samples(n_ch);
  for (auto& ch : samples) {
    ch.resize(256);
    for (double& v : ch) v = rng.Normal() * 20.0;
  }
  return FitBins(samples, n_cl);
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("feature extractor follows the grid shape law") {
  auto model = MakeClassifier<double>(TinyDims(), 4, 4, 7, 2);
  Rng rng(601);
  InitParameters(model.Parameters(), rng);
  for (const auto& [w, h] : std::vector<std::pair<int, int>>{
           {96, 96}, {128, 128}, {64, 32}}) {
    Graph<double> g(false);
    Tensor64 x(1, 1, h, w);
    TensorT<double>* f = FeatureForward(g, model.f, g.Leaf(std::move(x)));
    CHECK(f->c == 8);
    CHECK(f->h == h / 4);
    CHECK(f->w == w / 4);
  }
}

TEST_CASE("classifier rejects non-divisible inputs") {
  auto model = MakeClassifier<double>(TinyDims(), 4, 4, 7, 2);
  Rng rng(602);
  InitParameters(model.Parameters(), rng);
  Graph<double> g(false);
  Tensor64 x(1, 1, 10, 12);
  CHECK_THROWS_AS(ClassifierForward(g, model, g.Leaf(std::move(x))), DataError);
}

TEST_CASE("stage outputs are distributions; zero head gives uniform 1/7") {
  auto model = MakeClassifier<double>(TinyDims(), 4, 4, 7, 2);
  Rng rng(607);
  InitParameters(model.Parameters(), rng);
  for (auto& stage : model.stages) {
    std::fill(stage.head.w.t.v.begin(), stage.head.w.t.v.end(), 0.0);
    std::fill(stage.head.b.t.v.begin(), stage.head.b.t.v.end(), 0.0);
  }
  Graph<double> g(false);
  Tensor64 x(1, 1, 16, 16);
  Rng noise(11);
  for (double& v : x.v) v = noise.Uniform(0, 1);
  ClassifierOutputs<double> out = ClassifierForward(g, model, g.Leaf(std::move(x)));
  REQUIRE(out.probs.size() == 2);
  for (TensorT<double>* probs : out.probs) {
    for (double p : probs->v) {
      CHECK(p == doctest::Approx(1.0 / 7.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("stage 2 consumes the feature map plus 112 distribution channels") {
  ModelDims dims;  // reference widths
  auto model = MakeClassifier<double>(dims, 4, 4, 7, 2);
  CHECK(model.stages[0].conv1.w.t.c == 64);
  CHECK(model.stages[1].conv1.w.t.c == 64 + 112);
  CHECK(model.stages[0].head.w.t.b == 112);  // n_ch * n_cl = 16 * 7
}

TEST_CASE("argmax labels break ties toward the lowest index") {
  ClassDistMap dist(2, 1, 1, 7);
  for (int k = 0; k < 7; ++k) {
    dist.at(0, 0, 0, k) = 1.0 / 7.0;  // exact ties
    dist.at(1, 0, 0, k) = k == 4 ? 0.4 : 0.1;
  }
  ClassMap labels = ArgmaxLabels(dist);
  CHECK(labels.at(0, 0, 0) == 0);
  CHECK(labels.at(1, 0, 0) == 4);
}

TEST_CASE("adding a constant to a cell's logits leaves the argmax unchanged") {
  Rng rng(613);
  Graph<double> g(false);
  Tensor64 logits(1, 14, 2, 2);
  for (double& v : logits.v) v = rng.Uniform(-3, 3);
  Tensor64 shifted = logits;
  for (int k = 0; k < 7; ++k) shifted.at(0, k, 1, 1) += 57.0;  // group 0, one cell
  TensorT<double>* p1 = g.GroupSoftmax(g.Leaf(logits), 7);
  TensorT<double>* p2 = g.GroupSoftmax(g.Leaf(shifted), 7);
  for (int grp = 0; grp < 2; ++grp) {
    for (int y = 0; y < 2; ++y) {
      for (int x = 0; x < 2; ++x) {
        int a1 = 0, a2 = 0;
        for (int k = 1; k < 7; ++k) {
          if (p1->at(0, grp * 7 + k, y, x) > p1->at(0, grp * 7 + a1, y, x)) a1 = k;
          if (p2->at(0, grp * 7 + k, y, x) > p2->at(0, grp * 7 + a2, y, x)) a2 = k;
        }
        CHECK(a1 == a2);
      }
    }
  }
}

TEST_CASE("stage-loss averaging is the arithmetic mean") {
  Graph<double> g(false);
  Tensor64 a(1, 1, 1, 1), b(1, 1, 1, 1);
  a.v[0] = 1.0;
  b.v[0] = 0.5;
  TensorT<double>* combined =
      g.ScalarCombine({{0.5, g.Leaf(a)}, {0.5, g.Leaf(b)}});
  CHECK(combined->v[0] == 0.75);
}

TEST_CASE("uniform stage distributions give loss ln 7") {
  auto model = MakeClassifier<double>(TinyDims(), 4, 4, 7, 2);
  Rng rng(617);
  InitParameters(model.Parameters(), rng);
  for (auto& stage : model.stages) {
    std::fill(stage.head.w.t.v.begin(), stage.head.w.t.v.end(), 0.0);
    std::fill(stage.head.b.t.v.begin(), stage.head.b.t.v.end(), 0.0);
  }
  Graph<double> g(false);
  Tensor64 x(1, 1, 8, 8);
  for (double& v : x.v) v = rng.Uniform(0, 1);
  ClassifierOutputs<double> out = ClassifierForward(g, model, g.Leaf(std::move(x)));
  std::vector<int> targets(16 * 2 * 2);
  for (int& t : targets) t = static_cast<int>(rng.Below(7));
  std::vector<std::pair<double, TensorT<double>*>> terms;
  for (TensorT<double>* logits : out.logits) {
    terms.emplace_back(0.5, g.SoftmaxCrossEntropy(logits, targets, 7));
  }
  TensorT<double>* loss = g.ScalarCombine(terms);
  CHECK(loss->v[0] == doctest::Approx(std::log(7.0)).epsilon(1e-9));
}

TEST_CASE("classifier and CED losses touch disjoint parameter sets") {
  auto classifier = MakeClassifier<double>(TinyDims(), 4, 4, 7, 2);
  auto ced = MakeCed<double>(TinyDims(), 4, 4);
  Rng rng(619);
  InitParameters(classifier.Parameters(), rng);
  InitParameters(ced.Parameters(), rng);
  const BinSpec bins = TestBins(3);

  ImageBuffer img = SyntheticNaturalImage(rng, 16, 16);

  // Classifier loss backward: no CED parameter picks up a gradient.
  {
    Graph<double> g(false);
    TensorT<double>* x = g.Leaf(ImageToTensor<double>(img));
    ClassifierOutputs<double> out = ClassifierForward(g, classifier, x);
    std::vector<int> targets(16 * 4 * 4, 3);
    std::vector<std::pair<double, TensorT<double>*>> terms;
    for (TensorT<double>* logits : out.logits) {
      terms.emplace_back(0.5, g.SoftmaxCrossEntropy(logits, targets, 7));
    }
    g.Backward(g.ScalarCombine(terms));
    bool classifier_touched = false;
    for (auto* p : classifier.Parameters()) {
      for (double gv : p->t.g) classifier_touched |= gv != 0.0;
    }
    CHECK(classifier_touched);
    for (auto* p : ced.Parameters()) {
      for (double gv : p->t.g) CHECK(gv == 0.0);
    }
  }

  // Reconstruction loss backward: encoder and decoder receive gradients,
  // the classifier stays untouched.
  {
    for (auto* p : classifier.Parameters()) p->t.ZeroGrad();
    Graph<double> g(false);
    TensorT<double>* x = g.Leaf(ImageToTensor<double>(img));
    TensorT<double>* f = FeatureForward(g, ced.enc, x);
    TensorT<double>* q = g.Leaf(ZeroCoeffTensor<double>(16, 4, 4));
    TensorT<double>* out = DecoderForward(g, ced, f, q);
    TensorT<double>* target = g.Leaf(ImageToTensor<double>(img));
    g.Backward(g.MseLoss(out, target));
    bool enc_touched = false, dec_touched = false;
    for (auto* p : ced.Parameters()) {
      bool touched = false;
      for (double gv : p->t.g) touched |= gv != 0.0;
      if (p->name.rfind("enc.", 0) == 0) enc_touched |= touched;
      if (p->name.rfind("dec.", 0) == 0) dec_touched |= touched;
    }
    CHECK(enc_touched);
    CHECK(dec_touched);
    for (auto* p : classifier.Parameters()) {
      for (double gv : p->t.g) CHECK(gv == 0.0);
    }
  }
}

TEST_CASE("encoder parameters are distinct storage from the classifier's F") {
  auto classifier = MakeClassifier<double>(TinyDims(), 4, 4, 7, 2);
  auto ced = MakeCed<double>(TinyDims(), 4, 4);
  for (auto* cp : classifier.Parameters()) {
    for (auto* ep : ced.Parameters()) {
      CHECK(cp != ep);
      CHECK(&cp->t.v != &ep->t.v);
    }
  }
}

TEST_CASE("decoder upsamples the grid back to the image size") {
  auto ced = MakeCed<double>(TinyDims(), 4, 4);
  Rng rng(631);
  InitParameters(ced.Parameters(), rng);
  Graph<double> g(false);
  Tensor64 x(1, 1, 96, 96);
  for (double& v : x.v) v = rng.Uniform(0, 1);
  TensorT<double>* f = FeatureForward(g, ced.enc, g.Leaf(std::move(x)));
  CHECK(f->h == 24);
  CHECK(f->w == 24);
  TensorT<double>* q = g.Leaf(ZeroCoeffTensor<double>(16, 24, 24));
  TensorT<double>* out = DecoderForward(g, ced, f, q);
  CHECK(out->c == 1);
  CHECK(out->h == 96);
  CHECK(out->w == 96);
  // No output activation: a random decoder produces values outside [0, 1].
  bool outside = false;
  for (double v : out->v) outside |= (v < 0.0 || v > 1.0);
  CHECK(outside);
}

TEST_CASE("decode rejects mismatched grids") {
  auto ced = MakeCed<double>(TinyDims(), 4, 4);
  Rng rng(641);
  InitParameters(ced.Parameters(), rng);
  Graph<double> g(false);
  Tensor64 x(1, 1, 32, 32);
  TensorT<double>* f = FeatureForward(g, ced.enc, g.Leaf(std::move(x)));
  TensorT<double>* q = g.Leaf(ZeroCoeffTensor<double>(16, 6, 6));  // wrong grid
  CHECK_THROWS_AS(DecoderForward(g, ced, f, q), DataError);
}

TEST_CASE("restore preserves dimensions and is bit-deterministic") {
  auto classifier = MakeClassifier<float>(TinyDims(), 4, 4, 7, 2);
  auto ced = MakeCed<float>(TinyDims(), 4, 4);
  Rng rng(643);
  InitParameters(classifier.Parameters(), rng);
  InitParameters(ced.Parameters(), rng);
  const BinSpec bins = TestBins(5);
  ImageBuffer img = SyntheticNaturalImage(rng, 32, 24);
  ImageBuffer r1 = Restore(&classifier, ced, bins, img, RestoreMode::kClassifier);
  CHECK(r1.width == 32);
  CHECK(r1.height == 24);
  CHECK(r1.domain == Domain::kReal);
  ImageBuffer r2 = Restore(&classifier, ced, bins, img, RestoreMode::kClassifier);
  CHECK(r1.data == r2.data);

  // ED mode needs no classifier.
  ImageBuffer r3 = Restore<float>(nullptr, ced, bins, img, RestoreMode::kZero);
  CHECK(r3.width == 32);
  CHECK_THROWS_AS(Restore<float>(nullptr, ced, bins, img, RestoreMode::kClassifier),
                  DataError);
}

TEST_CASE("classify emits valid distributions and labels") {
  auto classifier = MakeClassifier<float>(TinyDims(), 4, 4, 7, 2);
  Rng rng(647);
  InitParameters(classifier.Parameters(), rng);
  ImageBuffer img = SyntheticNaturalImage(rng, 16, 16);
  Classification cls = Classify(classifier, img);
  CHECK(cls.dist.n_w == 4);
  CHECK(cls.dist.n_h == 4);
  for (int gy = 0; gy < 4; ++gy) {
    for (int gx = 0; gx < 4; ++gx) {
      for (int c = 0; c < 16; ++c) {
        double sum = 0.0;
        for (int k = 0; k < 7; ++k) sum += cls.dist.at(gx, gy, c, k);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(cls.labels.at(gx, gy, c) >= 0);
        CHECK(cls.labels.at(gx, gy, c) < 7);
      }
    }
  }
}

TEST_CASE("checkpoints round-trip parameters, hyperparameters and bins") {
  TempDir dir("ckpt");
  auto classifier = MakeClassifier<float>(TinyDims(), 4, 4, 7, 2);
  Rng rng(653);
  InitParameters(classifier.Parameters(), rng);
  const BinSpec bins = TestBins(7);
  Checkpoint ckpt = MakeClassifierCheckpoint(classifier, bins);
  SaveCheckpoint(ckpt, dir.file("c.ckpt"));
  Checkpoint back = LoadCheckpoint(dir.file("c.ckpt"));
  CHECK(back.kind == CkptKind::kClassifier);
  CHECK(back.Hyper("n_cl") == 7);
  CHECK(BinSpecToString(back.bins) == BinSpecToString(bins));
  auto restored = ClassifierFromCheckpoint<float>(back);
  auto orig_params = classifier.Parameters();
  auto new_params = restored.Parameters();
  REQUIRE(orig_params.size() == new_params.size());
  for (size_t i = 0; i < orig_params.size(); ++i) {
    CHECK(orig_params[i]->name == new_params[i]->name);
    CHECK(orig_params[i]->t.v == new_params[i]->t.v);
  }

  auto ced = MakeCed<float>(TinyDims(), 4, 4);
  InitParameters(ced.Parameters(), rng);
  Checkpoint cckpt = MakeCedCheckpoint(ced, CedMode::kEst, bins);
  SaveCheckpoint(cckpt, dir.file("e.ckpt"));
  Checkpoint eback = LoadCheckpoint(dir.file("e.ckpt"));
  CHECK(eback.kind == CkptKind::kCed);
  CHECK(static_cast<CedMode>(eback.mode) == CedMode::kEst);
  CHECK_THROWS_AS(ClassifierFromCheckpoint<float>(eback), DataError);

  // Tampered manifest is rejected.
  Checkpoint bad = back;
  bad.tensors[0].name = "f.conv1.wx";
  SaveCheckpoint(bad, dir.file("bad.ckpt"));
  CHECK_THROWS_AS(ClassifierFromCheckpoint<float>(LoadCheckpoint(dir.file("bad.ckpt"))),
                  DataError);
  CHECK_THROWS_AS(LoadCheckpoint(dir.file("missing.ckpt")), DataError);
}

TEST_CASE("identical seeds give identical checkpoint bytes") {
  TempDir dir("det");
  auto write_ckpt = [&](const std::string& name) {
    auto model = MakeClassifier<float>(TinyDims(), 4, 4, 7, 2);
    Rng rng(1234);
    InitParameters(model.Parameters(), rng);
    SaveCheckpoint(MakeClassifierCheckpoint(model, TestBins(9)), dir.file(name));
  };
  write_ckpt("a.ckpt");
  write_ckpt("b.ckpt");
  std::ifstream fa(dir.file("a.ckpt"), std::ios::binary);
  std::ifstream fb(dir.file("b.ckpt"), std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(fa)), {});
  std::string sb((std::istreambuf_iterator<char>(fb)), {});
  CHECK(sa == sb);
  CHECK(!sa.empty());
}

}  // TEST_SUITE

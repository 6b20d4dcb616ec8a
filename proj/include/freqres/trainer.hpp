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

#ifndef FREQRES_TRAINER_HPP_
#define FREQRES_TRAINER_HPP_

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "freqres/bins.hpp"
#include "freqres/checkpoint.hpp"
#include "freqres/image.hpp"
#include "freqres/models.hpp"

namespace freqres {

enum class Precision { kF32, kF64 };
enum class QSource { kQuantized, kRaw };
enum class PrepMode { kCrop, kResize };

struct TrainConfig {
  int w_b = 4, h_b = 4;
  int n_cl = 7;
  int stages = 2;
  int quality_factor = 10;
  int crop = 96;
  int epochs = 10;
  int batch = 8;
  double lr = 1e-4;
  uint64_t seed = 1;
  Precision precision = Precision::kF32;
  QSource q_source = QSource::kQuantized;
  PrepMode prep = PrepMode::kCrop;
  ModelDims dims;

  void Validate() const;
};

// One `key = value` per line, '#' comments, unknown keys rejected.
TrainConfig ParseTrainConfig(const std::string& text);
TrainConfig LoadTrainConfig(const std::string& path);
// Single-key override (CLI flags win over the config file).
void ApplyConfigOverride(TrainConfig& config, const std::string& key,
                         const std::string& value);

struct SamplePair {
  std::string name;
  bool flipped = false;
  bool holdout = false;
  ImageBuffer ig;  // ground-truth luma (integer values, Real domain)
  ImageBuffer ij;  // JPEG-degraded luma, U8
  ClassMap y;
  CoeffMap q;
};

struct Dataset {
  std::vector<SamplePair> samples;      // ordered by (filename, flip)
  std::vector<size_t> train_idx;
  std::vector<size_t> holdout_idx;      // ~10% of source images, by name hash
  BinSpec bins;                         // fitted on training targets only
};

// Laplacian -> patch DCT -> class labels; q is the class representative
// map (the decoder's training-time input space) or the raw coefficients.
std::pair<ClassMap, CoeffMap> MakeLabels(const ImageBuffer& ig_luma,
                                         const BinSpec& bins, int w_b, int h_b,
                                         QSource q_source);

// Loads a directory of images, preps dimensions, duplicates horizontally
// flipped copies, degrades at the configured quality factor, fits the
// BinSpec on the training split and labels every sample.
Dataset BuildDataset(const std::string& image_dir, const TrainConfig& config,
                     std::ostream* warnings = nullptr);

// Minimizes the stage-averaged cross entropy with Adam; logs one CSV row
// per epoch (epoch, loss, per-stage held-out accuracy) and writes a
// checkpoint with the BinSpec embedded.
void TrainClassifier(Dataset& data, const TrainConfig& config,
                     const std::string& ckpt_path, std::ostream* log_csv,
                     std::ostream* progress);

// Minimizes the reconstruction MSE. Mode kGt feeds ground-truth
// coefficients, kEst feeds a frozen classifier's estimates
// (classifier_ckpt required), kEd feeds a zero map.
void TrainCed(Dataset& data, const TrainConfig& config, CedMode mode,
              const std::string& classifier_ckpt, const std::string& ckpt_path,
              std::ostream* log_csv, std::ostream* progress);

// Stable 10% holdout assignment used by BuildDataset.
bool IsHoldoutName(const std::string& name);

}  // namespace freqres

#endif  // FREQRES_TRAINER_HPP_

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

#include "freqres/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "freqres/jpegsim.hpp"
#include "freqres/metrics.hpp"
#include "freqres/optim.hpp"

namespace freqres {

namespace {

int64_t Lcm(int a, int b) { return static_cast<int64_t>(a) / std::gcd(a, b) * b; }

uint64_t Fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string Trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int ParseInt(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config: bad integer for " + key + ": '" + value + "'");
  }
}

double ParseDouble(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config: bad number for " + key + ": '" + value + "'");
  }
}

}  // namespace

bool IsHoldoutName(const std::string& name) { return Fnv1a(name) % 10 == 0; }

void TrainConfig::Validate() const {
  if (n_cl < 2) throw UsageError("config: n_cl must be >= 2");
  if (stages < 1) throw UsageError("config: stages must be >= 1");
  if (quality_factor < 1 || quality_factor > 100) {
    throw UsageError("config: quality_factor out of [1, 100]");
  }
  const int64_t step = Lcm(Lcm(w_b, h_b), 8);
  if (crop < step || crop % step != 0) {
    throw UsageError("config: crop must be a positive multiple of " +
                     std::to_string(step));
  }
  if (epochs < 1 || batch < 1) throw UsageError("config: epochs/batch must be >= 1");
  if (lr <= 0.0) throw UsageError("config: lr must be > 0");
  if (dims.stem < 1 || dims.features < 1 || dims.stage_hidden < 1 ||
      dims.up < 4 || dims.up % 4 != 0) {
    throw UsageError("config: bad model widths");
  }
}

void ApplyConfigOverride(TrainConfig& config, const std::string& key,
                         const std::string& value) {
  if (key == "w_b") config.w_b = ParseInt(key, value);
  else if (key == "h_b") config.h_b = ParseInt(key, value);
  else if (key == "n_cl") config.n_cl = ParseInt(key, value);
  else if (key == "stages") config.stages = ParseInt(key, value);
  else if (key == "quality_factor") config.quality_factor = ParseInt(key, value);
  else if (key == "crop") config.crop = ParseInt(key, value);
  else if (key == "epochs") config.epochs = ParseInt(key, value);
  else if (key == "batch") config.batch = ParseInt(key, value);
  else if (key == "lr") config.lr = ParseDouble(key, value);
  else if (key == "seed") config.seed = static_cast<uint64_t>(std::stoull(value));
  else if (key == "stem") config.dims.stem = ParseInt(key, value);
  else if (key == "features") config.dims.features = ParseInt(key, value);
  else if (key == "stage_hidden") config.dims.stage_hidden = ParseInt(key, value);
  else if (key == "up") config.dims.up = ParseInt(key, value);
  else if (key == "precision") {
    if (value == "f32") config.precision = Precision::kF32;
    else if (value == "f64") config.precision = Precision::kF64;
    else throw UsageError("config: precision must be f32 or f64");
  } else if (key == "q_source") {
    if (value == "quantized") config.q_source = QSource::kQuantized;
    else if (value == "raw") config.q_source = QSource::kRaw;
    else throw UsageError("config: q_source must be quantized or raw");
  } else if (key == "prep") {
    if (value == "crop") config.prep = PrepMode::kCrop;
    else if (value == "resize") config.prep = PrepMode::kResize;
    else throw UsageError("config: prep must be crop or resize");
  } else {
    throw UsageError("config: unknown key '" + key + "'");
  }
}

TrainConfig ParseTrainConfig(const std::string& text) {
  TrainConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) +
                       ": expected key = value");
    }
    ApplyConfigOverride(config, Trim(line.substr(0, eq)),
                        Trim(line.substr(eq + 1)));
  }
  config.Validate();
  return config;
}

TrainConfig LoadTrainConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": unreadable config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseTrainConfig(buf.str());
}

std::pair<ClassMap, CoeffMap> MakeLabels(const ImageBuffer& ig_luma,
                                         const BinSpec& bins, int w_b, int h_b,
                                         QSource q_source) {
  const CoeffMap raw = PatchDct(Laplacian(ig_luma), w_b, h_b);
  ClassMap y = CoeffToClass(raw, bins);
  CoeffMap q = q_source == QSource::kQuantized ? ClassToCoeff(y, bins) : raw;
  return {std::move(y), std::move(q)};
}

Dataset BuildDataset(const std::string& image_dir, const TrainConfig& config,
                     std::ostream* warnings) {
  namespace fs = std::filesystem;
  config.Validate();
  if (!fs::is_directory(image_dir)) {
    throw DataError(image_dir + ": not a directory");
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(image_dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm" || ext == ".ppm" || ext == ".png") {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  if (names.size() < 2) {
    throw DataError(image_dir + ": need at least 2 images");
  }

  Dataset data;
  for (const std::string& name : names) {
    ImageBuffer img = LoadImage((fs::path(image_dir) / name).string());
    ImageBuffer luma = img.planes == 3 ? ToU8(RgbToLuma(img)) : img;
    if (config.prep == PrepMode::kCrop) {
      if (luma.width < config.crop || luma.height < config.crop) {
        if (warnings) {
          *warnings << "skipping undersized image " << name << " ("
                    << luma.width << "x" << luma.height << ")\n";
        }
        continue;
      }
      luma = CenterCrop(luma, config.crop, config.crop);
    } else {
      luma = ToU8(ResizeBilinear(luma, config.crop, config.crop));
    }
    const bool holdout = IsHoldoutName(name);
    for (const bool flip : {false, true}) {
      SamplePair sample;
      sample.name = name;
      sample.flipped = flip;
      sample.holdout = holdout;
      ImageBuffer base = flip ? FlipHorizontal(luma) : luma;
      sample.ij = JpegDegrade(base, config.quality_factor);
      base.domain = Domain::kReal;
      sample.ig = std::move(base);
      data.samples.push_back(std::move(sample));
    }
  }
  if (data.samples.size() < 4) {
    throw DataError(image_dir + ": fewer than 2 usable images");
  }
  for (size_t i = 0; i < data.samples.size(); ++i) {
    (data.samples[i].holdout ? data.holdout_idx : data.train_idx).push_back(i);
  }
  if (data.train_idx.empty()) {
    throw DataError(image_dir + ": every image hashed into the holdout split");
  }

  // Fit the bins on the training targets only, then label everything.
  const int n_ch = config.w_b * config.h_b;
  std::vector<std::vector<double>> coeff_samples(n_ch);
  for (size_t idx : data.train_idx) {
    const CoeffMap raw =
        PatchDct(Laplacian(data.samples[idx].ig), config.w_b, config.h_b);
    const size_t cells = static_cast<size_t>(raw.n_w) * raw.n_h;
    for (size_t i = 0; i < cells; ++i) {
      for (int c = 0; c < n_ch; ++c) {
        coeff_samples[c].push_back(raw.values[i * n_ch + c]);
      }
    }
  }
  std::vector<std::string> bin_warnings;
  data.bins = FitBins(coeff_samples, config.n_cl, &bin_warnings);
  if (warnings) {
    for (const std::string& w : bin_warnings) *warnings << w << "\n";
  }
  for (SamplePair& sample : data.samples) {
    auto [y, q] =
        MakeLabels(sample.ig, data.bins, config.w_b, config.h_b, config.q_source);
    sample.y = std::move(y);
    sample.q = std::move(q);
  }
  return data;
}

namespace {

void FisherYates(std::vector<size_t>& order, Rng& rng) {
  for (size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.Below(i)]);
  }
}

// Targets laid out to match SoftmaxCrossEntropy: ((b * n_ch + c) * h + y) * w + x.
void AppendTargets(const ClassMap& y, std::vector<int>& out) {
  for (int c = 0; c < y.n_ch; ++c) {
    for (int gy = 0; gy < y.n_h; ++gy) {
      for (int gx = 0; gx < y.n_w; ++gx) out.push_back(y.at(gx, gy, c));
    }
  }
}

template <class T>
TensorT<T> BatchImages(const Dataset& data, const std::vector<size_t>& idx,
                       bool degraded) {
  const ImageBuffer& first = data.samples[idx[0]].ij;
  TensorT<T> t(static_cast<int>(idx.size()), 1, first.height, first.width);
  size_t off = 0;
  for (size_t i : idx) {
    const ImageBuffer& img =
        degraded ? data.samples[i].ij : data.samples[i].ig;
    for (size_t j = 0; j < img.data.size(); ++j) {
      t.v[off + j] = static_cast<T>(img.data[j] / 255.0);
    }
    off += img.data.size();
  }
  return t;
}

template <class T>
void CopyCoeffTensor(const TensorT<T>& src, TensorT<T>& dst, int batch_index) {
  std::copy(src.v.begin(), src.v.end(),
            dst.v.begin() + static_cast<size_t>(batch_index) * src.v.size());
}

template <class T>
std::vector<double> StageAccuracies(ClassifierModelT<T>& model,
                                    const Dataset& data,
                                    const std::vector<size_t>& idx) {
  std::vector<int64_t> correct(model.stage_count(), 0);
  int64_t total = 0;
  for (size_t i : idx) {
    const SamplePair& sample = data.samples[i];
    Graph<T> g(true);
    TensorT<T>* x = g.Leaf(ImageToTensor<T>(sample.ij));
    ClassifierOutputs<T> out = ClassifierForward(g, model, x);
    for (int t = 0; t < model.stage_count(); ++t) {
      const TensorT<T>* probs = out.probs[t];
      for (int c = 0; c < model.n_ch; ++c) {
        for (int gy = 0; gy < probs->h; ++gy) {
          for (int gx = 0; gx < probs->w; ++gx) {
            int best = 0;
            T best_p = probs->at(0, c * model.n_cl, gy, gx);
            for (int k = 1; k < model.n_cl; ++k) {
              const T p = probs->at(0, c * model.n_cl + k, gy, gx);
              if (p > best_p) {
                best_p = p;
                best = k;
              }
            }
            if (best == sample.y.at(gx, gy, c)) ++correct[t];
          }
        }
      }
    }
    total += static_cast<int64_t>(model.n_ch) * sample.y.n_w * sample.y.n_h;
  }
  std::vector<double> accs(model.stage_count(), 0.0);
  for (int t = 0; t < model.stage_count(); ++t) {
    accs[t] = total > 0 ? static_cast<double>(correct[t]) / total : 0.0;
  }
  return accs;
}

template <class T>
void TrainClassifierImpl(Dataset& data, const TrainConfig& cfg,
                         const std::string& ckpt_path, std::ostream* log_csv,
                         std::ostream* progress) {
  auto model =
      MakeClassifier<T>(cfg.dims, cfg.w_b, cfg.h_b, cfg.n_cl, cfg.stages);
  Rng master(cfg.seed);
  Rng init = master.Fork(0x11);
  InitParameters(model.Parameters(), init);
  Rng shuffle_rng = master.Fork(0x22);
  auto params = model.Parameters();
  AdamConfig adam;
  adam.lr = cfg.lr;

  if (log_csv) {
    *log_csv << "epoch,loss";
    for (int t = 1; t <= cfg.stages; ++t) *log_csv << ",acc_stage" << t;
    *log_csv << "\n";
  }
  const auto& eval_idx =
      data.holdout_idx.empty() ? data.train_idx : data.holdout_idx;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<size_t> order = data.train_idx;
    FisherYates(order, shuffle_rng);
    double loss_sum = 0.0;
    int64_t loss_n = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch)) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(cfg.batch));
      const std::vector<size_t> batch(order.begin() + start, order.begin() + end);
      std::vector<int> targets;
      targets.reserve(batch.size() * static_cast<size_t>(model.n_ch) *
                      (cfg.crop / cfg.w_b) * (cfg.crop / cfg.h_b));
      for (size_t i : batch) AppendTargets(data.samples[i].y, targets);

      Graph<T> g(true);
      TensorT<T>* x = g.Leaf(BatchImages<T>(data, batch, /*degraded=*/true));
      ClassifierOutputs<T> out = ClassifierForward(g, model, x);
      std::vector<std::pair<T, TensorT<T>*>> terms;
      for (TensorT<T>* logits : out.logits) {
        terms.emplace_back(static_cast<T>(1.0 / out.logits.size()),
                           g.SoftmaxCrossEntropy(logits, targets, model.n_cl));
      }
      TensorT<T>* loss = g.ScalarCombine(terms);
      const double loss_value = static_cast<double>(loss->v[0]);
      if (!std::isfinite(loss_value)) {
        throw NumericError("train-classifier: non-finite loss at epoch " +
                           std::to_string(epoch));
      }
      g.Backward(loss);
      AdamStep(params, adam);
      loss_sum += loss_value * static_cast<double>(batch.size());
      loss_n += static_cast<int64_t>(batch.size());
    }
    const double mean_loss = loss_sum / static_cast<double>(loss_n);
    const std::vector<double> accs = StageAccuracies(model, data, eval_idx);
    if (log_csv) {
      *log_csv << epoch << "," << mean_loss;
      for (double a : accs) *log_csv << "," << a;
      *log_csv << "\n";
    }
    if (progress) {
      *progress << "epoch " << epoch << "/" << cfg.epochs << " loss "
                << mean_loss << " acc";
      for (double a : accs) *progress << " " << a;
      *progress << "\n";
    }
  }
  Checkpoint ckpt = MakeClassifierCheckpoint(model, data.bins);
  SaveCheckpoint(ckpt, ckpt_path);
}

template <class T>
void TrainCedImpl(Dataset& data, const TrainConfig& cfg, CedMode mode,
                  const std::string& classifier_ckpt,
                  const std::string& ckpt_path, std::ostream* log_csv,
                  std::ostream* progress) {
  auto ced = MakeCed<T>(cfg.dims, cfg.w_b, cfg.h_b);
  Rng master(cfg.seed);
  Rng init = master.Fork(0x33);
  InitParameters(ced.Parameters(), init);
  // Start the output near mid-gray: damp the head weights and bias the
  // output at the corpus mean so early epochs are not spent on it.
  for (T& v : ced.d_out.w.t.v) v *= static_cast<T>(0.1);
  ced.d_out.b.t.v[0] = static_cast<T>(0.5);
  Rng shuffle_rng = master.Fork(0x44);
  auto params = ced.Parameters();
  AdamConfig adam;
  adam.lr = cfg.lr;

  const int n_w = cfg.crop / cfg.w_b;
  const int n_h = cfg.crop / cfg.h_b;
  // Per-sample conditioning tensors, fixed for the whole run.
  std::vector<TensorT<T>> q_tensors(data.samples.size());
  if (mode == CedMode::kEd) {
    for (auto& q : q_tensors) q = ZeroCoeffTensor<T>(ced.n_ch, n_w, n_h);
  } else if (mode == CedMode::kGt) {
    for (size_t i = 0; i < data.samples.size(); ++i) {
      q_tensors[i] = CoeffToTensor<T>(data.samples[i].q, data.bins);
    }
  } else {
    if (classifier_ckpt.empty()) {
      throw DataError("train-ced: est mode requires a classifier checkpoint");
    }
    Checkpoint cckpt = LoadCheckpoint(classifier_ckpt);
    auto classifier = ClassifierFromCheckpoint<T>(cckpt);
    if (BinSpecToString(cckpt.bins) != BinSpecToString(data.bins)) {
      throw DataError(
          "train-ced: classifier checkpoint bins differ from the dataset bins");
    }
    for (size_t i = 0; i < data.samples.size(); ++i) {
      Classification cls = Classify(classifier, data.samples[i].ij);
      q_tensors[i] =
          CoeffToTensor<T>(ClassToCoeff(cls.labels, data.bins), data.bins);
    }
  }

  if (log_csv) *log_csv << "epoch,loss,val_psnr\n";
  const auto& eval_idx =
      data.holdout_idx.empty() ? data.train_idx : data.holdout_idx;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<size_t> order = data.train_idx;
    FisherYates(order, shuffle_rng);
    double loss_sum = 0.0;
    int64_t loss_n = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch)) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(cfg.batch));
      const std::vector<size_t> batch(order.begin() + start, order.begin() + end);

      Graph<T> g(true);
      TensorT<T>* x = g.Leaf(BatchImages<T>(data, batch, /*degraded=*/true));
      TensorT<T> q_batch(static_cast<int>(batch.size()), ced.n_ch, n_h, n_w);
      for (size_t bi = 0; bi < batch.size(); ++bi) {
        CopyCoeffTensor(q_tensors[batch[bi]], q_batch, static_cast<int>(bi));
      }
      TensorT<T>* q = g.Leaf(std::move(q_batch));
      TensorT<T>* f = FeatureForward(g, ced.enc, x);
      TensorT<T>* out = DecoderForward(g, ced, f, q);
      TensorT<T>* target = g.Leaf(BatchImages<T>(data, batch, /*degraded=*/false));
      TensorT<T>* loss = g.MseLoss(out, target);
      const double loss_value = static_cast<double>(loss->v[0]);
      if (!std::isfinite(loss_value)) {
        throw NumericError("train-ced: non-finite loss at epoch " +
                           std::to_string(epoch));
      }
      g.Backward(loss);
      AdamStep(params, adam);
      loss_sum += loss_value * static_cast<double>(batch.size());
      loss_n += static_cast<int64_t>(batch.size());
    }
    const double mean_loss = loss_sum / static_cast<double>(loss_n);

    // Validation PSNR with the training-mode conditioning.
    double psnr_sum = 0.0;
    int64_t psnr_n = 0;
    for (size_t i : eval_idx) {
      Graph<T> g(true);
      TensorT<T>* x = g.Leaf(ImageToTensor<T>(data.samples[i].ij));
      TensorT<T> q_copy = q_tensors[i];
      TensorT<T>* q = g.Leaf(std::move(q_copy));
      TensorT<T>* f = FeatureForward(g, ced.enc, x);
      TensorT<T>* out = DecoderForward(g, ced, f, q);
      const double p = Psnr(data.samples[i].ig, TensorToImage(*out));
      if (std::isfinite(p)) {
        psnr_sum += p;
        ++psnr_n;
      }
    }
    const double val_psnr = psnr_n > 0 ? psnr_sum / psnr_n : 0.0;
    if (log_csv) {
      *log_csv << epoch << "," << mean_loss << "," << val_psnr << "\n";
    }
    if (progress) {
      *progress << "epoch " << epoch << "/" << cfg.epochs << " loss "
                << mean_loss << " val_psnr " << val_psnr << "\n";
    }
  }
  Checkpoint ckpt = MakeCedCheckpoint(ced, mode, data.bins);
  SaveCheckpoint(ckpt, ckpt_path);
}

}  // namespace

void TrainClassifier(Dataset& data, const TrainConfig& config,
                     const std::string& ckpt_path, std::ostream* log_csv,
                     std::ostream* progress) {
  if (config.precision == Precision::kF64) {
    TrainClassifierImpl<double>(data, config, ckpt_path, log_csv, progress);
  } else {
    TrainClassifierImpl<float>(data, config, ckpt_path, log_csv, progress);
  }
}

void TrainCed(Dataset& data, const TrainConfig& config, CedMode mode,
              const std::string& classifier_ckpt, const std::string& ckpt_path,
              std::ostream* log_csv, std::ostream* progress) {
  if (config.precision == Precision::kF64) {
    TrainCedImpl<double>(data, config, mode, classifier_ckpt, ckpt_path,
                         log_csv, progress);
  } else {
    TrainCedImpl<float>(data, config, mode, classifier_ckpt, ckpt_path,
                        log_csv, progress);
  }
}

}  // namespace freqres

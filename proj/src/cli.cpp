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

#include "freqres/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "freqres/checkpoint.hpp"
#include "freqres/gradcheck.hpp"
#include "freqres/jpegsim.hpp"
#include "freqres/metrics.hpp"
#include "freqres/trainer.hpp"

namespace freqres {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> ListImages(const std::string& dir) {
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

ImageBuffer LoadLumaU8(const std::string& path) {
  ImageBuffer img = LoadImage(path);
  return img.planes == 3 ? ToU8(RgbToLuma(img)) : img;
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError(path + ": unwritable path");
  out << text;
  if (!out) throw DataError(path + ": write failed");
}

TrainConfig ResolveConfig(const std::string& config_path,
                          const std::vector<std::string>& overrides,
                          std::optional<uint64_t> seed) {
  TrainConfig config =
      config_path.empty() ? TrainConfig{} : LoadTrainConfig(config_path);
  for (const std::string& kv : overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw UsageError("--set expects key=value, got '" + kv + "'");
    }
    ApplyConfigOverride(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (seed) config.seed = *seed;
  config.Validate();
  return config;
}

void CmdDegrade(const std::string& in, const std::string& out, int qf,
                const std::string& ref_out) {
  auto degrade_one = [&](const std::string& src, const std::string& dst,
                         const std::string& ref_dst) {
    ImageBuffer luma = PrepareDims(LoadLumaU8(src), 8);
    SaveImage(JpegDegrade(luma, qf), dst);
    if (!ref_dst.empty()) SaveImage(luma, ref_dst);
  };
  if (fs::is_directory(in)) {
    fs::create_directories(out);
    if (!ref_out.empty()) fs::create_directories(ref_out);
    for (const std::string& name : ListImages(in)) {
      degrade_one((fs::path(in) / name).string(),
                  (fs::path(out) / name).string(),
                  ref_out.empty() ? "" : (fs::path(ref_out) / name).string());
    }
  } else {
    degrade_one(in, out, ref_out);
  }
}

void CmdFitBins(const std::string& in, const std::string& out, int n_cl,
                int w_b, int h_b) {
  const std::vector<std::string> names = ListImages(in);
  std::vector<std::vector<double>> samples(static_cast<size_t>(w_b) * h_b);
  for (const std::string& name : names) {
    ImageBuffer luma = PrepareDims(LoadLumaU8((fs::path(in) / name).string()), w_b);
    const CoeffMap coeffs = PatchDct(Laplacian(luma), w_b, h_b);
    const size_t cells = static_cast<size_t>(coeffs.n_w) * coeffs.n_h;
    for (size_t i = 0; i < cells; ++i) {
      for (int c = 0; c < coeffs.n_ch; ++c) {
        samples[c].push_back(coeffs.values[i * coeffs.n_ch + c]);
      }
    }
  }
  std::vector<std::string> warnings;
  BinSpec bins = FitBins(samples, n_cl, &warnings);
  for (const std::string& w : warnings) std::cerr << w << "\n";
  SaveBinSpec(bins, out);
}

void CmdLabel(const std::string& in, const std::string& bins_path,
              const std::string& out, int w_b, int h_b, QSource q_source) {
  const BinSpec bins = LoadBinSpec(bins_path);
  ImageBuffer luma = PrepareDims(LoadLumaU8(in), w_b);
  auto [y, q] = MakeLabels(luma, bins, w_b, h_b, q_source);
  std::ostringstream csv;
  csv.precision(17);
  csv << "gx,gy,channel,label,coeff\n";
  for (int gy = 0; gy < y.n_h; ++gy) {
    for (int gx = 0; gx < y.n_w; ++gx) {
      for (int c = 0; c < y.n_ch; ++c) {
        csv << gx << "," << gy << "," << c << "," << y.at(gx, gy, c) << ","
            << q.at(gx, gy, c) << "\n";
      }
    }
  }
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    WriteText(out, csv.str());
  }
}

void CmdTrain(bool classifier, const std::string& in,
              const std::string& config_path,
              const std::vector<std::string>& overrides,
              std::optional<uint64_t> seed, const std::string& mode_name,
              const std::string& classifier_ckpt, const std::string& out,
              const std::string& log_path) {
  const TrainConfig config = ResolveConfig(config_path, overrides, seed);
  Dataset data = BuildDataset(in, config, &std::cerr);
  std::ofstream log_file;
  std::ostream* log_csv = nullptr;
  if (!log_path.empty()) {
    log_file.open(log_path);
    if (!log_file) throw DataError(log_path + ": unwritable path");
    log_csv = &log_file;
  }
  if (classifier) {
    TrainClassifier(data, config, out, log_csv, &std::cerr);
  } else {
    CedMode mode;
    if (mode_name == "gt") mode = CedMode::kGt;
    else if (mode_name == "est") mode = CedMode::kEst;
    else if (mode_name == "ed") mode = CedMode::kEd;
    else throw UsageError("--mode must be gt, est or ed");
    if (mode == CedMode::kEst && classifier_ckpt.empty()) {
      throw UsageError("--mode est requires --classifier");
    }
    TrainCed(data, config, mode, classifier_ckpt, out, log_csv, &std::cerr);
  }
}

void CmdRestore(const std::string& in, const std::string& out,
                const std::string& ced_path, const std::string& classifier_path) {
  const Checkpoint ced_ckpt = LoadCheckpoint(ced_path);
  auto ced = CedFromCheckpoint<float>(ced_ckpt);
  const CedMode mode = static_cast<CedMode>(ced_ckpt.mode);
  std::optional<ClassifierModelT<float>> classifier;
  if (mode != CedMode::kEd) {
    if (classifier_path.empty()) {
      throw UsageError("this checkpoint needs --classifier for restoration");
    }
    const Checkpoint cckpt = LoadCheckpoint(classifier_path);
    if (BinSpecToString(cckpt.bins) != BinSpecToString(ced_ckpt.bins)) {
      throw DataError("restore: classifier and CED checkpoints carry different bins");
    }
    classifier = ClassifierFromCheckpoint<float>(cckpt);
  }
  const RestoreMode rmode = mode == CedMode::kEd ? RestoreMode::kZero
                                                 : RestoreMode::kClassifier;
  auto restore_one = [&](const std::string& src, const std::string& dst) {
    ImageBuffer luma = PrepareDims(LoadLumaU8(src), 4);
    ImageBuffer restored =
        Restore(classifier ? &*classifier : nullptr, ced, ced_ckpt.bins, luma,
                rmode);
    SaveImage(restored, dst);
  };
  if (fs::is_directory(in)) {
    fs::create_directories(out);
    for (const std::string& name : ListImages(in)) {
      restore_one((fs::path(in) / name).string(), (fs::path(out) / name).string());
    }
  } else {
    restore_one(in, out);
  }
}

void CmdEvaluate(const std::string& restored, const std::string& reference,
                 const std::string& degraded, const std::string& out) {
  const DatasetReport report = EvaluateDataset(restored, reference, degraded);
  const std::string csv = DatasetReportToCsv(report);
  if (out.empty()) {
    std::cout << csv;
  } else {
    WriteText(out, csv);
  }
}

void CmdFreqHist(const std::vector<std::string>& dirs,
                 const std::string& channel, int block, int hist_bins,
                 double range, const std::string& out) {
  const size_t comma = channel.find(',');
  if (comma == std::string::npos) {
    throw UsageError("--channel expects u,v");
  }
  int u = 0, v = 0;
  try {
    u = std::stoi(channel.substr(0, comma));
    v = std::stoi(channel.substr(comma + 1));
  } catch (const std::exception&) {
    throw UsageError("--channel expects integers u,v");
  }
  std::vector<std::vector<ImageBuffer>> sets;
  for (const std::string& dir : dirs) {
    std::vector<ImageBuffer> images;
    for (const std::string& name : ListImages(dir)) {
      images.push_back(LoadImage((fs::path(dir) / name).string()));
    }
    sets.push_back(std::move(images));
  }
  double lim = range;
  if (lim <= 0.0) {
    for (size_t s = 0; s < sets.size(); ++s) {
      for (double x : CollectChannelCoeffs(sets[s], block, u, v)) {
        lim = std::max(lim, std::abs(x));
      }
    }
    if (lim == 0.0) lim = 1.0;
  }
  std::vector<double> edges(hist_bins + 1);
  for (int i = 0; i <= hist_bins; ++i) {
    edges[i] = -lim + 2.0 * lim * i / hist_bins;
  }
  std::ostringstream csv;
  csv.precision(12);
  csv << "edge_lo,edge_hi";
  for (const std::string& dir : dirs) csv << "," << fs::path(dir).filename().string();
  csv << "\n";
  std::vector<std::vector<int64_t>> counts;
  for (const auto& images : sets) {
    counts.push_back(FreqHistogram(images, block, u, v, edges));
  }
  for (int i = 0; i < hist_bins; ++i) {
    csv << edges[i] << "," << edges[i + 1];
    for (const auto& c : counts) csv << "," << c[i];
    csv << "\n";
  }
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    WriteText(out, csv.str());
  }
}

int CmdGradCheck(int seeds) {
  const auto entries = RunGradCheckSuite(seeds);
  bool ok = true;
  for (const auto& e : entries) {
    const bool pass = e.max_rel_err <= e.tolerance;
    ok = ok && pass;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << e.name << " max_rel_err "
              << e.max_rel_err << " (tolerance " << e.tolerance << ")\n";
  }
  if (!ok) throw NumericError("gradient checks failed");
  return 0;
}

}  // namespace

int RunCli(const std::vector<std::string>& args) {
  CLI::App app{"frequency-distribution image restoration for JPEG artifact removal"};
  app.require_subcommand(1);

  int jobs = 1;
  app.add_option("--jobs", jobs, "worker threads (results are independent of this)")
      ->check(CLI::PositiveNumber);
  std::optional<uint64_t> seed;
  app.add_option("--seed", seed, "master random seed (overrides config)");

  // degrade
  auto* degrade = app.add_subcommand("degrade", "JPEG-equivalent luminance degradation");
  std::string d_in, d_out, d_ref;
  int d_qf = 10;
  degrade->add_option("--qf", d_qf, "quality factor")->check(CLI::Range(1, 100));
  degrade->add_option("--in", d_in, "input image or directory")->required();
  degrade->add_option("--out", d_out, "output image or directory")->required();
  degrade->add_option("--ref-out", d_ref,
                      "also write the cropped luma references here");

  // fit-bins
  auto* fitbins = app.add_subcommand("fit-bins", "fit equal-frequency coefficient bins");
  std::string fb_in, fb_out;
  int fb_ncl = 7, fb_wb = 4, fb_hb = 4;
  fitbins->add_option("--in", fb_in, "corpus directory")->required();
  fitbins->add_option("--out", fb_out, "BinSpec output path")->required();
  fitbins->add_option("--n-cl", fb_ncl, "classes per channel")->check(CLI::PositiveNumber);
  fitbins->add_option("--w-b", fb_wb, "patch width");
  fitbins->add_option("--h-b", fb_hb, "patch height");

  // label
  auto* label = app.add_subcommand("label", "emit class/coefficient maps for one image");
  std::string l_in, l_bins, l_out;
  int l_wb = 4, l_hb = 4;
  std::string l_qsource = "quantized";
  label->add_option("--in", l_in, "input image")->required();
  label->add_option("--bins", l_bins, "BinSpec path")->required();
  label->add_option("--out", l_out, "CSV output (default stdout)");
  label->add_option("--w-b", l_wb, "patch width");
  label->add_option("--h-b", l_hb, "patch height");
  label->add_option("--q-source", l_qsource, "quantized|raw");

  // train-classifier / train-ced
  std::string tc_in, tc_config, tc_out, tc_log;
  std::vector<std::string> tc_set;
  auto* trainc = app.add_subcommand("train-classifier", "train the coefficient classifier");
  trainc->add_option("--in", tc_in, "training image directory")->required();
  trainc->add_option("--config", tc_config, "config file");
  trainc->add_option("--out", tc_out, "checkpoint output path")->required();
  trainc->add_option("--log", tc_log, "CSV training log path");
  trainc->add_option("--set", tc_set, "config override key=value");

  std::string te_in, te_config, te_out, te_log, te_mode = "gt", te_classifier;
  std::vector<std::string> te_set;
  auto* traine = app.add_subcommand("train-ced", "train the encoder/decoder");
  traine->add_option("--in", te_in, "training image directory")->required();
  traine->add_option("--config", te_config, "config file");
  traine->add_option("--out", te_out, "checkpoint output path")->required();
  traine->add_option("--log", te_log, "CSV training log path");
  traine->add_option("--mode", te_mode, "gt|est|ed");
  traine->add_option("--classifier", te_classifier, "classifier checkpoint (est mode)");
  traine->add_option("--set", te_set, "config override key=value");

  // restore
  auto* restore = app.add_subcommand("restore", "restore degraded images from checkpoints");
  std::string r_in, r_out, r_ced, r_classifier;
  restore->add_option("--in", r_in, "degraded image or directory")->required();
  restore->add_option("--out", r_out, "output image or directory")->required();
  restore->add_option("--ced", r_ced, "CED checkpoint")->required();
  restore->add_option("--classifier", r_classifier, "classifier checkpoint");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "quality metrics over directories");
  std::string e_restored, e_reference, e_degraded, e_out;
  evaluate->add_option("--restored", e_restored, "restored image directory")->required();
  evaluate->add_option("--reference", e_reference, "reference image directory")->required();
  evaluate->add_option("--degraded", e_degraded, "degraded inputs (second CSV section)");
  evaluate->add_option("--out", e_out, "CSV output (default stdout)");

  // freq-hist
  auto* freqhist = app.add_subcommand("freq-hist", "frequency-coefficient histograms");
  std::vector<std::string> fh_in;
  std::string fh_channel = "7,7", fh_out;
  int fh_block = 8, fh_bins = 64;
  double fh_range = 0.0;
  freqhist->add_option("--in", fh_in, "image directory (repeatable)")->required();
  freqhist->add_option("--channel", fh_channel, "frequency channel u,v");
  freqhist->add_option("--block", fh_block, "patch size");
  freqhist->add_option("--hist-bins", fh_bins, "histogram bin count")->check(CLI::PositiveNumber);
  freqhist->add_option("--range", fh_range, "symmetric value range (default: data)");
  freqhist->add_option("--out", fh_out, "CSV output (default stdout)");

  // grad-check
  auto* gradcheck = app.add_subcommand("grad-check", "finite-difference gradient oracle");
  int gc_seeds = 3;
  gradcheck->add_option("--seeds", gc_seeds, "random seeds per case")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  omp_set_num_threads(jobs);
  try {
    if (*degrade) {
      CmdDegrade(d_in, d_out, d_qf, d_ref);
    } else if (*fitbins) {
      CmdFitBins(fb_in, fb_out, fb_ncl, fb_wb, fb_hb);
    } else if (*label) {
      QSource qs;
      if (l_qsource == "quantized") qs = QSource::kQuantized;
      else if (l_qsource == "raw") qs = QSource::kRaw;
      else throw UsageError("--q-source must be quantized or raw");
      CmdLabel(l_in, l_bins, l_out, l_wb, l_hb, qs);
    } else if (*trainc) {
      CmdTrain(true, tc_in, tc_config, tc_set, seed, "", "", tc_out, tc_log);
    } else if (*traine) {
      CmdTrain(false, te_in, te_config, te_set, seed, te_mode, te_classifier,
               te_out, te_log);
    } else if (*restore) {
      CmdRestore(r_in, r_out, r_ced, r_classifier);
    } else if (*evaluate) {
      CmdEvaluate(e_restored, e_reference, e_degraded, e_out);
    } else if (*freqhist) {
      CmdFreqHist(fh_in, fh_channel, fh_block, fh_bins, fh_range, fh_out);
    } else if (*gradcheck) {
      return CmdGradCheck(gc_seeds);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace freqres

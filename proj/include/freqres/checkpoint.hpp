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

#ifndef FREQRES_CHECKPOINT_HPP_
#define FREQRES_CHECKPOINT_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "freqres/bins.hpp"
#include "freqres/models.hpp"

namespace freqres {

// Versioned binary checkpoint: header (magic, version, kind, mode), an
// integer hyperparameter table, a parameter manifest (name, shape), then
// 32-bit little-endian payloads in manifest order, then the BinSpec text.

enum class CkptKind : uint32_t { kClassifier = 1, kCed = 2 };

enum class CedMode : uint32_t { kGt = 0, kEst = 1, kEd = 2 };

struct TensorBlob {
  std::string name;
  std::array<int, 4> shape{0, 0, 0, 0};
  std::vector<float> values;
};

struct Checkpoint {
  CkptKind kind = CkptKind::kClassifier;
  uint32_t mode = 0;  // CedMode for kind kCed, 0 otherwise
  std::vector<std::pair<std::string, int64_t>> hyper;
  std::vector<TensorBlob> tensors;
  BinSpec bins;

  int64_t Hyper(const std::string& key) const;
};

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint LoadCheckpoint(const std::string& path);

// Model glue. Loading reconstructs the model from the stored
// hyperparameters and verifies the manifest name-by-name.
template <class T>
std::vector<TensorBlob> ParamsToBlobs(const std::vector<ParameterT<T>*>& params) {
  std::vector<TensorBlob> blobs;
  blobs.reserve(params.size());
  for (const ParameterT<T>* p : params) {
    TensorBlob blob;
    blob.name = p->name;
    blob.shape = {p->t.b, p->t.c, p->t.h, p->t.w};
    blob.values.resize(p->t.v.size());
    for (size_t i = 0; i < p->t.v.size(); ++i) {
      blob.values[i] = static_cast<float>(p->t.v[i]);
    }
    blobs.push_back(std::move(blob));
  }
  return blobs;
}

template <class T>
void BlobsToParams(const std::vector<TensorBlob>& blobs,
                   const std::vector<ParameterT<T>*>& params) {
  if (blobs.size() != params.size()) {
    throw DataError("checkpoint: parameter count mismatch");
  }
  for (size_t i = 0; i < blobs.size(); ++i) {
    ParameterT<T>* p = params[i];
    const TensorBlob& blob = blobs[i];
    if (blob.name != p->name ||
        blob.shape != std::array<int, 4>{p->t.b, p->t.c, p->t.h, p->t.w}) {
      throw DataError("checkpoint: manifest mismatch at " + blob.name);
    }
    for (size_t j = 0; j < blob.values.size(); ++j) {
      p->t.v[j] = static_cast<T>(blob.values[j]);
    }
  }
}

template <class T>
Checkpoint MakeClassifierCheckpoint(ClassifierModelT<T>& model,
                                    const BinSpec& bins) {
  Checkpoint ckpt;
  ckpt.kind = CkptKind::kClassifier;
  ckpt.hyper = {{"w_b", model.w_b},
                {"h_b", model.h_b},
                {"n_cl", model.n_cl},
                {"stages", model.stage_count()},
                {"stem", model.dims.stem},
                {"features", model.dims.features},
                {"stage_hidden", model.dims.stage_hidden},
                {"up", model.dims.up}};
  ckpt.tensors = ParamsToBlobs(model.Parameters());
  ckpt.bins = bins;
  return ckpt;
}

template <class T>
ClassifierModelT<T> ClassifierFromCheckpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != CkptKind::kClassifier) {
    throw DataError("checkpoint: not a classifier checkpoint");
  }
  ModelDims dims;
  dims.stem = static_cast<int>(ckpt.Hyper("stem"));
  dims.features = static_cast<int>(ckpt.Hyper("features"));
  dims.stage_hidden = static_cast<int>(ckpt.Hyper("stage_hidden"));
  dims.up = static_cast<int>(ckpt.Hyper("up"));
  auto model = MakeClassifier<T>(dims, static_cast<int>(ckpt.Hyper("w_b")),
                                 static_cast<int>(ckpt.Hyper("h_b")),
                                 static_cast<int>(ckpt.Hyper("n_cl")),
                                 static_cast<int>(ckpt.Hyper("stages")));
  BlobsToParams(ckpt.tensors, model.Parameters());
  return model;
}

template <class T>
Checkpoint MakeCedCheckpoint(CEDModelT<T>& model, CedMode mode,
                             const BinSpec& bins) {
  Checkpoint ckpt;
  ckpt.kind = CkptKind::kCed;
  ckpt.mode = static_cast<uint32_t>(mode);
  ckpt.hyper = {{"w_b", model.w_b},
                {"h_b", model.h_b},
                {"stem", model.dims.stem},
                {"features", model.dims.features},
                {"stage_hidden", model.dims.stage_hidden},
                {"up", model.dims.up}};
  ckpt.tensors = ParamsToBlobs(model.Parameters());
  ckpt.bins = bins;
  return ckpt;
}

template <class T>
CEDModelT<T> CedFromCheckpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != CkptKind::kCed) {
    throw DataError("checkpoint: not a CED checkpoint");
  }
  ModelDims dims;
  dims.stem = static_cast<int>(ckpt.Hyper("stem"));
  dims.features = static_cast<int>(ckpt.Hyper("features"));
  dims.stage_hidden = static_cast<int>(ckpt.Hyper("stage_hidden"));
  dims.up = static_cast<int>(ckpt.Hyper("up"));
  auto model = MakeCed<T>(dims, static_cast<int>(ckpt.Hyper("w_b")),
                          static_cast<int>(ckpt.Hyper("h_b")));
  BlobsToParams(ckpt.tensors, model.Parameters());
  return model;
}

}  // namespace freqres

#endif  // FREQRES_CHECKPOINT_HPP_

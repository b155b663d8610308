/* Copyright 2026 The urbanseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Per-point features consumed by the segmenter, and the providers that
// produce them: a file loader for externally computed predictions and a
// ground-truth oracle with controllable noise.

#ifndef URBANSEG_FEATURES_H_
#define URBANSEG_FEATURES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "urbanseg/container.h"
#include "urbanseg/error.h"
#include "urbanseg/ingest.h"
#include "urbanseg/partition.h"
#include "urbanseg/types.h"

namespace urbanseg {

inline constexpr int kDefaultEmbeddingDim = 16;

struct PointFeatures {
  std::vector<UrbanClass> semantic_pred;
  std::vector<double> class_scores;  // optional, row-major N x 7
  std::vector<Vec3> offset;
  int dim = kDefaultEmbeddingDim;
  std::vector<double> embedding;  // row-major N x dim
  std::vector<BuildingCategory> category_pred;  // optional

  std::size_t size() const { return semantic_pred.size(); }

  std::span<const double> Embedding(std::size_t i) const {
    return {embedding.data() + i * dim, static_cast<std::size_t>(dim)};
  }

  void Validate(std::size_t expected_n) const {
    const std::size_t n = semantic_pred.size();
    if (n != expected_n) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "features cover " + std::to_string(n) + " points, block has " +
                      std::to_string(expected_n));
    }
    if (dim < 1) throw Error(ErrorCode::kDimensionMismatch, "embedding dimension must be >= 1");
    if (offset.size() != n || embedding.size() != n * static_cast<std::size_t>(dim) ||
        (!class_scores.empty() && class_scores.size() != n * kNumUrbanClasses) ||
        (!category_pred.empty() && category_pred.size() != n)) {
      throw Error(ErrorCode::kDimensionMismatch, "feature channels have mismatched lengths");
    }
    for (const Vec3& o : offset) {
      if (!IsFinite(o)) ThrowInvalid("non-finite offset vector");
    }
    for (double e : embedding) {
      if (!std::isfinite(e)) ThrowInvalid("non-finite embedding value");
    }
    for (double s : class_scores) {
      if (!std::isfinite(s)) ThrowInvalid("non-finite class score");
    }
  }

  friend bool operator==(const PointFeatures&, const PointFeatures&) = default;
};

// Foreground = predicted Building.
inline std::vector<bool> ForegroundMask(const PointFeatures& features) {
  std::vector<bool> mask(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    mask[i] = features.semantic_pred[i] == UrbanClass::kBuilding;
  }
  return mask;
}

class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  // Features for the block's points, in block index order.
  virtual PointFeatures Provide(const Block& block,
                                const AnnotatedPointCloud& cloud) const = 0;
};

struct OracleOptions {
  int dim = kDefaultEmbeddingDim;
  double noise_embedding = 0.0;  // stddev per embedding dimension
  double noise_offset = 0.0;     // stddev per offset axis, meters
  double noise_semantic = 0.0;   // label flip probability
  std::uint64_t seed = 0;
};

// Code for the instance of rank r within a block: unit vector e_(r mod D)
// scaled by 1 + r div D. Distinct ranks are at least 1 apart.
inline void OracleCode(std::size_t rank, int dim, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  out[rank % dim] = 1.0 + static_cast<double>(rank / dim);
}

// Derives features from ground truth. Instances are ranked by id within the
// block; offsets point at the block-local instance centroid.
class OracleProvider : public FeatureProvider {
 public:
  explicit OracleProvider(OracleOptions options) : options_(options) {
    if (options_.dim < 1) ThrowInvalid("embedding dimension must be >= 1");
    if (!(options_.noise_embedding >= 0.0) || !(options_.noise_offset >= 0.0) ||
        !(options_.noise_semantic >= 0.0 && options_.noise_semantic <= 1.0)) {
      ThrowInvalid("oracle noise levels must be non-negative (flip rate <= 1)");
    }
  }

  const OracleOptions& options() const { return options_; }

  PointFeatures Provide(const Block& block,
                        const AnnotatedPointCloud& cloud) const override {
    const std::size_t n = block.size();
    const int dim = options_.dim;
    std::map<InstanceId, std::size_t> rank;
    for (std::uint32_t i : block.indices) {
      if (i >= cloud.size()) ThrowInvalid("block index outside the cloud");
      if (cloud.instance[i] != kNoInstance) rank.emplace(cloud.instance[i], 0);
    }
    std::vector<Vec3> centroid(rank.size());
    std::vector<std::size_t> members(rank.size(), 0);
    {
      std::size_t r = 0;
      for (auto& [id, slot] : rank) slot = r++;
    }
    for (std::uint32_t i : block.indices) {
      if (cloud.instance[i] == kNoInstance) continue;
      const std::size_t r = rank[cloud.instance[i]];
      centroid[r] = centroid[r] + cloud.positions[i];
      ++members[r];
    }
    for (std::size_t r = 0; r < centroid.size(); ++r) {
      centroid[r] = (1.0 / static_cast<double>(members[r])) * centroid[r];
    }

    PointFeatures f;
    f.dim = dim;
    f.semantic_pred.resize(n);
    f.offset.resize(n);
    f.embedding.assign(n * dim, 0.0);
    f.category_pred.resize(n);

    // One stream per noise dial so each dial's draws are independent of the
    // others' settings.
    const std::uint64_t base = static_cast<std::uint64_t>(block.id) * 4;
    std::mt19937_64 sem_rng = StreamRng(options_.seed, base + 0);
    std::mt19937_64 off_rng = StreamRng(options_.seed, base + 1);
    std::mt19937_64 emb_rng = StreamRng(options_.seed, base + 2);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (std::size_t k = 0; k < n; ++k) {
      const std::uint32_t i = block.indices[k];
      const InstanceId id = cloud.instance[i];
      UrbanClass cls = cloud.semantic[i];
      if (options_.noise_semantic > 0.0 &&
          internal::UnitDouble(sem_rng) < options_.noise_semantic) {
        const int shift = 1 + static_cast<int>(sem_rng() % (kNumUrbanClasses - 1));
        cls = static_cast<UrbanClass>((ToCode(cls) + shift) % kNumUrbanClasses);
      }
      f.semantic_pred[k] = cls;
      f.category_pred[k] = cloud.category[i];
      std::span<double> emb(f.embedding.data() + k * dim, static_cast<std::size_t>(dim));
      if (id != kNoInstance) {
        const std::size_t r = rank[id];
        f.offset[k] = centroid[r] - cloud.positions[i];
        OracleCode(r, dim, emb);
      }
      if (options_.noise_offset > 0.0) {
        const double s = options_.noise_offset;
        f.offset[k] = f.offset[k] + Vec3{s * gauss(off_rng), s * gauss(off_rng),
                                         s * gauss(off_rng)};
      }
      if (options_.noise_embedding > 0.0) {
        for (int d = 0; d < dim; ++d) emb[d] += options_.noise_embedding * gauss(emb_rng);
      }
    }
    return f;
  }

 private:
  OracleOptions options_;
};

// ---------------------------------------------------------------------------
// Feature files: a container of kind kFeatures covering a whole cloud.
// Channels: SPRD (u8 x1), OFFS (f64 x3), EMBD (f64 x D), optional SCOR
// (f64 x7) and CPRD (u8 x1).

inline Container FeaturesToContainer(const PointFeatures& f) {
  f.Validate(f.size());
  const std::uint64_t n = f.size();
  const std::uint32_t dim = static_cast<std::uint32_t>(f.dim);
  Container c(ContainerKind::kFeatures, n);
  std::vector<std::uint8_t> sem(n);
  std::vector<double> off(3 * n), emb(dim * n);
  for (std::uint64_t i = 0; i < n; ++i) {
    sem[i] = static_cast<std::uint8_t>(f.semantic_pred[i]);
    for (int a = 0; a < 3; ++a) off[a * n + i] = f.offset[i][a];
    for (std::uint32_t d = 0; d < dim; ++d) emb[d * n + i] = f.embedding[i * dim + d];
  }
  c.Add<std::uint8_t>("SPRD", 1, n, sem);
  c.Add<double>("OFFS", 3, n, off);
  c.Add<double>("EMBD", dim, n, emb);
  if (!f.class_scores.empty()) {
    std::vector<double> scores(kNumUrbanClasses * n);
    for (std::uint64_t i = 0; i < n; ++i) {
      for (int k = 0; k < kNumUrbanClasses; ++k) {
        scores[k * n + i] = f.class_scores[i * kNumUrbanClasses + k];
      }
    }
    c.Add<double>("SCOR", kNumUrbanClasses, n, scores);
  }
  if (!f.category_pred.empty()) {
    std::vector<std::uint8_t> cat(n);
    for (std::uint64_t i = 0; i < n; ++i) cat[i] = static_cast<std::uint8_t>(f.category_pred[i]);
    c.Add<std::uint8_t>("CPRD", 1, n, cat);
  }
  return c;
}

inline PointFeatures FeaturesFromContainer(const Container& c) {
  const std::uint64_t n = c.point_count();
  PointFeatures f;
  const auto sem = c.Get<std::uint8_t>("SPRD", 1, n);
  const auto off = c.Get<double>("OFFS", 3, n);
  const Channel* emb_ch = c.Find("EMBD");
  if (emb_ch == nullptr) throw ParseError(kContainerHeaderSize, "EMBD", "missing");
  if (emb_ch->components < 1) throw ParseError(emb_ch->file_offset + 8, "EMBD", "zero dimension");
  const std::uint32_t dim = emb_ch->components;
  const auto emb = c.Get<double>("EMBD", dim, n);
  f.dim = static_cast<int>(dim);
  f.semantic_pred.resize(n);
  f.offset.resize(n);
  f.embedding.resize(n * dim);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto cls = UrbanClassFromCode(sem[i]);
    if (!cls) {
      throw ParseError(c.Find("SPRD")->file_offset + kChannelHeaderSize + i, "SPRD",
                       "unknown urban class code " + std::to_string(sem[i]));
    }
    f.semantic_pred[i] = *cls;
    f.offset[i] = {off[i], off[n + i], off[2 * n + i]};
    for (std::uint32_t d = 0; d < dim; ++d) f.embedding[i * dim + d] = emb[d * n + i];
  }
  if (c.Has("SCOR")) {
    const auto scores = c.Get<double>("SCOR", kNumUrbanClasses, n);
    f.class_scores.resize(n * kNumUrbanClasses);
    for (std::uint64_t i = 0; i < n; ++i) {
      for (int k = 0; k < kNumUrbanClasses; ++k) {
        f.class_scores[i * kNumUrbanClasses + k] = scores[k * n + i];
      }
    }
  }
  if (c.Has("CPRD")) {
    const auto cat = c.Get<std::uint8_t>("CPRD", 1, n);
    f.category_pred.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto bc = BuildingCategoryFromCode(cat[i]);
      if (!bc) {
        throw ParseError(c.Find("CPRD")->file_offset + kChannelHeaderSize + i, "CPRD",
                         "unknown building category code");
      }
      f.category_pred[i] = *bc;
    }
  }
  f.Validate(n);
  return f;
}

inline void WriteFeatures(const PointFeatures& f, const std::string& path) {
  WriteFileBytes(path, FeaturesToContainer(f).Serialize());
}

inline PointFeatures ReadFeatures(const std::string& path) {
  return FeaturesFromContainer(ReadContainer(path, ContainerKind::kFeatures));
}

// Rows of a whole-cloud feature set selected by block indices.
inline PointFeatures SliceFeatures(const PointFeatures& all, const Block& block) {
  PointFeatures f;
  f.dim = all.dim;
  const std::size_t n = block.size();
  const auto dim = static_cast<std::size_t>(all.dim);
  f.semantic_pred.reserve(n);
  f.offset.reserve(n);
  f.embedding.reserve(n * dim);
  for (std::uint32_t i : block.indices) {
    f.semantic_pred.push_back(all.semantic_pred[i]);
    f.offset.push_back(all.offset[i]);
    f.embedding.insert(f.embedding.end(), all.embedding.begin() + i * dim,
                       all.embedding.begin() + (i + 1) * dim);
    if (!all.class_scores.empty()) {
      f.class_scores.insert(f.class_scores.end(),
                            all.class_scores.begin() + i * kNumUrbanClasses,
                            all.class_scores.begin() + (i + 1) * kNumUrbanClasses);
    }
    if (!all.category_pred.empty()) f.category_pred.push_back(all.category_pred[i]);
  }
  return f;
}

// Loads a whole-cloud feature file once and slices it per block.
class FileProvider : public FeatureProvider {
 public:
  explicit FileProvider(const std::string& path) : path_(path), all_(ReadFeatures(path)) {}
  explicit FileProvider(PointFeatures all) : all_(std::move(all)) { all_.Validate(all_.size()); }

  PointFeatures Provide(const Block& block,
                        const AnnotatedPointCloud& cloud) const override {
    if (all_.size() != cloud.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "feature file " + (path_.empty() ? std::string("<memory>") : path_) +
                      " covers " + std::to_string(all_.size()) +
                      " points but the cloud has " + std::to_string(cloud.size()));
    }
    for (std::uint32_t i : block.indices) {
      if (i >= all_.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "block index outside the feature file");
      }
    }
    return SliceFeatures(all_, block);
  }

 private:
  std::string path_;
  PointFeatures all_;
};

// "oracle" or "file:PATH".
inline std::unique_ptr<FeatureProvider> MakeProvider(std::string_view spec,
                                                     const OracleOptions& oracle) {
  if (spec == "oracle") return std::make_unique<OracleProvider>(oracle);
  if (spec.starts_with("file:") && spec.size() > 5) {
    return std::make_unique<FileProvider>(std::string(spec.substr(5)));
  }
  ThrowInvalid("unknown feature provider '" + std::string(spec) +
               "' (expected 'oracle' or 'file:PATH')");
}

}  // namespace urbanseg

#endif  // URBANSEG_FEATURES_H_

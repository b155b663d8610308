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

// Pipeline configuration and its versioned key = value text form.

#ifndef URBANSEG_CONFIG_H_
#define URBANSEG_CONFIG_H_

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "urbanseg/container.h"
#include "urbanseg/error.h"
#include "urbanseg/features.h"
#include "urbanseg/metrics.h"
#include "urbanseg/partition.h"
#include "urbanseg/segmenter.h"

namespace urbanseg {

inline constexpr int kConfigVersion = 1;
inline constexpr const char* kConfigEnvVar = "URBANSEG_CONFIG";

struct PipelineConfig {
  std::string provider = "oracle";
  OracleOptions oracle;
  SegmenterParams segmenter;
  ScorerKind scorer = ScorerKind::kGeometric;
  double voxel_edge = kDefaultVoxelEdge;
  std::size_t max_points = kDefaultMaxBlockPoints;
  std::uint64_t seed = 0;
  ApRange ap_range = ApRange::k25To95;

  void Validate() const {
    segmenter.Validate();
    if (!(voxel_edge > 0.0) || !std::isfinite(voxel_edge)) ThrowInvalid("voxel_edge must be positive");
    if (max_points < 1) ThrowInvalid("max_points must be positive");
    if (oracle.dim < 1) ThrowInvalid("embedding_dim must be positive");
    if (!(oracle.noise_embedding >= 0.0) || !(oracle.noise_offset >= 0.0) ||
        !(oracle.noise_semantic >= 0.0 && oracle.noise_semantic <= 1.0)) {
      ThrowInvalid("noise levels must be non-negative (semantic flip rate <= 1)");
    }
  }
};

namespace internal {

inline std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
T ParseNumber(std::string_view text, std::uint64_t offset, const std::string& key) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(offset, key, "invalid number '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace internal

// Parses "key = value" lines; '#' starts a comment. The first setting must be
// `version = 1`. Unknown keys are rejected.
inline PipelineConfig ParseConfig(std::string_view text) {
  PipelineConfig cfg;
  bool have_version = false;
  std::uint64_t offset = 0;
  while (offset <= text.size()) {
    std::size_t end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(offset, end - offset);
    const std::uint64_t line_offset = offset;
    offset = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = internal::Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(line_offset, "config", "expected 'key = value'");
    }
    const std::string key(internal::Trim(line.substr(0, eq)));
    const std::string_view value = internal::Trim(line.substr(eq + 1));
    using internal::ParseNumber;
    if (!have_version) {
      if (key != "version") throw ParseError(line_offset, key, "first setting must be 'version'");
      if (ParseNumber<int>(value, line_offset, key) != kConfigVersion) {
        throw ParseError(line_offset, key, "unsupported config version");
      }
      have_version = true;
      continue;
    }
    if (key == "provider") {
      cfg.provider = std::string(value);
    } else if (key == "k_ratio") {
      cfg.segmenter.k_ratio = ParseNumber<std::size_t>(value, line_offset, key);
    } else if (key == "k_max") {
      cfg.segmenter.k_max = ParseNumber<std::size_t>(value, line_offset, key);
    } else if (key == "merge_radius") {
      cfg.segmenter.merge_radius = ParseNumber<double>(value, line_offset, key);
    } else if (key == "score_threshold") {
      cfg.segmenter.score_threshold = ParseNumber<double>(value, line_offset, key);
    } else if (key == "voxel_edge") {
      cfg.voxel_edge = ParseNumber<double>(value, line_offset, key);
    } else if (key == "max_points") {
      cfg.max_points = ParseNumber<std::size_t>(value, line_offset, key);
    } else if (key == "embedding_dim") {
      cfg.oracle.dim = ParseNumber<int>(value, line_offset, key);
    } else if (key == "seed") {
      cfg.seed = ParseNumber<std::uint64_t>(value, line_offset, key);
    } else if (key == "noise_embedding") {
      cfg.oracle.noise_embedding = ParseNumber<double>(value, line_offset, key);
    } else if (key == "noise_offset") {
      cfg.oracle.noise_offset = ParseNumber<double>(value, line_offset, key);
    } else if (key == "noise_semantic") {
      cfg.oracle.noise_semantic = ParseNumber<double>(value, line_offset, key);
    } else if (key == "ap_range") {
      const auto r = ParseApRange(value);
      if (!r) throw ParseError(line_offset, key, "expected 25-95 or 50-95");
      cfg.ap_range = *r;
    } else if (key == "scorer") {
      if (value == "geometric") {
        cfg.scorer = ScorerKind::kGeometric;
      } else if (value == "gt") {
        cfg.scorer = ScorerKind::kGroundTruth;
      } else {
        throw ParseError(line_offset, key, "expected 'geometric' or 'gt'");
      }
    } else {
      throw ParseError(line_offset, key, "unknown config key");
    }
  }
  if (!have_version) throw ParseError(0, "version", "missing 'version = 1'");
  return cfg;
}

inline PipelineConfig LoadConfig(const std::string& path) {
  return ParseConfig(ReadFileBytes(path));
}

inline std::string FormatConfig(const PipelineConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "version = " << kConfigVersion << "\n"
      << "provider = " << c.provider << "\n"
      << "k_ratio = " << c.segmenter.k_ratio << "\n"
      << "k_max = " << c.segmenter.k_max << "\n"
      << "merge_radius = " << c.segmenter.merge_radius << "\n"
      << "score_threshold = " << c.segmenter.score_threshold << "\n"
      << "voxel_edge = " << c.voxel_edge << "\n"
      << "max_points = " << c.max_points << "\n"
      << "embedding_dim = " << c.oracle.dim << "\n"
      << "seed = " << c.seed << "\n"
      << "noise_embedding = " << c.oracle.noise_embedding << "\n"
      << "noise_offset = " << c.oracle.noise_offset << "\n"
      << "noise_semantic = " << c.oracle.noise_semantic << "\n"
      << "ap_range = " << ApRangeName(c.ap_range) << "\n"
      << "scorer = " << (c.scorer == ScorerKind::kGroundTruth ? "gt" : "geometric") << "\n";
  return out.str();
}

}  // namespace urbanseg

#endif  // URBANSEG_CONFIG_H_

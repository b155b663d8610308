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

// Scene statistics: per-class point tallies, building category and height
// histograms, long-tail ordering and inter-scene correlation.

#ifndef URBANSEG_STATS_H_
#define URBANSEG_STATS_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "urbanseg/error.h"
#include "urbanseg/types.h"

namespace urbanseg {

struct SceneSummary {
  std::string name;
  std::array<std::uint64_t, kNumUrbanClasses> points{};
  std::array<std::uint64_t, kNumBuildingCategories + 1> buildings_by_category{};
  std::array<std::uint64_t, kNumHeightClasses> buildings_by_height{};
  std::uint64_t total_buildings = 0;
  std::uint64_t total_points = 0;
  std::optional<double> area_km2;

  friend bool operator==(const SceneSummary&, const SceneSummary&) = default;
};

// Height of a building is the vertical extent of its points.
inline SceneSummary Summarize(const AnnotatedPointCloud& cloud, std::string name) {
  SceneSummary s;
  s.name = std::move(name);
  s.total_points = cloud.size();
  struct Extent {
    double zmin = INFINITY;
    double zmax = -INFINITY;
    std::array<std::uint64_t, kNumBuildingCategories + 1> votes{};
  };
  std::map<InstanceId, Extent> buildings;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    ++s.points[ToCode(cloud.semantic[i])];
    if (cloud.instance[i] == kNoInstance) continue;
    Extent& e = buildings[cloud.instance[i]];
    e.zmin = std::min(e.zmin, cloud.positions[i].z);
    e.zmax = std::max(e.zmax, cloud.positions[i].z);
    ++e.votes[ToCode(cloud.category[i])];
  }
  s.total_buildings = buildings.size();
  for (const auto& [id, e] : buildings) {
    const auto best = std::max_element(e.votes.begin(), e.votes.end()) - e.votes.begin();
    ++s.buildings_by_category[best];
    ++s.buildings_by_height[ToCode(ClassifyHeight(e.zmax - e.zmin))];
  }
  return s;
}

// Urban classes by descending point count; ties by class code.
inline std::vector<std::pair<UrbanClass, std::uint64_t>> LongTail(const SceneSummary& s) {
  std::vector<std::pair<UrbanClass, std::uint64_t>> out;
  for (int c = 0; c < kNumUrbanClasses; ++c) {
    out.emplace_back(static_cast<UrbanClass>(c), s.points[c]);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

// Pearson correlation of two equally long vectors. Throws kUndefined when
// either has zero variance.
inline double PearsonCorrelation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    ThrowInvalid("correlation needs two vectors of equal length >= 2");
  }
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw Error(ErrorCode::kUndefined, "correlation undefined for a zero-variance vector");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline std::array<double, kNumBuildingCategories> CategoryVector(const SceneSummary& s) {
  std::array<double, kNumBuildingCategories> v{};
  for (int c = 0; c < kNumBuildingCategories; ++c) {
    v[c] = static_cast<double>(s.buildings_by_category[c]);
  }
  return v;
}

// Correlation of the labeled building-category counts (Unlabeled excluded).
inline double SceneCorrelation(const SceneSummary& a, const SceneSummary& b) {
  const auto va = CategoryVector(a);
  const auto vb = CategoryVector(b);
  try {
    return PearsonCorrelation(va, vb);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUndefined) throw;
    throw Error(ErrorCode::kUndefined,
                "correlation between '" + a.name + "' and '" + b.name +
                    "' is undefined: building-category counts have zero variance");
  }
}

// Entry (i, j) is nullopt where the correlation is undefined.
inline std::vector<std::vector<std::optional<double>>> CorrelationMatrix(
    const std::vector<SceneSummary>& scenes) {
  const std::size_t n = scenes.size();
  std::vector<std::vector<std::optional<double>>> m(n, std::vector<std::optional<double>>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      try {
        m[i][j] = m[j][i] = SceneCorrelation(scenes[i], scenes[j]);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kUndefined) throw;
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json ToJson(const SceneSummary& s) {
  nlohmann::json j;
  j["name"] = s.name;
  for (int c = 0; c < kNumUrbanClasses; ++c) {
    j["points"][std::string(Name(static_cast<UrbanClass>(c)))] = s.points[c];
  }
  for (int c = 0; c <= kNumBuildingCategories; ++c) {
    j["building_categories"][std::string(Name(static_cast<BuildingCategory>(c)))] =
        s.buildings_by_category[c];
  }
  for (int c = 0; c < kNumHeightClasses; ++c) {
    j["building_heights"][std::string(Name(static_cast<HeightClass>(c)))] =
        s.buildings_by_height[c];
  }
  j["total_buildings"] = s.total_buildings;
  j["total_points"] = s.total_points;
  if (s.area_km2) j["area_km2"] = *s.area_km2;
  return j;
}

// Missing counts default to zero; missing totals default to the sums.
inline SceneSummary SummaryFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError(0, "scene", "scene summary must be a JSON object");
  SceneSummary s;
  s.name = j.value("name", std::string("scene"));
  const auto read_count = [&](const char* group, std::string_view key) -> std::uint64_t {
    if (!j.contains(group)) return 0;
    const auto& g = j.at(group);
    const std::string k(key);
    if (!g.contains(k)) return 0;
    const auto& v = g.at(k);
    if (!v.is_number() || v.get<double>() < 0) {
      throw ParseError(0, std::string(group) + "." + k, "count must be a non-negative number");
    }
    return static_cast<std::uint64_t>(std::llround(v.get<double>()));
  };
  for (int c = 0; c < kNumUrbanClasses; ++c) {
    s.points[c] = read_count("points", Name(static_cast<UrbanClass>(c)));
  }
  for (int c = 0; c <= kNumBuildingCategories; ++c) {
    s.buildings_by_category[c] =
        read_count("building_categories", Name(static_cast<BuildingCategory>(c)));
  }
  for (int c = 0; c < kNumHeightClasses; ++c) {
    s.buildings_by_height[c] = read_count("building_heights", Name(static_cast<HeightClass>(c)));
  }
  const std::uint64_t point_sum = std::accumulate(s.points.begin(), s.points.end(), std::uint64_t{0});
  const std::uint64_t cat_sum = std::accumulate(s.buildings_by_category.begin(),
                                                s.buildings_by_category.end(), std::uint64_t{0});
  s.total_points = j.value("total_points", point_sum);
  s.total_buildings = j.value("total_buildings", cat_sum);
  if (j.contains("area_km2")) s.area_km2 = j.at("area_km2").get<double>();
  return s;
}

// Accepts a single summary object, an array of them, or {"scenes": [...]}.
inline std::vector<SceneSummary> SummariesFromJson(const nlohmann::json& j) {
  std::vector<SceneSummary> out;
  const nlohmann::json* list = &j;
  if (j.is_object() && j.contains("scenes")) list = &j.at("scenes");
  if (list->is_array()) {
    for (const auto& item : *list) out.push_back(SummaryFromJson(item));
  } else {
    out.push_back(SummaryFromJson(*list));
  }
  return out;
}

}  // namespace urbanseg

#endif  // URBANSEG_STATS_H_

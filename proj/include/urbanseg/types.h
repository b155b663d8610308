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

// Domain types shared by every stage of the pipeline: geometry, the urban
// and building taxonomies, annotated clouds, and building proposals.

#ifndef URBANSEG_TYPES_H_
#define URBANSEG_TYPES_H_

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "urbanseg/error.h"

namespace urbanseg {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
  double& operator[](int axis) { return axis == 0 ? x : axis == 1 ? y : z; }

  friend Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend Vec3 operator*(double s, const Vec3& v) {
    return {s * v.x, s * v.y, s * v.z};
  }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double Dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}
inline Vec3 Cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double SquaredNorm(const Vec3& v) { return Dot(v, v); }
inline double Norm(const Vec3& v) { return std::sqrt(Dot(v, v)); }
inline double SquaredDistance(const Vec3& a, const Vec3& b) {
  return SquaredNorm(a - b);
}
inline double Distance(const Vec3& a, const Vec3& b) {
  return std::sqrt(SquaredDistance(a, b));
}
inline bool IsFinite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Integer codes are frozen; they are written verbatim to disk (FORMAT.md).
enum class UrbanClass : std::uint8_t {
  kGround = 0,
  kWater = 1,
  kBoat = 2,
  kVegetation = 3,
  kBridge = 4,
  kVehicle = 5,
  kBuilding = 6,
};
inline constexpr int kNumUrbanClasses = 7;

enum class BuildingCategory : std::uint8_t {
  kCommercial = 0,
  kResidential = 1,
  kOffice = 2,
  kCultural = 3,
  kTransportation = 4,
  kMunicipal = 5,
  kTemporary = 6,
  kUnlabeled = 7,
};
inline constexpr int kNumBuildingCategories = 7;  // labeled values only

enum class HeightClass : std::uint8_t {
  kLowRise = 0,
  kHighRise = 1,
  kSuperHighRise = 2,
};
inline constexpr int kNumHeightClasses = 3;

using InstanceId = std::uint32_t;
inline constexpr InstanceId kNoInstance = std::numeric_limits<InstanceId>::max();

inline constexpr std::array<std::string_view, kNumUrbanClasses> kUrbanClassNames =
    {"Ground", "Water", "Boat", "Vegetation", "Bridge", "Vehicle", "Building"};
inline constexpr std::array<std::string_view, kNumBuildingCategories + 1>
    kBuildingCategoryNames = {"Commercial", "Residential",    "Office",
                              "Cultural",   "Transportation", "Municipal",
                              "Temporary",  "Unlabeled"};
inline constexpr std::array<std::string_view, kNumHeightClasses>
    kHeightClassNames = {"LowRise", "HighRise", "SuperHighRise"};

inline int ToCode(UrbanClass c) { return static_cast<int>(c); }
inline int ToCode(BuildingCategory c) { return static_cast<int>(c); }
inline int ToCode(HeightClass c) { return static_cast<int>(c); }

inline std::optional<UrbanClass> UrbanClassFromCode(int code) {
  if (code < 0 || code >= kNumUrbanClasses) return std::nullopt;
  return static_cast<UrbanClass>(code);
}
inline std::optional<BuildingCategory> BuildingCategoryFromCode(int code) {
  if (code < 0 || code > kNumBuildingCategories) return std::nullopt;
  return static_cast<BuildingCategory>(code);
}
inline std::optional<HeightClass> HeightClassFromCode(int code) {
  if (code < 0 || code >= kNumHeightClasses) return std::nullopt;
  return static_cast<HeightClass>(code);
}

inline std::string_view Name(UrbanClass c) { return kUrbanClassNames[ToCode(c)]; }
inline std::string_view Name(BuildingCategory c) {
  return kBuildingCategoryNames[ToCode(c)];
}
inline std::string_view Name(HeightClass c) {
  return kHeightClassNames[ToCode(c)];
}

// Under 24 m is low-rise, 24 m to 100 m inclusive is high-rise, anything
// above 100 m is super high-rise.
inline HeightClass ClassifyHeight(double height_m) {
  if (!(height_m >= 0.0)) {
    ThrowInvalid("building height must be a non-negative number, got " +
                 std::to_string(height_m));
  }
  if (height_m < 24.0) return HeightClass::kLowRise;
  if (height_m <= 100.0) return HeightClass::kHighRise;
  return HeightClass::kSuperHighRise;
}

// Column-oriented annotated point cloud. All channels have the same length.
struct AnnotatedPointCloud {
  std::vector<Vec3> positions;
  std::vector<Rgb> colors;
  std::vector<UrbanClass> semantic;
  std::vector<InstanceId> instance;
  std::vector<BuildingCategory> category;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }

  void Reserve(std::size_t n) {
    positions.reserve(n);
    colors.reserve(n);
    semantic.reserve(n);
    instance.reserve(n);
    category.reserve(n);
  }

  void Append(const Vec3& p, Rgb rgb, UrbanClass cls, InstanceId id,
              BuildingCategory cat) {
    positions.push_back(p);
    colors.push_back(rgb);
    semantic.push_back(cls);
    instance.push_back(id);
    category.push_back(cat);
  }

  // Throws kInvalidInput naming the first violated invariant.
  void Validate() const {
    const std::size_t n = positions.size();
    if (colors.size() != n || semantic.size() != n || instance.size() != n ||
        category.size() != n) {
      ThrowInvalid("point cloud channels have mismatched lengths");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!IsFinite(positions[i])) {
        ThrowInvalid("non-finite position at point " + std::to_string(i));
      }
      if (ToCode(semantic[i]) >= kNumUrbanClasses) {
        ThrowInvalid("unknown urban class code at point " + std::to_string(i));
      }
      if (ToCode(category[i]) > kNumBuildingCategories) {
        ThrowInvalid("unknown building category code at point " +
                     std::to_string(i));
      }
      const bool building = semantic[i] == UrbanClass::kBuilding;
      if (building != (instance[i] != kNoInstance)) {
        ThrowInvalid("point " + std::to_string(i) +
                     ": instance id must be set exactly on building points");
      }
    }
  }

  friend bool operator==(const AnnotatedPointCloud&,
                         const AnnotatedPointCloud&) = default;
};

// A candidate building instance inside a block. Member indices are local to
// the block (positions in Block::indices), sorted ascending.
struct Proposal {
  std::vector<std::uint32_t> members;
  Vec3 anchor;
  double score = 0.0;
  BuildingCategory category = BuildingCategory::kUnlabeled;

  friend bool operator==(const Proposal&, const Proposal&) = default;
};

}  // namespace urbanseg

#endif  // URBANSEG_TYPES_H_

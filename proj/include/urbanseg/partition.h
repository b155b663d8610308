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

// Spatial preprocessing: block cropping, voxelization and furthest point
// sampling.

#ifndef URBANSEG_PARTITION_H_
#define URBANSEG_PARTITION_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "urbanseg/container.h"
#include "urbanseg/error.h"
#include "urbanseg/ingest.h"
#include "urbanseg/types.h"

namespace urbanseg {

inline constexpr std::size_t kDefaultMaxBlockPoints = 500000;
inline constexpr double kDefaultVoxelEdge = 1.0 / 3.0;

struct Block {
  std::uint32_t id = 0;
  std::vector<std::uint32_t> indices;  // sorted, into the parent cloud
  Vec3 min;
  Vec3 max;

  std::size_t size() const { return indices.size(); }
  friend bool operator==(const Block&, const Block&) = default;
};

inline Block MakeBlock(std::uint32_t id, std::vector<std::uint32_t> indices,
                       std::span<const Vec3> positions) {
  Block b;
  b.id = id;
  std::sort(indices.begin(), indices.end());
  b.indices = std::move(indices);
  if (!b.indices.empty()) {
    b.min = b.max = positions[b.indices.front()];
    for (std::uint32_t i : b.indices) {
      for (int a = 0; a < 3; ++a) {
        b.min[a] = std::min(b.min[a], positions[i][a]);
        b.max[a] = std::max(b.max[a], positions[i][a]);
      }
    }
  }
  return b;
}

// One block covering the whole cloud, regardless of size.
inline Block WholeCloudBlock(std::span<const Vec3> positions) {
  std::vector<std::uint32_t> all(positions.size());
  std::iota(all.begin(), all.end(), 0u);
  return MakeBlock(0, std::move(all), positions);
}

namespace internal {

class BlockCropper {
 public:
  BlockCropper(std::span<const Vec3> positions, std::size_t max_points,
               std::uint64_t seed)
      : positions_(positions), max_points_(max_points), seed_(seed) {}

  std::vector<Block> Run() {
    std::vector<std::uint32_t> all(positions_.size());
    std::iota(all.begin(), all.end(), 0u);
    if (!all.empty()) Split(std::move(all));
    return std::move(blocks_);
  }

 private:
  static constexpr int kBins = 64;
  static constexpr double kWindowHalfWidth = 0.15;

  void Split(std::vector<std::uint32_t> indices) {
    if (indices.size() <= max_points_) {
      blocks_.push_back(MakeBlock(static_cast<std::uint32_t>(blocks_.size()),
                                  std::move(indices), positions_));
      return;
    }
    Vec3 lo = positions_[indices[0]], hi = lo;
    for (std::uint32_t i : indices) {
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], positions_[i][a]);
        hi[a] = std::max(hi[a], positions_[i][a]);
      }
    }
    int axis = (hi.y - lo.y > hi.x - lo.x) ? 1 : 0;
    if (hi[axis] - lo[axis] <= 0.0 && hi.z - lo.z > 0.0) axis = 2;

    std::mt19937_64 rng = StreamRng(seed_, split_counter_++);
    const double center = 0.4 + 0.2 * UnitDouble(rng);

    std::vector<double> coords(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
      coords[k] = positions_[indices[k]][axis];
    }
    std::vector<double> sorted = coords;
    std::sort(sorted.begin(), sorted.end());
    const auto at = [&](double q) {
      const auto k = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1));
      return sorted[k];
    };
    const double wlo = at(center - kWindowHalfWidth);
    const double whi = at(center + kWindowHalfWidth);

    // Cut through the sparsest slab inside the window, which in urban scenes
    // is usually open ground between buildings.
    double split = at(center);
    if (whi > wlo) {
      std::array<std::size_t, kBins> counts{};
      const double width = (whi - wlo) / kBins;
      for (double c : sorted) {
        if (c < wlo || c > whi) continue;
        const int bin = std::min(kBins - 1, static_cast<int>((c - wlo) / width));
        ++counts[bin];
      }
      const double center_bin = (at(center) - wlo) / width;
      int best = 0;
      for (int b = 1; b < kBins; ++b) {
        if (counts[b] < counts[best] ||
            (counts[b] == counts[best] &&
             std::abs(b + 0.5 - center_bin) < std::abs(best + 0.5 - center_bin))) {
          best = b;
        }
      }
      split = wlo + (best + 0.5) * width;
    }

    std::vector<std::uint32_t> left, right;
    for (std::size_t k = 0; k < indices.size(); ++k) {
      (coords[k] < split ? left : right).push_back(indices[k]);
    }
    if (left.empty() || right.empty()) {
      // Degenerate extent: fall back to a rank split on (coordinate, index).
      std::vector<std::uint32_t> order = indices;
      std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        const double ca = positions_[a][axis], cb = positions_[b][axis];
        return ca != cb ? ca < cb : a < b;
      });
      const auto mid = static_cast<std::ptrdiff_t>(order.size() / 2);
      left.assign(order.begin(), order.begin() + mid);
      right.assign(order.begin() + mid, order.end());
    }
    indices.clear();
    indices.shrink_to_fit();
    Split(std::move(left));
    Split(std::move(right));
  }

  std::span<const Vec3> positions_;
  std::size_t max_points_;
  std::uint64_t seed_;
  std::uint64_t split_counter_ = 0;
  std::vector<Block> blocks_;
};

}  // namespace internal

// Recursively bisects the cloud along its longer horizontal axis until every
// block holds at most `max_points` points. Block ids follow depth-first order.
inline std::vector<Block> CropBlocks(std::span<const Vec3> positions,
                                     std::size_t max_points, std::uint64_t seed) {
  if (max_points < 1) ThrowInvalid("max_points must be at least 1");
  if (positions.size() > std::numeric_limits<std::uint32_t>::max()) {
    ThrowInvalid("clouds larger than 2^32 points are not supported");
  }
  return internal::BlockCropper(positions, max_points, seed).Run();
}

inline std::vector<Block> CropBlocks(const AnnotatedPointCloud& cloud,
                                     std::size_t max_points, std::uint64_t seed) {
  return CropBlocks(std::span<const Vec3>(cloud.positions), max_points, seed);
}

// Block decompositions as a container: per-point block id ("BLK ") plus
// per-block bounds ("BMIN", "BMAX").
inline Container BlocksToContainer(const std::vector<Block>& blocks,
                                   std::uint64_t point_count) {
  Container c(ContainerKind::kBlocks, point_count);
  std::vector<std::uint32_t> owner(point_count, std::numeric_limits<std::uint32_t>::max());
  const std::uint64_t nb = blocks.size();
  std::vector<double> bmin(3 * nb), bmax(3 * nb);
  for (std::uint64_t b = 0; b < nb; ++b) {
    for (std::uint32_t i : blocks[b].indices) owner[i] = blocks[b].id;
    for (int a = 0; a < 3; ++a) {
      bmin[a * nb + b] = blocks[b].min[a];
      bmax[a * nb + b] = blocks[b].max[a];
    }
  }
  c.Add<std::uint32_t>("BLK ", 1, point_count, owner);
  c.Add<double>("BMIN", 3, nb, bmin);
  c.Add<double>("BMAX", 3, nb, bmax);
  return c;
}

inline std::vector<Block> BlocksFromContainer(const Container& c) {
  const std::uint64_t n = c.point_count();
  const auto owner = c.Get<std::uint32_t>("BLK ", 1, n);
  const Channel* bmin_ch = c.Find("BMIN");
  if (bmin_ch == nullptr) throw ParseError(kContainerHeaderSize, "BMIN", "missing");
  const std::uint64_t nb = bmin_ch->rows;
  const auto bmin = c.Get<double>("BMIN", 3, nb);
  const auto bmax = c.Get<double>("BMAX", 3, nb);
  std::vector<Block> blocks(nb);
  for (std::uint64_t b = 0; b < nb; ++b) {
    blocks[b].id = static_cast<std::uint32_t>(b);
    for (int a = 0; a < 3; ++a) {
      blocks[b].min[a] = bmin[a * nb + b];
      blocks[b].max[a] = bmax[a * nb + b];
    }
  }
  for (std::uint64_t i = 0; i < n; ++i) {
    if (owner[i] >= nb) {
      throw ParseError(c.Find("BLK ")->file_offset + kChannelHeaderSize + 4 * i,
                       "BLK ", "block id out of range");
    }
    blocks[owner[i]].indices.push_back(static_cast<std::uint32_t>(i));
  }
  return blocks;
}

// ---------------------------------------------------------------------------

struct VoxelKey {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;
  friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
  friend auto operator<=>(const VoxelKey&, const VoxelKey&) = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::uint64_t h = internal::SplitMix64(static_cast<std::uint64_t>(k.x));
    h = internal::SplitMix64(h ^ static_cast<std::uint64_t>(k.y));
    return internal::SplitMix64(h ^ static_cast<std::uint64_t>(k.z));
  }
};

struct Voxel {
  VoxelKey key;
  std::vector<std::uint32_t> indices;  // ascending; front() is the representative
};

// Voxels are stored in order of first appearance (= ascending representative).
struct VoxelGrid {
  double edge = kDefaultVoxelEdge;
  std::vector<Voxel> voxels;
  std::vector<std::uint32_t> voxel_of_point;
  std::unordered_map<VoxelKey, std::uint32_t, VoxelKeyHash> lookup;

  const Voxel* Find(const VoxelKey& key) const {
    auto it = lookup.find(key);
    return it == lookup.end() ? nullptr : &voxels[it->second];
  }

  std::vector<std::uint32_t> Representatives() const {
    std::vector<std::uint32_t> reps;
    reps.reserve(voxels.size());
    for (const Voxel& v : voxels) reps.push_back(v.indices.front());
    return reps;
  }
};

inline VoxelKey VoxelOf(const Vec3& p, double edge) {
  return {static_cast<std::int64_t>(std::floor(p.x / edge)),
          static_cast<std::int64_t>(std::floor(p.y / edge)),
          static_cast<std::int64_t>(std::floor(p.z / edge))};
}

inline VoxelGrid Voxelize(std::span<const Vec3> points, double edge = kDefaultVoxelEdge) {
  if (!(edge > 0.0) || !std::isfinite(edge)) ThrowInvalid("voxel edge must be positive");
  constexpr double kLimit = 9.0e18;
  VoxelGrid grid;
  grid.edge = edge;
  grid.voxel_of_point.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3& p = points[i];
    if (!IsFinite(p)) ThrowInvalid("non-finite coordinate at point " + std::to_string(i));
    if (std::abs(p.x / edge) > kLimit || std::abs(p.y / edge) > kLimit ||
        std::abs(p.z / edge) > kLimit) {
      ThrowInvalid("coordinate out of voxel range at point " + std::to_string(i));
    }
    const VoxelKey key = VoxelOf(p, edge);
    auto [it, inserted] =
        grid.lookup.try_emplace(key, static_cast<std::uint32_t>(grid.voxels.size()));
    if (inserted) grid.voxels.push_back({key, {}});
    grid.voxels[it->second].indices.push_back(static_cast<std::uint32_t>(i));
    grid.voxel_of_point[i] = it->second;
  }
  return grid;
}

// ---------------------------------------------------------------------------

// Lowest index among the points with lexicographically smallest (x, y, z).
inline std::uint32_t DefaultFpsStart(std::span<const Vec3> points) {
  if (points.empty()) ThrowInvalid("no points to choose a start from");
  std::uint32_t best = 0;
  for (std::uint32_t i = 1; i < points.size(); ++i) {
    const Vec3& p = points[i];
    const Vec3& b = points[best];
    if (std::tie(p.x, p.y, p.z) < std::tie(b.x, b.y, b.z)) best = i;
  }
  return best;
}

inline std::uint32_t RandomFpsStart(std::size_t n, std::uint64_t seed) {
  if (n == 0) ThrowInvalid("no points to choose a start from");
  std::mt19937_64 rng = StreamRng(seed, 0);
  return static_cast<std::uint32_t>(rng() % n);
}

// Exact greedy furthest point sampling. Each new pick maximizes the minimum
// distance to the picks so far; ties go to the lowest index.
inline std::vector<std::uint32_t> FurthestPointSample(std::span<const Vec3> points,
                                                      std::size_t k,
                                                      std::uint32_t start) {
  const std::size_t n = points.size();
  if (k < 1 || k > n) {
    ThrowInvalid("fps needs 1 <= k <= point count (k=" + std::to_string(k) +
                 ", n=" + std::to_string(n) + ")");
  }
  if (start >= n) ThrowInvalid("fps start index out of range");
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);
  std::vector<std::uint32_t> picked;
  picked.reserve(k);
  std::uint32_t current = start;
  while (true) {
    picked.push_back(current);
    taken[current] = 1;
    if (picked.size() == k) break;
    const Vec3 c = points[current];
    double best_d2 = -1.0;
    std::uint32_t best = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double d2 = SquaredDistance(points[i], c);
      if (d2 < min_d2[i]) min_d2[i] = d2;
      if (min_d2[i] > best_d2) {
        best_d2 = min_d2[i];
        best = i;
      }
    }
    current = best;
  }
  return picked;
}

}  // namespace urbanseg

#endif  // URBANSEG_PARTITION_H_

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

// Clustering-free building proposal pipeline: furthest-point candidate
// selection, embedding relation matrix with argmin grouping, offset-shifted
// candidate merging, proposal scoring and score filtering.

#ifndef URBANSEG_SEGMENTER_H_
#define URBANSEG_SEGMENTER_H_

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "urbanseg/error.h"
#include "urbanseg/features.h"
#include "urbanseg/partition.h"
#include "urbanseg/types.h"

namespace urbanseg {

inline constexpr std::int32_t kUnassigned = -1;

struct SegmenterParams {
  std::size_t k_ratio = 3000;   // foreground points per candidate
  std::size_t k_max = 100;      // candidates per block
  double merge_radius = 1.0;    // meters, single-linkage on anchors
  double score_threshold = 0.1;
  bool random_start = false;    // seeded FPS start instead of min-xyz point
  std::uint64_t seed = 0;

  void Validate() const {
    if (k_ratio < 1) ThrowInvalid("k_ratio must be positive");
    if (k_max < 1) ThrowInvalid("k_max must be positive");
    if (!(merge_radius > 0.0) || !std::isfinite(merge_radius)) {
      ThrowInvalid("merge_radius must be positive");
    }
    if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) {
      ThrowInvalid("score_threshold must lie in [0, 1]");
    }
  }
};

// ---------------------------------------------------------------------------
// Candidate selection.

// 0 for an empty foreground, else ceil(n / k_ratio) clamped to [1, k_max].
inline std::size_t CandidateCount(std::size_t foreground, std::size_t k_ratio = 3000,
                                  std::size_t k_max = 100) {
  if (foreground == 0) return 0;
  const std::size_t wanted = (foreground + k_ratio - 1) / k_ratio;
  return std::min(k_max, std::max<std::size_t>(1, wanted));
}

// Returns candidates as entries of `foreground` (i.e. indices into
// `positions`), in furthest-point order.
inline std::vector<std::uint32_t> SelectCandidates(
    std::span<const std::uint32_t> foreground, std::span<const Vec3> positions,
    std::size_t k_ratio = 3000, std::size_t k_max = 100, bool random_start = false,
    std::uint64_t seed = 0) {
  const std::size_t k = CandidateCount(foreground.size(), k_ratio, k_max);
  if (k == 0) return {};
  std::vector<Vec3> fg_pos;
  fg_pos.reserve(foreground.size());
  for (std::uint32_t i : foreground) fg_pos.push_back(positions[i]);
  const std::uint32_t start =
      random_start ? RandomFpsStart(fg_pos.size(), seed) : DefaultFpsStart(fg_pos);
  std::vector<std::uint32_t> picked = FurthestPointSample(fg_pos, k, start);
  for (std::uint32_t& p : picked) p = foreground[p];
  return picked;
}

// ---------------------------------------------------------------------------
// Relation matrix and assignment.

struct RowMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  RowMatrix() = default;
  RowMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  std::span<const double> Row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

// Entry (i, j) is the Euclidean embedding distance between foreground point i
// and candidate j.
struct RelationMatrix {
  std::size_t foreground = 0;
  std::size_t candidates = 0;
  std::vector<double> distances;

  double operator()(std::size_t i, std::size_t j) const {
    return distances[i * candidates + j];
  }
};

inline double EmbeddingDistance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

inline RelationMatrix BuildRelationMatrix(const RowMatrix& fg, const RowMatrix& cand) {
  if (fg.cols != cand.cols) {
    ThrowInvalid("embedding dimensions differ: " + std::to_string(fg.cols) + " vs " +
                 std::to_string(cand.cols));
  }
  if (cand.rows < 1) ThrowInvalid("relation matrix needs at least one candidate");
  RelationMatrix m;
  m.foreground = fg.rows;
  m.candidates = cand.rows;
  m.distances.resize(fg.rows * cand.rows);
  for (std::size_t i = 0; i < fg.rows; ++i) {
    const auto row = fg.Row(i);
    for (std::size_t j = 0; j < cand.rows; ++j) {
      m.distances[i * cand.rows + j] = EmbeddingDistance(row, cand.Row(j));
    }
  }
  return m;
}

// Row-wise argmin; ties go to the lowest candidate index.
inline std::vector<std::uint32_t> Assign(const RelationMatrix& m) {
  std::vector<std::uint32_t> out(m.foreground, 0);
  for (std::size_t i = 0; i < m.foreground; ++i) {
    double best = m(i, 0);
    std::uint32_t arg = 0;
    for (std::size_t j = 1; j < m.candidates; ++j) {
      if (m(i, j) < best) {
        best = m(i, j);
        arg = static_cast<std::uint32_t>(j);
      }
    }
    out[i] = arg;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Merging.

namespace internal {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t Find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  // The smaller root survives, so each root is its set's lowest member.
  void Union(std::size_t a, std::size_t b) {
    a = Find(a);
    b = Find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace internal

// Shifts every candidate by its offset to get its anchor, clusters anchors by
// single linkage (distance <= merge_radius) and unions the member sets of
// each cluster. `assignment[i]` is the candidate of foreground point
// `foreground[i]`. Proposals are ordered by their lowest candidate index and
// anchored at that candidate; clusters without members are dropped.
inline std::vector<Proposal> MergeCandidates(std::span<const Vec3> candidate_positions,
                                             std::span<const Vec3> candidate_offsets,
                                             std::span<const std::uint32_t> assignment,
                                             std::span<const std::uint32_t> foreground,
                                             double merge_radius) {
  if (!(merge_radius > 0.0)) ThrowInvalid("merge_radius must be positive");
  const std::size_t c = candidate_positions.size();
  if (candidate_offsets.size() != c) ThrowInvalid("one offset per candidate required");
  if (assignment.size() != foreground.size()) {
    ThrowInvalid("assignment and foreground lengths differ");
  }
  std::vector<Vec3> anchors(c);
  for (std::size_t j = 0; j < c; ++j) {
    anchors[j] = candidate_positions[j] + candidate_offsets[j];
  }
  internal::DisjointSets sets(c);
  const double r2 = merge_radius * merge_radius;
  for (std::size_t a = 0; a < c; ++a) {
    for (std::size_t b = a + 1; b < c; ++b) {
      if (SquaredDistance(anchors[a], anchors[b]) <= r2) sets.Union(a, b);
    }
  }
  std::vector<std::int64_t> slot_of_root(c, -1);
  std::vector<Proposal> proposals;
  for (std::size_t j = 0; j < c; ++j) {
    const std::size_t root = sets.Find(j);
    if (slot_of_root[root] < 0) {
      slot_of_root[root] = static_cast<std::int64_t>(proposals.size());
      Proposal p;
      p.anchor = anchors[root];
      proposals.push_back(std::move(p));
    }
  }
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= c) ThrowInvalid("assignment references a missing candidate");
    const auto slot = slot_of_root[sets.Find(assignment[i])];
    proposals[slot].members.push_back(foreground[i]);
  }
  std::vector<Proposal> kept;
  kept.reserve(proposals.size());
  for (Proposal& p : proposals) {
    if (p.members.empty()) continue;
    std::sort(p.members.begin(), p.members.end());
    kept.push_back(std::move(p));
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Scoring.

struct ScoringContext {
  std::span<const Vec3> positions;  // block-local
  const Block* block = nullptr;
  const AnnotatedPointCloud* cloud = nullptr;
};

class ProposalScorer {
 public:
  virtual ~ProposalScorer() = default;
  // One score in [0, 1] per proposal.
  virtual std::vector<double> Score(const std::vector<Proposal>& proposals,
                                    const ScoringContext& context) const = 0;
};

// score = coverage * compactness, where coverage is the share of points in
// the proposal's bounding box that belong to it (among all proposal points)
// and compactness is the share of members within twice the median member
// distance to the anchor.
class GeometricScorer : public ProposalScorer {
 public:
  std::vector<double> Score(const std::vector<Proposal>& proposals,
                            const ScoringContext& context) const override {
    const auto& pos = context.positions;
    std::vector<double> scores(proposals.size(), 0.0);
    std::vector<std::pair<Vec3, Vec3>> boxes;
    boxes.reserve(proposals.size());
    for (const Proposal& p : proposals) {
      Vec3 lo = pos[p.members.front()], hi = lo;
      for (std::uint32_t m : p.members) {
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], pos[m][a]);
          hi[a] = std::max(hi[a], pos[m][a]);
        }
      }
      boxes.emplace_back(lo, hi);
    }
    for (std::size_t k = 0; k < proposals.size(); ++k) {
      const Proposal& p = proposals[k];
      const auto& [lo, hi] = boxes[k];
      std::size_t intruders = 0;
      for (std::size_t q = 0; q < proposals.size(); ++q) {
        if (q == k) continue;
        const auto& [qlo, qhi] = boxes[q];
        if (qhi.x < lo.x || qlo.x > hi.x || qhi.y < lo.y || qlo.y > hi.y ||
            qhi.z < lo.z || qlo.z > hi.z) {
          continue;
        }
        for (std::uint32_t m : proposals[q].members) {
          const Vec3& v = pos[m];
          if (v.x >= lo.x && v.x <= hi.x && v.y >= lo.y && v.y <= hi.y &&
              v.z >= lo.z && v.z <= hi.z) {
            ++intruders;
          }
        }
      }
      const double n = static_cast<double>(p.members.size());
      const double coverage = n / (n + static_cast<double>(intruders));

      std::vector<double> dist;
      dist.reserve(p.members.size());
      for (std::uint32_t m : p.members) dist.push_back(Distance(pos[m], p.anchor));
      std::vector<double> sorted = dist;
      const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>((sorted.size() - 1) / 2);
      std::nth_element(sorted.begin(), mid, sorted.end());
      const double limit = 2.0 * *mid;
      const auto inside = std::count_if(dist.begin(), dist.end(),
                                        [&](double d) { return d <= limit; });
      const double compactness = static_cast<double>(inside) / n;
      scores[k] = std::clamp(coverage * compactness, 0.0, 1.0);
    }
    return scores;
  }
};

// Best IoU of the proposal with any ground-truth instance in the block.
// Isolates grouping quality from scoring during evaluation.
class GroundTruthScorer : public ProposalScorer {
 public:
  std::vector<double> Score(const std::vector<Proposal>& proposals,
                            const ScoringContext& context) const override {
    if (context.block == nullptr || context.cloud == nullptr) {
      ThrowInvalid("ground-truth scorer needs the block and its cloud");
    }
    const Block& block = *context.block;
    const AnnotatedPointCloud& cloud = *context.cloud;
    std::unordered_map<InstanceId, std::size_t> gt_size;
    for (std::uint32_t i : block.indices) {
      if (cloud.instance[i] != kNoInstance) ++gt_size[cloud.instance[i]];
    }
    std::vector<double> scores(proposals.size(), 0.0);
    for (std::size_t k = 0; k < proposals.size(); ++k) {
      std::unordered_map<InstanceId, std::size_t> inter;
      for (std::uint32_t m : proposals[k].members) {
        const InstanceId id = cloud.instance[block.indices[m]];
        if (id != kNoInstance) ++inter[id];
      }
      const double n = static_cast<double>(proposals[k].members.size());
      double best = 0.0;
      for (const auto& [id, count] : inter) {
        const double c = static_cast<double>(count);
        best = std::max(best, c / (n + static_cast<double>(gt_size[id]) - c));
      }
      scores[k] = best;
    }
    return scores;
  }
};

enum class ScorerKind { kGeometric, kGroundTruth };

inline std::unique_ptr<ProposalScorer> MakeScorer(ScorerKind kind) {
  if (kind == ScorerKind::kGroundTruth) return std::make_unique<GroundTruthScorer>();
  return std::make_unique<GeometricScorer>();
}

// ---------------------------------------------------------------------------
// Filtering and the block driver.

struct SegmentationResult {
  std::vector<std::int32_t> assignment;  // per block point: proposal or kUnassigned
  std::vector<Proposal> proposals;

  friend bool operator==(const SegmentationResult&, const SegmentationResult&) = default;
};

// Drops proposals scoring below `threshold`; their points stay unassigned.
inline SegmentationResult FilterProposals(std::vector<Proposal> proposals,
                                          double threshold, std::size_t block_size) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    ThrowInvalid("score threshold must lie in [0, 1]");
  }
  SegmentationResult result;
  result.assignment.assign(block_size, kUnassigned);
  for (Proposal& p : proposals) {
    if (p.score < threshold) continue;
    const auto id = static_cast<std::int32_t>(result.proposals.size());
    for (std::uint32_t m : p.members) {
      if (m >= block_size) ThrowInvalid("proposal member outside the block");
      result.assignment[m] = id;
    }
    result.proposals.push_back(std::move(p));
  }
  return result;
}

inline SegmentationResult ScoreAndFilter(std::vector<Proposal> proposals,
                                         const ProposalScorer& scorer,
                                         const ScoringContext& context,
                                         double threshold, std::size_t block_size) {
  const std::vector<double> scores = scorer.Score(proposals, context);
  for (std::size_t k = 0; k < proposals.size(); ++k) {
    proposals[k].score = std::clamp(scores[k], 0.0, 1.0);
  }
  return FilterProposals(std::move(proposals), threshold, block_size);
}

// Majority vote over member labels; ties go to the lowest code.
inline BuildingCategory VoteCategory(std::span<const std::uint32_t> members,
                                     std::span<const BuildingCategory> labels) {
  std::array<std::size_t, kNumBuildingCategories + 1> votes{};
  for (std::uint32_t m : members) ++votes[ToCode(labels[m])];
  const auto best = std::max_element(votes.begin(), votes.end());
  return static_cast<BuildingCategory>(best - votes.begin());
}

struct StageTimings {
  double candidates_s = 0.0;
  double grouping_s = 0.0;
  double merging_s = 0.0;
  double scoring_s = 0.0;
};

// Foreground rows are grouped in chunks so the relation matrix never has to
// be materialized for a whole block.
inline constexpr std::size_t kRelationChunkRows = 4096;

inline SegmentationResult SegmentBlock(const Block& block, const AnnotatedPointCloud& cloud,
                                       const PointFeatures& features,
                                       const SegmenterParams& params,
                                       const ProposalScorer& scorer,
                                       StageTimings* timings = nullptr) {
  using Clock = std::chrono::steady_clock;
  const auto seconds = [](Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };
  params.Validate();
  const std::size_t n = block.size();
  features.Validate(n);

  auto t0 = Clock::now();
  std::vector<Vec3> positions;
  positions.reserve(n);
  for (std::uint32_t i : block.indices) positions.push_back(cloud.positions[i]);
  std::vector<std::uint32_t> foreground;
  for (std::uint32_t k = 0; k < n; ++k) {
    if (features.semantic_pred[k] == UrbanClass::kBuilding) foreground.push_back(k);
  }
  const std::vector<std::uint32_t> candidates =
      SelectCandidates(foreground, positions, params.k_ratio, params.k_max,
                       params.random_start, params.seed ^ block.id);
  auto t1 = Clock::now();
  if (timings) timings->candidates_s = seconds(t0, t1);
  if (candidates.empty()) {
    SegmentationResult empty;
    empty.assignment.assign(n, kUnassigned);
    return empty;
  }

  const auto dim = static_cast<std::size_t>(features.dim);
  RowMatrix cand(candidates.size(), dim);
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const auto e = features.Embedding(candidates[j]);
    std::copy(e.begin(), e.end(), cand.data.begin() + j * dim);
  }
  std::vector<std::uint32_t> assignment;
  assignment.reserve(foreground.size());
  for (std::size_t begin = 0; begin < foreground.size(); begin += kRelationChunkRows) {
    const std::size_t end = std::min(foreground.size(), begin + kRelationChunkRows);
    RowMatrix rows(end - begin, dim);
    for (std::size_t i = begin; i < end; ++i) {
      const auto e = features.Embedding(foreground[i]);
      std::copy(e.begin(), e.end(), rows.data.begin() + (i - begin) * dim);
    }
    const std::vector<std::uint32_t> part = Assign(BuildRelationMatrix(rows, cand));
    assignment.insert(assignment.end(), part.begin(), part.end());
  }
  auto t2 = Clock::now();
  if (timings) timings->grouping_s = seconds(t1, t2);

  std::vector<Vec3> cand_pos, cand_off;
  for (std::uint32_t c : candidates) {
    cand_pos.push_back(positions[c]);
    cand_off.push_back(features.offset[c]);
  }
  std::vector<Proposal> proposals =
      MergeCandidates(cand_pos, cand_off, assignment, foreground, params.merge_radius);
  std::vector<BuildingCategory> labels;
  if (!features.category_pred.empty()) {
    labels = features.category_pred;
  } else {
    labels.reserve(n);
    for (std::uint32_t i : block.indices) labels.push_back(cloud.category[i]);
  }
  for (Proposal& p : proposals) p.category = VoteCategory(p.members, labels);
  auto t3 = Clock::now();
  if (timings) timings->merging_s = seconds(t2, t3);

  ScoringContext context{positions, &block, &cloud};
  SegmentationResult result =
      ScoreAndFilter(std::move(proposals), scorer, context, params.score_threshold, n);
  if (timings) timings->scoring_s = seconds(t3, Clock::now());
  return result;
}

}  // namespace urbanseg

#endif  // URBANSEG_SEGMENTER_H_

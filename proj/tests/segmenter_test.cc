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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.h"
#include "urbanseg/error.h"
#include "urbanseg/features.h"
#include "urbanseg/partition.h"
#include "urbanseg/segmenter.h"
#include "urbanseg/synth.h"

namespace urbanseg {
namespace {

using testing::CanonicalPartition;

RowMatrix MatrixOf(const std::vector<std::vector<double>>& rows) {
  RowMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

RowMatrix RandomMatrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> g(0.0, 1.0);
  RowMatrix m(r, c);
  for (double& v : m.data) v = g(rng);
  return m;
}

TEST(CandidateCountTest, Examples) {
  EXPECT_EQ(CandidateCount(9000), 3u);
  EXPECT_EQ(CandidateCount(600000), 100u);
  EXPECT_EQ(CandidateCount(0), 0u);
  EXPECT_EQ(CandidateCount(10), 1u);
  EXPECT_EQ(CandidateCount(3000), 1u);
  EXPECT_EQ(CandidateCount(3001), 2u);
  EXPECT_EQ(CandidateCount(300000), 100u);
  EXPECT_EQ(CandidateCount(300001), 100u);
}

TEST(SelectCandidatesTest, PicksDistinctForegroundPoints) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<Vec3> pos(20000);
  for (Vec3& p : pos) p = {u(rng), u(rng), u(rng)};
  std::vector<std::uint32_t> fg;
  for (std::uint32_t i = 0; i < pos.size(); i += 2) fg.push_back(i);
  const auto cand = SelectCandidates(fg, pos);
  EXPECT_EQ(cand.size(), 4u);
  EXPECT_EQ(std::set<std::uint32_t>(cand.begin(), cand.end()).size(), cand.size());
  for (std::uint32_t c : cand) EXPECT_EQ(c % 2, 0u);
  EXPECT_TRUE(SelectCandidates({}, pos).empty());
  // A seeded random start is reproducible.
  EXPECT_EQ(SelectCandidates(fg, pos, 3000, 100, true, 5),
            SelectCandidates(fg, pos, 3000, 100, true, 5));
}

TEST(RelationMatrixTest, HandExample) {
  const RelationMatrix m =
      BuildRelationMatrix(MatrixOf({{0, 0}, {1, 1}}), MatrixOf({{0, 0}, {2, 2}}));
  ASSERT_EQ(m.foreground, 2u);
  ASSERT_EQ(m.candidates, 2u);
  EXPECT_DOUBLE_EQ(m(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(m(0, 1), 2.0 * std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(m(1, 0), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(m(1, 1), std::sqrt(2.0));
  EXPECT_EQ(Assign(m), (std::vector<std::uint32_t>{0, 0}));
}

TEST(RelationMatrixTest, IdenticalSetsZeroOnDiagonal) {
  std::mt19937_64 rng(2);
  const RowMatrix a = RandomMatrix(rng, 30, 6);
  const RelationMatrix m = BuildRelationMatrix(a, a);
  for (std::size_t i = 0; i < 30; ++i) {
    for (std::size_t j = 0; j < 30; ++j) {
      if (i == j) {
        EXPECT_EQ(m(i, j), 0.0);
      } else {
        EXPECT_GT(m(i, j), 0.0);
      }
    }
  }
}

TEST(RelationMatrixTest, MatchesScalarReference) {
  std::mt19937_64 rng(3);
  const RowMatrix fg = RandomMatrix(rng, 1000, 8);
  const RowMatrix cand = RandomMatrix(rng, 50, 8);
  const RelationMatrix m = BuildRelationMatrix(fg, cand);
  for (std::size_t i = 0; i < 1000; ++i) {
    for (std::size_t j = 0; j < 50; ++j) {
      double s = 0.0;
      for (std::size_t d = 0; d < 8; ++d) s += std::pow(fg(i, d) - cand(j, d), 2);
      EXPECT_NEAR(m(i, j), std::sqrt(s), 1e-9);
    }
  }
}

TEST(RelationMatrixTest, DimensionMismatchIsError) {
  EXPECT_THROW(BuildRelationMatrix(RowMatrix(2, 3), RowMatrix(2, 4)), Error);
  EXPECT_THROW(BuildRelationMatrix(RowMatrix(2, 3), RowMatrix(0, 3)), Error);
}

TEST(AssignTest, SingleCandidateTakesEverything) {
  std::mt19937_64 rng(4);
  const RelationMatrix m = BuildRelationMatrix(RandomMatrix(rng, 40, 3), RandomMatrix(rng, 1, 3));
  EXPECT_EQ(Assign(m), std::vector<std::uint32_t>(40, 0));
}

TEST(AssignTest, InvariantUnderPositiveScaling) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int trial = 0; trial < 50; ++trial) {
    RowMatrix fg = RandomMatrix(rng, 60, 4);
    RowMatrix cand = RandomMatrix(rng, 7, 4);
    const auto base = Assign(BuildRelationMatrix(fg, cand));
    const double s = scale(rng);
    for (double& v : fg.data) v *= s;
    for (double& v : cand.data) v *= s;
    EXPECT_EQ(Assign(BuildRelationMatrix(fg, cand)), base);
  }
}

TEST(MergeCandidatesTest, ChainingMergesViaSingleLinkage) {
  const double r = 2.0;
  const std::vector<Vec3> pos = {{0, 0, 0}, {0.9 * r, 0, 0}, {1.8 * r, 0, 0}};
  const std::vector<Vec3> off(3, Vec3{});
  const std::vector<std::uint32_t> assignment = {0, 1, 2, 2};
  const std::vector<std::uint32_t> fg = {3, 5, 8, 9};
  const auto proposals = MergeCandidates(pos, off, assignment, fg, r);
  ASSERT_EQ(proposals.size(), 1u);
  EXPECT_EQ(proposals[0].members, (std::vector<std::uint32_t>{3, 5, 8, 9}));
  EXPECT_EQ(proposals[0].anchor, (Vec3{0, 0, 0}));
}

TEST(MergeCandidatesTest, CoincidentAnchorsMergeAndDistantOnesDoNot) {
  // Candidates 0 and 1 point at the same center; candidate 2 is far away.
  const std::vector<Vec3> pos = {{0, 0, 0}, {4, 0, 0}, {50, 0, 0}};
  const std::vector<Vec3> off = {{2, 0, 0}, {-2, 0, 0}, {0, 0, 0}};
  const std::vector<std::uint32_t> assignment = {2, 0, 1, 2};
  const std::vector<std::uint32_t> fg = {0, 1, 2, 3};
  const auto proposals = MergeCandidates(pos, off, assignment, fg, 1.0);
  ASSERT_EQ(proposals.size(), 2u);
  EXPECT_EQ(proposals[0].members, (std::vector<std::uint32_t>{1, 2}));
  EXPECT_EQ(proposals[0].anchor, (Vec3{2, 0, 0}));
  EXPECT_EQ(proposals[1].members, (std::vector<std::uint32_t>{0, 3}));
}

TEST(MergeCandidatesTest, EmptyClustersAreDroppedAndOutputIsAPartition) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t c = 1 + rng() % 12;
    std::vector<Vec3> pos(c), off(c);
    for (std::size_t j = 0; j < c; ++j) pos[j] = {u(rng), u(rng), u(rng)};
    const std::size_t nf = rng() % 200;
    std::vector<std::uint32_t> fg(nf), assignment(nf);
    for (std::size_t i = 0; i < nf; ++i) {
      fg[i] = static_cast<std::uint32_t>(3 * i + rng() % 3);
      assignment[i] = static_cast<std::uint32_t>(rng() % c);
    }
    const auto proposals = MergeCandidates(pos, off, assignment, fg, 1.5);
    std::vector<std::uint32_t> all;
    for (const Proposal& p : proposals) {
      ASSERT_FALSE(p.members.empty());
      EXPECT_TRUE(std::is_sorted(p.members.begin(), p.members.end()));
      all.insert(all.end(), p.members.begin(), p.members.end());
    }
    std::sort(all.begin(), all.end());
    std::vector<std::uint32_t> expected = fg;
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(all, expected);
  }
}

TEST(MergeCandidatesTest, RejectsNonPositiveRadius) {
  const std::vector<Vec3> pos = {{0, 0, 0}};
  EXPECT_THROW(MergeCandidates(pos, pos, std::vector<std::uint32_t>{}, {}, 0.0), Error);
}

// Reordering candidates renumbers proposals but keeps the point partition.
TEST(MergeCandidatesTest, CandidateOrderDoesNotChangePartition) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t c = 2 + rng() % 8;
    const std::size_t nf = 50;
    RowMatrix cand = RandomMatrix(rng, c, 3);
    RowMatrix fg_emb = RandomMatrix(rng, nf, 3);
    std::vector<Vec3> pos(c), off(c, Vec3{});
    for (Vec3& p : pos) p = {u(rng), u(rng), 0.0};
    std::vector<std::uint32_t> fg(nf);
    std::iota(fg.begin(), fg.end(), 0u);

    auto partition = [&](const std::vector<std::size_t>& order) {
      RowMatrix c2(c, 3);
      std::vector<Vec3> p2(c), o2(c);
      for (std::size_t j = 0; j < c; ++j) {
        for (std::size_t d = 0; d < 3; ++d) c2(j, d) = cand(order[j], d);
        p2[j] = pos[order[j]];
        o2[j] = off[order[j]];
      }
      const auto assignment = Assign(BuildRelationMatrix(fg_emb, c2));
      const auto proposals = MergeCandidates(p2, o2, assignment, fg, 1.0);
      std::vector<std::int64_t> label(nf, -1);
      for (std::size_t k = 0; k < proposals.size(); ++k) {
        for (std::uint32_t m : proposals[k].members) label[m] = static_cast<std::int64_t>(k);
      }
      return CanonicalPartition(label, -1);
    };
    std::vector<std::size_t> order(c);
    std::iota(order.begin(), order.end(), 0u);
    const auto base = partition(order);
    std::shuffle(order.begin(), order.end(), rng);
    EXPECT_EQ(partition(order), base);
  }
}

std::vector<Proposal> ScoredProposals(const std::vector<double>& scores) {
  std::vector<Proposal> out;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    Proposal p;
    p.members = {static_cast<std::uint32_t>(k)};
    p.score = scores[k];
    out.push_back(p);
  }
  return out;
}

TEST(FilterProposalsTest, ThresholdIsInclusive) {
  const auto r = FilterProposals(ScoredProposals({0.05, 0.1, 0.5}), 0.1, 3);
  ASSERT_EQ(r.proposals.size(), 2u);
  EXPECT_EQ(r.proposals[0].score, 0.1);
  EXPECT_EQ(r.proposals[1].score, 0.5);
  EXPECT_EQ(r.assignment, (std::vector<std::int32_t>{kUnassigned, 0, 1}));
}

TEST(FilterProposalsTest, ZeroThresholdKeepsAll) {
  EXPECT_EQ(FilterProposals(ScoredProposals({0.0, 0.3}), 0.0, 2).proposals.size(), 2u);
}

TEST(FilterProposalsTest, AllBelowLeavesEverythingUnassigned) {
  const auto r = FilterProposals(ScoredProposals({0.01, 0.02}), 0.1, 4);
  EXPECT_TRUE(r.proposals.empty());
  EXPECT_EQ(r.assignment, std::vector<std::int32_t>(4, kUnassigned));
}

TEST(FilterProposalsTest, RejectsThresholdOutsideUnitInterval) {
  EXPECT_THROW(FilterProposals({}, 1.5, 0), Error);
  EXPECT_THROW(FilterProposals({}, -0.1, 0), Error);
}

TEST(VoteCategoryTest, MajorityWithLowestCodeOnTies) {
  const std::vector<BuildingCategory> labels = {
      BuildingCategory::kOffice, BuildingCategory::kResidential, BuildingCategory::kOffice,
      BuildingCategory::kResidential, BuildingCategory::kTemporary};
  const std::vector<std::uint32_t> all = {0, 1, 2, 3, 4};
  EXPECT_EQ(VoteCategory(all, labels), BuildingCategory::kResidential);
  const std::vector<std::uint32_t> some = {0, 2, 4};
  EXPECT_EQ(VoteCategory(some, labels), BuildingCategory::kOffice);
}

SynthScene SmallScene(std::uint64_t seed, int buildings) {
  SynthSpec spec;
  spec.buildings = buildings;
  return GenerateScene(spec, seed);
}

std::vector<std::int64_t> GroundTruthLabels(const AnnotatedPointCloud& cloud, const Block& b) {
  std::vector<std::int64_t> out;
  for (std::uint32_t i : b.indices) {
    out.push_back(cloud.instance[i] == kNoInstance ? -1 : static_cast<std::int64_t>(cloud.instance[i]));
  }
  return CanonicalPartition(out, -1);
}

TEST(SegmentBlockTest, NoiseFreeOracleReproducesGroundTruth) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const SynthScene scene = SmallScene(seed, 3 + static_cast<int>(seed) * 3);
    const Block block = WholeCloudBlock(scene.cloud.positions);
    const PointFeatures f = OracleProvider(OracleOptions{}).Provide(block, scene.cloud);
    for (ScorerKind kind : {ScorerKind::kGeometric, ScorerKind::kGroundTruth}) {
      const auto scorer = MakeScorer(kind);
      const SegmentationResult r = SegmentBlock(block, scene.cloud, f, SegmenterParams{}, *scorer);
      EXPECT_EQ(CanonicalPartition(r.assignment, kUnassigned), GroundTruthLabels(scene.cloud, block));
      for (const Proposal& p : r.proposals) {
        EXPECT_GE(p.score, 0.1);
        EXPECT_LE(p.score, 1.0);
        EXPECT_EQ(p.category, scene.cloud.category[block.indices[p.members.front()]]);
        if (kind == ScorerKind::kGroundTruth) {
          EXPECT_EQ(p.score, 1.0);
        }
      }
    }
  }
}

TEST(SegmentBlockTest, AssignmentFollowsOracleInstances) {
  const SynthScene scene = SmallScene(11, 6);
  const Block block = WholeCloudBlock(scene.cloud.positions);
  const PointFeatures f = OracleProvider(OracleOptions{}).Provide(block, scene.cloud);
  std::vector<std::uint32_t> fg;
  for (std::uint32_t k = 0; k < block.size(); ++k) {
    if (f.semantic_pred[k] == UrbanClass::kBuilding) fg.push_back(k);
  }
  const auto cand = SelectCandidates(fg, scene.cloud.positions);
  RowMatrix fm(fg.size(), f.dim), cm(cand.size(), f.dim);
  for (std::size_t i = 0; i < fg.size(); ++i) {
    for (int d = 0; d < f.dim; ++d) fm(i, d) = f.Embedding(fg[i])[d];
  }
  for (std::size_t j = 0; j < cand.size(); ++j) {
    for (int d = 0; d < f.dim; ++d) cm(j, d) = f.Embedding(cand[j])[d];
  }
  const auto a = Assign(BuildRelationMatrix(fm, cm));
  for (std::size_t i = 0; i < fg.size(); ++i) {
    EXPECT_EQ(scene.cloud.instance[fg[i]], scene.cloud.instance[cand[a[i]]]);
  }
}

TEST(SegmentBlockTest, NoForegroundGivesEmptyResult) {
  AnnotatedPointCloud cloud;
  for (int i = 0; i < 20; ++i) {
    cloud.Append({static_cast<double>(i), 0, 0}, {}, UrbanClass::kGround, kNoInstance,
                 BuildingCategory::kUnlabeled);
  }
  const Block block = WholeCloudBlock(cloud.positions);
  const PointFeatures f = OracleProvider(OracleOptions{}).Provide(block, cloud);
  const SegmentationResult r = SegmentBlock(block, cloud, f, SegmenterParams{}, GeometricScorer{});
  EXPECT_TRUE(r.proposals.empty());
  EXPECT_EQ(r.assignment, std::vector<std::int32_t>(20, kUnassigned));
}

TEST(SegmentBlockTest, DeterministicUnderNoise) {
  const SynthScene scene = SmallScene(5, 8);
  const Block block = WholeCloudBlock(scene.cloud.positions);
  OracleOptions o;
  o.noise_embedding = 0.4;
  o.noise_offset = 0.5;
  o.seed = 3;
  const PointFeatures f = OracleProvider(o).Provide(block, scene.cloud);
  SegmenterParams params;
  params.random_start = true;
  params.seed = 17;
  EXPECT_EQ(SegmentBlock(block, scene.cloud, f, params, GeometricScorer{}),
            SegmentBlock(block, scene.cloud, f, params, GeometricScorer{}));
}

TEST(SegmentBlockTest, FeatureMismatchAndBadParamsAreErrors) {
  const SynthScene scene = SmallScene(6, 2);
  const Block block = WholeCloudBlock(scene.cloud.positions);
  PointFeatures f = OracleProvider(OracleOptions{}).Provide(block, scene.cloud);
  SegmenterParams bad;
  bad.merge_radius = 0.0;
  EXPECT_THROW(SegmentBlock(block, scene.cloud, f, bad, GeometricScorer{}), Error);
  f.semantic_pred.pop_back();
  try {
    SegmentBlock(block, scene.cloud, f, SegmenterParams{}, GeometricScorer{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(GeometricScorerTest, IntrudersLowerTheScore) {
  // Two proposals on a line; the second's box swallows the first.
  const std::vector<Vec3> pos = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {-5, 0, 0}, {5, 0, 0}};
  Proposal a;
  a.members = {0, 1, 2};
  a.anchor = {1, 0, 0};
  Proposal b;
  b.members = {3, 4};
  b.anchor = {0, 0, 0};
  ScoringContext ctx{pos, nullptr, nullptr};
  const auto scores = GeometricScorer{}.Score({a, b}, ctx);
  EXPECT_DOUBLE_EQ(scores[0], 1.0);
  EXPECT_DOUBLE_EQ(scores[1], 2.0 / 5.0);
}

}  // namespace
}  // namespace urbanseg

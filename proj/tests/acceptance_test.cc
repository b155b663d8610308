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

// Acceptance suite. Prints one "[ACCEPT n] PASS|FAIL" line per criterion and
// exits nonzero if any criterion fails. Tolerances are pinned below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "test_util.h"
#include "urbanseg/features.h"
#include "urbanseg/ingest.h"
#include "urbanseg/metrics.h"
#include "urbanseg/pipeline.h"
#include "urbanseg/segmenter.h"
#include "urbanseg/stats.h"
#include "urbanseg/synth.h"

namespace urbanseg {
namespace {

constexpr double kOracleBudgetSeconds = 120.0;
constexpr double kCorrelationTolerance = 0.015;
constexpr double kCorrelationBudgetSeconds = 1.0;
constexpr double kAgreementTolerance = 1e-12;
constexpr double kMaxDiscrepancyRate = 0.05;
constexpr double kChiSquareAlpha = 0.01;
constexpr double kMaxNoiseInversion = 0.02;
constexpr double kInvarianceTolerance = 1e-9;
constexpr std::size_t kMaxFuzzPoints = 1000000;

using Clock = std::chrono::steady_clock;

double Since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

ApInput MakeInput(const std::vector<double>& scores, const std::vector<std::vector<double>>& iou,
                  std::size_t gts) {
  ApInput in;
  in.scores = scores;
  in.iou = IouTable(scores.size(), gts);
  for (std::size_t p = 0; p < scores.size(); ++p) {
    for (std::size_t g = 0; g < gts; ++g) in.iou(p, g) = iou[p][g];
  }
  return in;
}

// IoU table from two random labelings of a small universe, with predictions
// biased toward agreeing with the ground truth.
ApInput RandomPartitionInput(std::mt19937_64& rng, std::size_t max_pred, std::size_t max_gt) {
  const std::size_t n = 8 + rng() % 40;
  const std::size_t np = 1 + rng() % max_pred;
  const std::size_t ng = 1 + rng() % max_gt;
  std::vector<std::int64_t> pred(n), gt(n);
  for (std::size_t i = 0; i < n; ++i) {
    pred[i] = static_cast<std::int64_t>(rng() % (np + 1)) - 1;
    gt[i] = static_cast<std::int64_t>(rng() % (ng + 1)) - 1;
    if (rng() % 3 != 0 && gt[i] >= 0 && static_cast<std::size_t>(gt[i]) < np) pred[i] = gt[i];
  }
  ApInput in;
  in.iou = IouTableFromLabels(pred, np, gt, ng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t p = 0; p < np; ++p) in.scores.push_back(u(rng));
  return in;
}

ApSummary OracleRun(const AnnotatedPointCloud& cloud, const OracleOptions& oracle_options,
                    const ProposalScorer& scorer, int workers, SegmentationFile* out = nullptr) {
  SceneOptions options;
  options.workers = workers;
  const SceneResult r = SegmentScene(cloud, OracleProvider(oracle_options), scorer, options);
  SegmentationFile f = Flatten(r, cloud.size());
  const ApSummary s = EvaluateSegmentation(f, cloud, ApRange::k25To95).summary;
  if (out != nullptr) *out = std::move(f);
  return s;
}

// 1. Zero-noise oracle features recover every building exactly.
Outcome OracleEquivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20260101);
  int failures = 0;
  std::size_t max_points = 0;
  std::ostringstream log;
  for (int scene = 0; scene < 25; ++scene) {
    SynthSpec spec;
    AnnotatedPointCloud cloud;
    std::uint64_t seed = 0;
    do {
      spec = SynthSpec{};
      spec.buildings = 5 + static_cast<int>(rng() % 96);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      spec.footprint_min = 12.0 + 4.0 * u(rng);
      spec.footprint_max = spec.footprint_min + (20.0 - spec.footprint_min) * u(rng);
      spec.height_min = 10.0 + 8.0 * u(rng);
      spec.height_max = spec.height_min + (25.0 - spec.height_min) * u(rng);
      spec.building_density = 5.0 + u(rng);
      seed = rng();
      cloud = GenerateScene(spec, seed).cloud;
    } while (cloud.size() > kMaxFuzzPoints);
    max_points = std::max(max_points, cloud.size());
    const ApSummary s = OracleRun(cloud, OracleOptions{}, GeometricScorer{}, DefaultWorkers());
    if (s.ap != 1.0 || s.ap50 != 1.0 || s.ap25 != 1.0) {
      ++failures;
      log << " scene" << scene << "(b=" << spec.buildings << ",seed=" << seed << ",AP=" << s.ap
          << ")";
    }
  }
  const double seconds = Since(t0);
  std::ostringstream d;
  d << "25 scenes, " << failures << " imperfect, largest " << max_points << " points, "
    << seconds << " s (budget " << kOracleBudgetSeconds << " s)" << log.str();
  return {failures == 0 && seconds <= kOracleBudgetSeconds, d.str()};
}

// 2. Published scene correlation table from the published category counts.
Outcome CorrelationTable() {
  const double published[6][6] = {
      {1, 0.89, 0.68, 0.50, 0.26, 0.65},   {0.89, 1, 0.47, 0.34, -0.05, 0.66},
      {0.68, 0.47, 1, 0.96, 0.85, 0.56},   {0.50, 0.34, 0.96, 1, 0.88, 0.53},
      {0.26, -0.05, 0.85, 0.88, 1, 0.18},  {0.65, 0.66, 0.56, 0.53, 0.18, 1}};
  const char* names[6] = {"Qingdao", "Wuhu", "Longhua", "Yuehai", "Lihu", "Yingrenshi"};
  const auto t0 = Clock::now();
  const auto summaries = SummariesFromJson(nlohmann::json::parse(
      ReadFileBytes(std::string(URBANSEG_DATA_DIR) + "/reference_scenes.json")));
  const auto matrix = CorrelationMatrix(summaries);
  const double seconds = Since(t0);
  double worst = 0.0;
  bool ok = summaries.size() == 6;
  for (std::size_t i = 0; ok && i < 6; ++i) {
    ok = summaries[i].name == names[i];
    for (std::size_t j = 0; ok && j < 6; ++j) {
      if (!matrix[i][j].has_value()) {
        ok = false;
        break;
      }
      worst = std::max(worst, std::abs(*matrix[i][j] - published[i][j]));
    }
  }
  std::ostringstream d;
  d << "max |r - published| = " << worst << " (tol " << kCorrelationTolerance << "), " << seconds
    << " s";
  return {ok && worst <= kCorrelationTolerance && seconds < kCorrelationBudgetSeconds, d.str()};
}

// 3. Candidate count rule.
Outcome CandidateRule() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-500.0, 500.0);
  bool ok = true;
  std::ostringstream d;
  for (std::size_t n : {0ul, 1ul, 2999ul, 3000ul, 3001ul, 299999ul, 300000ul, 1000000ul}) {
    std::vector<Vec3> positions(n);
    for (Vec3& p : positions) p = {u(rng), u(rng), u(rng)};
    std::vector<std::uint32_t> foreground(n);
    for (std::size_t i = 0; i < n; ++i) foreground[i] = static_cast<std::uint32_t>(i);
    const std::size_t got = SelectCandidates(foreground, positions).size();
    const std::size_t expected =
        n == 0 ? 0 : std::min<std::size_t>(100, std::max<std::size_t>(1, (n + 2999) / 3000));
    ok &= got == expected;
    d << n << "->" << got << " ";
  }
  return {ok, d.str()};
}

// 4. AP fixtures and the exhaustive matcher oracle.
Outcome MetricFixtures() {
  bool ok = true;
  const ApInput single = MakeInput({0.7}, {{0.6}}, 1);
  const ApSummary s = SummarizeAp(single);
  ok &= std::abs(s.ap - 8.0 / 15.0) <= kAgreementTolerance && s.ap50 == 1.0;
  const ApInput two = MakeInput({0.9, 0.8}, {{0.9, 0.0}, {0.1, 0.2}}, 2);
  ok &= AveragePrecision(two, 0.5) == 0.5;

  std::mt19937_64 rng(4);
  const auto thresholds = IouThresholds(ApRange::k25To95);
  int agree = 0, discrepancies = 0, mismatched_reference = 0;
  std::ostringstream log;
  for (int trial = 0; trial < 1000; ++trial) {
    const ApInput in = RandomPartitionInput(rng, 4, 4);
    const double t = thresholds[rng() % thresholds.size()];
    const double greedy = AveragePrecision(in, t);
    std::vector<std::vector<double>> iou(in.scores.size(), std::vector<double>(in.iou.gts));
    for (std::size_t p = 0; p < in.scores.size(); ++p) {
      for (std::size_t g = 0; g < in.iou.gts; ++g) iou[p][g] = in.iou(p, g);
    }
    // The reference evaluation of greedy's own matching must agree always.
    std::vector<int> match(in.scores.size(), -1);
    for (const auto& r : GreedyMatch(in, t)) match[r.pred] = static_cast<int>(r.gt);
    if (std::abs(testing::ReferenceAp(in.scores, match, in.iou.gts) - greedy) >
        kAgreementTolerance) {
      ++mismatched_reference;
    }
    const double best = testing::BruteForceBestAp(in.scores, iou, in.iou.gts, t);
    if (std::abs(best - greedy) <= kAgreementTolerance) {
      ++agree;
    } else {
      ++discrepancies;
      if (discrepancies <= 5) log << " [trial " << trial << " t=" << t << " greedy=" << greedy
                                  << " best=" << best << "]";
    }
  }
  const double rate = discrepancies / 1000.0;
  std::ostringstream d;
  d << "fixtures " << (ok ? "ok" : "wrong") << ", " << agree << "/1000 optimal, " << discrepancies
    << " greedy-suboptimal (" << 100.0 * rate << "%, bound " << 100.0 * kMaxDiscrepancyRate
    << "%), " << mismatched_reference << " reference mismatches" << log.str();
  return {ok && mismatched_reference == 0 && rate < kMaxDiscrepancyRate, d.str()};
}

// 5. Planar sampling count and per-cell uniformity.
Outcome SamplerDensity() {
  TriangleMesh plane;
  testing::AddSquare(plane, 0.0, 0.0, 10.0, 0.0, UrbanClass::kGround, kNoInstance,
                     BuildingCategory::kUnlabeled);
  const boost::math::chi_squared per_seed(99);
  const double per_seed_critical = boost::math::quantile(complement(per_seed, kChiSquareAlpha));
  double pooled = 0.0;
  bool counts_ok = true;
  int seed_rejections = 0;
  std::ostringstream stats;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const AnnotatedPointCloud cloud = SampleMesh(plane, 80.0, seed);
    counts_ok &= cloud.size() == 8000;
    std::vector<double> cells(100, 0.0);
    for (const Vec3& p : cloud.positions) {
      const int cx = std::clamp(static_cast<int>(std::floor(p.x)), 0, 9);
      const int cy = std::clamp(static_cast<int>(std::floor(p.y)), 0, 9);
      cells[cy * 10 + cx] += 1.0;
    }
    const double expected = static_cast<double>(cloud.size()) / 100.0;
    double chi = 0.0;
    for (double c : cells) chi += (c - expected) * (c - expected) / expected;
    pooled += chi;
    if (chi > per_seed_critical) ++seed_rejections;
    stats << (seed == 1 ? "" : ",") << static_cast<int>(std::lround(chi));
  }
  const boost::math::chi_squared pooled_dist(20 * 99);
  const double critical = boost::math::quantile(complement(pooled_dist, kChiSquareAlpha));
  std::ostringstream d;
  d << "8000 points every seed: " << (counts_ok ? "yes" : "no") << "; pooled chi2 " << pooled
    << " vs critical " << critical << " (df 1980, alpha " << kChiSquareAlpha << "); per-seed ["
    << stats.str() << "], " << seed_rejections << "/20 above " << per_seed_critical;
  return {counts_ok && pooled <= critical, d.str()};
}

// 6. Mean AP does not rise with embedding noise.
Outcome NoiseMonotonicity() {
  SynthSpec spec;
  spec.buildings = 30;
  const AnnotatedPointCloud cloud = GenerateScene(spec, 606).cloud;
  const double sigmas[] = {0.0, 0.1, 0.3, 0.5};
  std::vector<double> means;
  for (double sigma : sigmas) {
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      OracleOptions o;
      o.noise_embedding = sigma;
      o.seed = seed;
      sum += OracleRun(cloud, o, GeometricScorer{}, DefaultWorkers()).ap;
    }
    means.push_back(sum / 10.0);
  }
  double worst_inversion = 0.0;
  for (std::size_t i = 1; i < means.size(); ++i) {
    worst_inversion = std::max(worst_inversion, means[i] - means[i - 1]);
  }
  std::ostringstream d;
  d << "mean AP";
  for (std::size_t i = 0; i < means.size(); ++i) d << " s=" << sigmas[i] << ":" << means[i];
  d << "; largest rise " << worst_inversion << " (limit " << kMaxNoiseInversion << ")";
  return {worst_inversion <= kMaxNoiseInversion, d.str()};
}

// 7. Serial versus parallel output, and read-after-write identity.
Outcome DeterminismAndRoundTrip() {
  SynthSpec spec;
  spec.buildings = 25;
  const SynthScene serial_scene = GenerateScene(spec, 77, 1);
  const SynthScene parallel_scene = GenerateScene(spec, 77, 4);
  bool synth_same = CloudToContainer(serial_scene.cloud).Serialize() ==
                    CloudToContainer(parallel_scene.cloud).Serialize();
  const bool sample_same = CloudToContainer(SampleMesh(serial_scene.mesh, 3.0, 5, 1)).Serialize() ==
                           CloudToContainer(SampleMesh(serial_scene.mesh, 3.0, 5, 4)).Serialize();
  OracleOptions noisy;
  noisy.noise_embedding = 0.3;
  noisy.noise_offset = 0.5;
  noisy.noise_semantic = 0.02;
  noisy.seed = 9;
  SceneOptions options;
  options.max_points = 50000;
  options.workers = 1;
  const GeometricScorer scorer;
  const SceneResult a = SegmentScene(serial_scene.cloud, OracleProvider(noisy), scorer, options);
  options.workers = 4;
  const SceneResult b = SegmentScene(serial_scene.cloud, OracleProvider(noisy), scorer, options);
  const SegmentationFile fa = Flatten(a, serial_scene.cloud.size());
  const SegmentationFile fb = Flatten(b, serial_scene.cloud.size());
  const bool segment_same =
      SegmentationToContainer(fa).Serialize() == SegmentationToContainer(fb).Serialize() &&
      ToJson(fa).dump() == ToJson(fb).dump() && a.blocks.size() > 1;

  std::mt19937_64 rng(7);
  int container_failures = 0, ply_failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const AnnotatedPointCloud cloud = testing::RandomCloud(rng, 300);
    if (!(CloudFromContainer(Container::Parse(CloudToContainer(cloud).Serialize())) == cloud)) {
      ++container_failures;
    }
    if (!(CloudFromPly(CloudToPly(cloud)) == cloud)) ++ply_failures;
  }
  std::ostringstream d;
  d << "synth " << (synth_same ? "same" : "DIFFERENT") << ", sample "
    << (sample_same ? "same" : "DIFFERENT") << ", segment (" << a.blocks.size() << " blocks) "
    << (segment_same ? "same" : "DIFFERENT") << "; round trips failed: container "
    << container_failures << "/1000, ply " << ply_failures << "/1000";
  return {synth_same && sample_same && segment_same && container_failures == 0 &&
              ply_failures == 0,
          d.str()};
}

// 8. Invariances of assignment, AP and correlation.
Outcome Invariances() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  int assign_failures = 0, ap_failures = 0, corr_failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 300, k = 1 + rng() % 20, dim = 1 + rng() % 16;
    RowMatrix fg(n, dim), cand(k, dim);
    for (double& v : fg.data) v = normal(rng);
    for (double& v : cand.data) v = normal(rng);
    const double scale = std::exp(u(rng) * 12.0 - 6.0);
    RowMatrix fg2 = fg, cand2 = cand;
    for (double& v : fg2.data) v *= scale;
    for (double& v : cand2.data) v *= scale;
    if (Assign(BuildRelationMatrix(fg, cand)) != Assign(BuildRelationMatrix(fg2, cand2))) {
      ++assign_failures;
    }
  }
  for (int trial = 0; trial < 200; ++trial) {
    const ApInput in = RandomPartitionInput(rng, 8, 8);
    ApInput moved = in;
    const double a = 0.1 + 5.0 * u(rng);
    for (double& s : moved.scores) s = std::exp(a * s) + std::pow(s, 3.0);
    const ApSummary x = SummarizeAp(in), y = SummarizeAp(moved);
    if (x.ap != y.ap || x.ap50 != y.ap50 || x.ap25 != y.ap25) ++ap_failures;
  }
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = 3 + rng() % 20;
    std::vector<double> x(len), y(len);
    for (std::size_t i = 0; i < len; ++i) {
      x[i] = normal(rng) * 100.0;
      y[i] = 0.5 * x[i] + normal(rng) * 80.0;
    }
    const double base = PearsonCorrelation(x, y);
    const double a = std::exp(u(rng) * 8.0 - 4.0), b = normal(rng) * 1e3;
    const double c = std::exp(u(rng) * 8.0 - 4.0), e = normal(rng) * 1e3;
    std::vector<double> x2 = x, y2 = y;
    for (double& v : x2) v = a * v + b;
    for (double& v : y2) v = c * v + e;
    if (std::abs(PearsonCorrelation(x2, y2) - base) > kInvarianceTolerance) ++corr_failures;
  }
  std::ostringstream d;
  d << "failures out of 200: assign " << assign_failures << ", AP " << ap_failures
    << ", correlation " << corr_failures;
  return {assign_failures == 0 && ap_failures == 0 && corr_failures == 0, d.str()};
}

}  // namespace
}  // namespace urbanseg

int main() {
  using urbanseg::Outcome;
  const std::vector<std::function<Outcome()>> criteria = {
      urbanseg::OracleEquivalence, urbanseg::CorrelationTable, urbanseg::CandidateRule,
      urbanseg::MetricFixtures,    urbanseg::SamplerDensity,   urbanseg::NoiseMonotonicity,
      urbanseg::DeterminismAndRoundTrip, urbanseg::Invariances};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << "[ACCEPT " << i + 1 << "] " << (o.pass ? "PASS" : "FAIL") << " " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

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

// Instance-segmentation evaluation: IoU, greedy score-ordered matching,
// all-point interpolated average precision, the AP / AP50 / AP25 summary, and
// per-category point-wise IoU.

#ifndef URBANSEG_METRICS_H_
#define URBANSEG_METRICS_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "urbanseg/error.h"
#include "urbanseg/types.h"

namespace urbanseg {

// |pred ∩ gt| / |pred ∪ gt| for sorted, duplicate-free index sets.
inline double InstanceIou(std::span<const std::uint32_t> pred,
                          std::span<const std::uint32_t> gt) {
  if (pred.empty() && gt.empty()) ThrowInvalid("IoU of two empty sets is undefined");
  if (!std::is_sorted(pred.begin(), pred.end()) || !std::is_sorted(gt.begin(), gt.end())) {
    ThrowInvalid("IoU inputs must be sorted index sets");
  }
  std::size_t inter = 0;
  auto a = pred.begin();
  auto b = gt.begin();
  while (a != pred.end() && b != gt.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++inter;
      ++a;
      ++b;
    }
  }
  const std::size_t uni = pred.size() + gt.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

struct IouTable {
  std::size_t preds = 0;
  std::size_t gts = 0;
  std::vector<double> values;  // row-major preds x gts

  IouTable() = default;
  IouTable(std::size_t p, std::size_t g) : preds(p), gts(g), values(p * g, 0.0) {}
  double operator()(std::size_t p, std::size_t g) const { return values[p * gts + g]; }
  double& operator()(std::size_t p, std::size_t g) { return values[p * gts + g]; }
};

inline IouTable IouTableFromSets(const std::vector<std::vector<std::uint32_t>>& preds,
                                 const std::vector<std::vector<std::uint32_t>>& gts) {
  IouTable t(preds.size(), gts.size());
  for (std::size_t p = 0; p < preds.size(); ++p) {
    for (std::size_t g = 0; g < gts.size(); ++g) t(p, g) = InstanceIou(preds[p], gts[g]);
  }
  return t;
}

// IoUs from per-point labels in one pass. Labels are dense ids or -1.
inline IouTable IouTableFromLabels(std::span<const std::int64_t> pred_labels,
                                   std::size_t num_preds,
                                   std::span<const std::int64_t> gt_labels,
                                   std::size_t num_gts) {
  if (pred_labels.size() != gt_labels.size()) {
    ThrowInvalid("prediction and ground truth cover different point sets");
  }
  std::vector<std::size_t> pred_size(num_preds, 0), gt_size(num_gts, 0);
  std::unordered_map<std::uint64_t, std::size_t> inter;
  for (std::size_t i = 0; i < pred_labels.size(); ++i) {
    const std::int64_t p = pred_labels[i];
    const std::int64_t g = gt_labels[i];
    if (p >= static_cast<std::int64_t>(num_preds) || g >= static_cast<std::int64_t>(num_gts)) {
      ThrowInvalid("label out of range");
    }
    if (p >= 0) ++pred_size[p];
    if (g >= 0) ++gt_size[g];
    if (p >= 0 && g >= 0) ++inter[static_cast<std::uint64_t>(p) * num_gts + g];
  }
  IouTable t(num_preds, num_gts);
  for (const auto& [key, count] : inter) {
    const std::size_t p = key / num_gts;
    const std::size_t g = key % num_gts;
    t(p, g) = static_cast<double>(count) /
              static_cast<double>(pred_size[p] + gt_size[g] - count);
  }
  return t;
}

// Predictions and ground truth of one evaluation unit (typically a block).
struct ApInput {
  std::vector<double> scores;  // one per prediction
  IouTable iou;
};

struct MatchRecord {
  std::size_t unit = 0;
  std::size_t pred = 0;
  std::int64_t gt = -1;  // -1: false positive
  double iou = 0.0;
  double score = 0.0;
};

// Ranking order shared by matching and the PR curve.
inline bool RanksBefore(const MatchRecord& a, const MatchRecord& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.unit != b.unit) return a.unit < b.unit;
  return a.pred < b.pred;
}

// Predictions in descending score order (ties: lowest id) each claim the
// still-unmatched ground truth of highest IoU, provided IoU >= threshold.
inline std::vector<MatchRecord> GreedyMatch(const ApInput& input, double threshold,
                                            std::size_t unit = 0) {
  if (input.scores.size() != input.iou.preds) {
    ThrowInvalid("one score per prediction required");
  }
  std::vector<MatchRecord> records(input.iou.preds);
  for (std::size_t p = 0; p < records.size(); ++p) {
    records[p].unit = unit;
    records[p].pred = p;
    records[p].score = input.scores[p];
  }
  std::sort(records.begin(), records.end(), RanksBefore);
  std::vector<char> taken(input.iou.gts, 0);
  for (MatchRecord& r : records) {
    double best = -1.0;
    std::int64_t arg = -1;
    for (std::size_t g = 0; g < input.iou.gts; ++g) {
      const double v = input.iou(r.pred, g);
      if (taken[g] || v < threshold) continue;
      if (v > best) {
        best = v;
        arg = static_cast<std::int64_t>(g);
      }
    }
    if (arg >= 0) {
      taken[arg] = 1;
      r.gt = arg;
      r.iou = best;
    }
  }
  return records;
}

struct PrCurve {
  std::vector<double> precision;
  std::vector<double> recall;
};

inline PrCurve PrecisionRecall(std::vector<MatchRecord> records, std::size_t num_gt) {
  std::sort(records.begin(), records.end(), RanksBefore);
  PrCurve curve;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (records[k].gt >= 0) ++tp;
    curve.precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    curve.recall.push_back(num_gt == 0 ? 0.0
                                       : static_cast<double>(tp) / static_cast<double>(num_gt));
  }
  return curve;
}

// Area under the precision envelope (all-point interpolation). No ground
// truth and no predictions scores 1; predictions without ground truth 0.
inline double ApFromMatches(std::vector<MatchRecord> records, std::size_t num_gt) {
  if (num_gt == 0) return records.empty() ? 1.0 : 0.0;
  if (records.empty()) return 0.0;
  PrCurve curve = PrecisionRecall(std::move(records), num_gt);
  for (std::size_t k = curve.precision.size() - 1; k > 0; --k) {
    curve.precision[k - 1] = std::max(curve.precision[k - 1], curve.precision[k]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < curve.recall.size(); ++k) {
    ap += (curve.recall[k] - prev_recall) * curve.precision[k];
    prev_recall = curve.recall[k];
  }
  return ap;
}

// Pools several units: each is matched on its own, then all predictions are
// ranked together against the total ground-truth count.
inline double AveragePrecision(std::span<const ApInput> units, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) ThrowInvalid("IoU threshold must lie in (0, 1]");
  std::vector<MatchRecord> all;
  std::size_t num_gt = 0;
  for (std::size_t u = 0; u < units.size(); ++u) {
    auto records = GreedyMatch(units[u], threshold, u);
    all.insert(all.end(), records.begin(), records.end());
    num_gt += units[u].iou.gts;
  }
  return ApFromMatches(std::move(all), num_gt);
}

inline double AveragePrecision(const ApInput& input, double threshold) {
  return AveragePrecision(std::span<const ApInput>(&input, 1), threshold);
}

enum class ApRange { k25To95, k50To95 };

// Thresholds in steps of 0.05, built from integer percentages so that e.g.
// 0.6 compares equal to an IoU of 60/100.
inline std::vector<double> IouThresholds(ApRange range) {
  std::vector<double> out;
  for (int pct = range == ApRange::k25To95 ? 25 : 50; pct <= 95; pct += 5) {
    out.push_back(pct / 100.0);
  }
  return out;
}

inline std::optional<ApRange> ParseApRange(std::string_view text) {
  if (text == "25-95") return ApRange::k25To95;
  if (text == "50-95") return ApRange::k50To95;
  return std::nullopt;
}

inline const char* ApRangeName(ApRange r) {
  return r == ApRange::k25To95 ? "25-95" : "50-95";
}

struct ApSummary {
  double ap = 0.0;
  double ap50 = 0.0;
  double ap25 = 0.0;
};

inline ApSummary SummarizeAp(std::span<const ApInput> units,
                             ApRange range = ApRange::k25To95) {
  ApSummary s;
  const auto thresholds = IouThresholds(range);
  for (double t : thresholds) s.ap += AveragePrecision(units, t);
  s.ap /= static_cast<double>(thresholds.size());
  s.ap50 = AveragePrecision(units, 0.5);
  s.ap25 = AveragePrecision(units, 0.25);
  return s;
}

inline ApSummary SummarizeAp(const ApInput& input, ApRange range = ApRange::k25To95) {
  return SummarizeAp(std::span<const ApInput>(&input, 1), range);
}

// ---------------------------------------------------------------------------

struct CategoryIou {
  // nullopt: category absent from both ground truth and prediction.
  std::array<std::optional<double>, kNumBuildingCategories> iou;
  // Mean over categories present in ground truth; nullopt if none are.
  std::optional<double> mean;
};

// Point-wise IoU of each labeled category's mask. Unlabeled points (which
// includes non-building points) belong to no mask.
inline CategoryIou MiouByCategory(std::span<const BuildingCategory> pred,
                                  std::span<const BuildingCategory> gt) {
  if (pred.size() != gt.size()) ThrowInvalid("category label sequences differ in length");
  std::array<std::size_t, kNumBuildingCategories> inter{}, pred_n{}, gt_n{};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int p = ToCode(pred[i]);
    const int g = ToCode(gt[i]);
    if (p < kNumBuildingCategories) ++pred_n[p];
    if (g < kNumBuildingCategories) ++gt_n[g];
    if (p == g && p < kNumBuildingCategories) ++inter[p];
  }
  CategoryIou out;
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < kNumBuildingCategories; ++c) {
    const std::size_t uni = pred_n[c] + gt_n[c] - inter[c];
    if (uni == 0) continue;
    out.iou[c] = static_cast<double>(inter[c]) / static_cast<double>(uni);
    if (gt_n[c] > 0) {
      sum += *out.iou[c];
      ++present;
    }
  }
  if (present > 0) out.mean = sum / present;
  return out;
}

// ---------------------------------------------------------------------------

struct ThresholdResult {
  double threshold = 0.0;
  double ap = 0.0;
  PrCurve curve;
};

struct EvalReport {
  ApRange range = ApRange::k25To95;
  ApSummary summary;
  std::vector<ThresholdResult> per_threshold;
  CategoryIou categories;
  std::size_t num_predictions = 0;
  std::size_t num_ground_truth = 0;
  std::size_t num_points = 0;
  std::size_t num_units = 0;
};

inline EvalReport Evaluate(std::span<const ApInput> units,
                           std::span<const BuildingCategory> pred_categories,
                           std::span<const BuildingCategory> gt_categories,
                           ApRange range = ApRange::k25To95) {
  EvalReport r;
  r.range = range;
  r.summary = SummarizeAp(units, range);
  r.num_units = units.size();
  r.num_points = gt_categories.size();
  for (const ApInput& u : units) {
    r.num_predictions += u.iou.preds;
    r.num_ground_truth += u.iou.gts;
  }
  for (double t : IouThresholds(range)) {
    ThresholdResult tr;
    tr.threshold = t;
    tr.ap = AveragePrecision(units, t);
    std::vector<MatchRecord> all;
    for (std::size_t u = 0; u < units.size(); ++u) {
      auto rec = GreedyMatch(units[u], t, u);
      all.insert(all.end(), rec.begin(), rec.end());
    }
    tr.curve = PrecisionRecall(std::move(all), r.num_ground_truth);
    r.per_threshold.push_back(std::move(tr));
  }
  r.categories = MiouByCategory(pred_categories, gt_categories);
  return r;
}

inline nlohmann::json ToJson(const EvalReport& r) {
  nlohmann::json j;
  j["ap_range"] = ApRangeName(r.range);
  j["AP"] = r.summary.ap;
  j["AP50"] = r.summary.ap50;
  j["AP25"] = r.summary.ap25;
  nlohmann::json cats = nlohmann::json::object();
  for (int c = 0; c < kNumBuildingCategories; ++c) {
    const auto name = std::string(Name(static_cast<BuildingCategory>(c)));
    cats[name] = r.categories.iou[c] ? nlohmann::json(*r.categories.iou[c])
                                     : nlohmann::json(nullptr);
  }
  j["category_iou"] = cats;
  j["mIoU"] = r.categories.mean ? nlohmann::json(*r.categories.mean) : nlohmann::json(nullptr);
  nlohmann::json thresholds = nlohmann::json::array();
  for (const auto& t : r.per_threshold) {
    thresholds.push_back({{"threshold", t.threshold},
                          {"ap", t.ap},
                          {"precision", t.curve.precision},
                          {"recall", t.curve.recall}});
  }
  j["per_threshold"] = thresholds;
  j["counts"] = {{"predictions", r.num_predictions},
                 {"ground_truth", r.num_ground_truth},
                 {"points", r.num_points},
                 {"units", r.num_units}};
  return j;
}

// Aligned text table: AP / AP50 / AP25, then one column per category.
inline std::string RenderTable(const EvalReport& r) {
  static constexpr std::array<const char*, kNumBuildingCategories> kShort = {
      "Co", "Re", "Of", "Cu", "Tr", "Mu", "Te"};
  std::string out;
  char buf[64];
  out += "     AP   AP50   AP25 |";
  for (const char* s : kShort) {
    std::snprintf(buf, sizeof(buf), " %6s", s);
    out += buf;
  }
  out += " |   mIoU\n";
  std::snprintf(buf, sizeof(buf), "%7.3f%7.3f%7.3f |", r.summary.ap, r.summary.ap50,
                r.summary.ap25);
  out += buf;
  for (int c = 0; c < kNumBuildingCategories; ++c) {
    if (r.categories.iou[c]) {
      std::snprintf(buf, sizeof(buf), " %6.3f", *r.categories.iou[c]);
    } else {
      std::snprintf(buf, sizeof(buf), " %6s", "-");
    }
    out += buf;
  }
  if (r.categories.mean) {
    std::snprintf(buf, sizeof(buf), " | %6.3f\n", *r.categories.mean);
  } else {
    std::snprintf(buf, sizeof(buf), " | %6s\n", "-");
  }
  out += buf;
  return out;
}

}  // namespace urbanseg

#endif  // URBANSEG_METRICS_H_

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

// Scene driver: crops a cloud into blocks, segments them on a worker pool,
// and reads/writes/evaluates scene-level segmentation results.

#ifndef URBANSEG_PIPELINE_H_
#define URBANSEG_PIPELINE_H_

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "urbanseg/container.h"
#include "urbanseg/error.h"
#include "urbanseg/features.h"
#include "urbanseg/metrics.h"
#include "urbanseg/partition.h"
#include "urbanseg/segmenter.h"
#include "urbanseg/types.h"

namespace urbanseg {

struct SceneOptions {
  SegmenterParams segmenter;
  std::size_t max_points = kDefaultMaxBlockPoints;
  double voxel_edge = kDefaultVoxelEdge;
  std::uint64_t crop_seed = 0;
  int workers = 1;
};

struct BlockLog {
  std::uint32_t block = 0;
  std::size_t points = 0;
  std::size_t voxels = 0;
  std::size_t proposals = 0;
  double features_s = 0.0;
  StageTimings stages;
  double wall_s = 0.0;
};

struct SceneResult {
  std::vector<Block> blocks;
  std::vector<SegmentationResult> results;  // indexed by block id
  std::vector<BlockLog> log;                // indexed by block id
};

inline int DefaultWorkers() {
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

// Blocks are claimed from a shared counter; results are stored by block id,
// so output never depends on scheduling. The first failure (lowest block id)
// is rethrown with its block id.
inline SceneResult SegmentScene(const AnnotatedPointCloud& cloud,
                                const FeatureProvider& provider,
                                const ProposalScorer& scorer, const SceneOptions& options) {
  options.segmenter.Validate();
  if (!(options.voxel_edge > 0.0)) ThrowInvalid("voxel_edge must be positive");
  SceneResult scene;
  scene.blocks = CropBlocks(cloud, options.max_points, options.crop_seed);
  const std::size_t nb = scene.blocks.size();
  scene.results.resize(nb);
  scene.log.resize(nb);
  std::vector<std::exception_ptr> errors(nb);
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    using Clock = std::chrono::steady_clock;
    while (true) {
      const std::size_t b = next.fetch_add(1);
      if (b >= nb) return;
      try {
        const Block& block = scene.blocks[b];
        BlockLog& log = scene.log[b];
        const auto t0 = Clock::now();
        log.block = block.id;
        log.points = block.size();
        std::vector<Vec3> pos;
        pos.reserve(block.size());
        for (std::uint32_t i : block.indices) pos.push_back(cloud.positions[i]);
        log.voxels = Voxelize(pos, options.voxel_edge).voxels.size();
        const auto t1 = Clock::now();
        const PointFeatures features = provider.Provide(block, cloud);
        log.features_s = std::chrono::duration<double>(Clock::now() - t1).count();
        scene.results[b] =
            SegmentBlock(block, cloud, features, options.segmenter, scorer, &log.stages);
        log.proposals = scene.results[b].proposals.size();
        log.wall_s = std::chrono::duration<double>(Clock::now() - t0).count();
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
  };

  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(nb)));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t b = 0; b < nb; ++b) {
    if (!errors[b]) continue;
    try {
      std::rethrow_exception(errors[b]);
    } catch (const Error& e) {
      throw Error(e.code(), "block " + std::to_string(b) + ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error("block " + std::to_string(b) + ": " + e.what());
    }
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Scene-level result file.

struct ProposalRow {
  std::uint32_t block = 0;
  double score = 0.0;
  BuildingCategory category = BuildingCategory::kUnlabeled;
  std::uint64_t points = 0;
  Vec3 anchor;
  friend bool operator==(const ProposalRow&, const ProposalRow&) = default;
};

// Proposal ids are global: block order, then proposal order within a block.
struct SegmentationFile {
  std::vector<std::int32_t> assignment;    // per point: proposal id or -1
  std::vector<std::uint32_t> block_of_point;
  std::vector<ProposalRow> proposals;
  friend bool operator==(const SegmentationFile&, const SegmentationFile&) = default;
};

inline SegmentationFile Flatten(const SceneResult& scene, std::size_t point_count) {
  SegmentationFile f;
  f.assignment.assign(point_count, kUnassigned);
  f.block_of_point.assign(point_count, 0);
  for (std::size_t b = 0; b < scene.blocks.size(); ++b) {
    const Block& block = scene.blocks[b];
    const SegmentationResult& r = scene.results[b];
    const auto base = static_cast<std::int32_t>(f.proposals.size());
    for (const Proposal& p : r.proposals) {
      f.proposals.push_back({block.id, p.score, p.category, p.members.size(), p.anchor});
    }
    for (std::size_t k = 0; k < block.size(); ++k) {
      const std::uint32_t i = block.indices[k];
      f.block_of_point[i] = block.id;
      if (r.assignment[k] != kUnassigned) f.assignment[i] = base + r.assignment[k];
    }
  }
  return f;
}

inline Container SegmentationToContainer(const SegmentationFile& f) {
  const std::uint64_t n = f.assignment.size();
  const std::uint64_t np = f.proposals.size();
  Container c(ContainerKind::kSegmentation, n);
  c.Add<std::int32_t>("ASGN", 1, n, f.assignment);
  c.Add<std::uint32_t>("BLK ", 1, n, f.block_of_point);
  std::vector<std::uint32_t> pid(np), pblk(np);
  std::vector<double> pscr(np), panc(3 * np);
  std::vector<std::uint8_t> pcat(np);
  std::vector<std::uint64_t> pcnt(np);
  for (std::uint64_t k = 0; k < np; ++k) {
    const ProposalRow& p = f.proposals[k];
    pid[k] = static_cast<std::uint32_t>(k);
    pblk[k] = p.block;
    pscr[k] = p.score;
    pcat[k] = static_cast<std::uint8_t>(p.category);
    pcnt[k] = p.points;
    for (int a = 0; a < 3; ++a) panc[a * np + k] = p.anchor[a];
  }
  c.Add<std::uint32_t>("PID ", 1, np, pid);
  c.Add<double>("PSCR", 1, np, pscr);
  c.Add<std::uint8_t>("PCAT", 1, np, pcat);
  c.Add<std::uint64_t>("PCNT", 1, np, pcnt);
  c.Add<std::uint32_t>("PBLK", 1, np, pblk);
  c.Add<double>("PANC", 3, np, panc);
  return c;
}

inline SegmentationFile SegmentationFromContainer(const Container& c) {
  const std::uint64_t n = c.point_count();
  SegmentationFile f;
  f.assignment = c.Get<std::int32_t>("ASGN", 1, n);
  f.block_of_point = c.Get<std::uint32_t>("BLK ", 1, n);
  const Channel* pid_ch = c.Find("PID ");
  if (pid_ch == nullptr) throw ParseError(kContainerHeaderSize, "PID ", "missing");
  const std::uint64_t np = pid_ch->rows;
  const auto pid = c.Get<std::uint32_t>("PID ", 1, np);
  const auto pscr = c.Get<double>("PSCR", 1, np);
  const auto pcat = c.Get<std::uint8_t>("PCAT", 1, np);
  const auto pcnt = c.Get<std::uint64_t>("PCNT", 1, np);
  const auto pblk = c.Get<std::uint32_t>("PBLK", 1, np);
  const auto panc = c.Get<double>("PANC", 3, np);
  for (std::uint64_t k = 0; k < np; ++k) {
    if (pid[k] != k) {
      throw ParseError(pid_ch->file_offset + kChannelHeaderSize + 4 * k, "PID ",
                       "proposal ids must be 0..P-1 in order");
    }
    const auto cat = BuildingCategoryFromCode(pcat[k]);
    if (!cat) {
      throw ParseError(c.Find("PCAT")->file_offset + kChannelHeaderSize + k, "PCAT",
                       "unknown building category code");
    }
    f.proposals.push_back(
        {pblk[k], pscr[k], *cat, pcnt[k], {panc[k], panc[np + k], panc[2 * np + k]}});
  }
  const Channel* asgn = c.Find("ASGN");
  for (std::uint64_t i = 0; i < n; ++i) {
    if (f.assignment[i] < -1 || f.assignment[i] >= static_cast<std::int64_t>(np)) {
      throw ParseError(asgn->file_offset + kChannelHeaderSize + 4 * i, "ASGN",
                       "proposal id out of range");
    }
  }
  return f;
}

inline void WriteSegmentation(const SegmentationFile& f, const std::string& path) {
  WriteFileBytes(path, SegmentationToContainer(f).Serialize());
}

inline SegmentationFile ReadSegmentation(const std::string& path) {
  return SegmentationFromContainer(ReadContainer(path, ContainerKind::kSegmentation));
}

inline nlohmann::json ToJson(const SegmentationFile& f) {
  nlohmann::json j;
  j["format"] = "urbanseg-segmentation";
  j["version"] = 1;
  j["points"] = f.assignment.size();
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < f.proposals.size(); ++k) {
    const ProposalRow& p = f.proposals[k];
    rows.push_back({{"id", k},
                    {"block", p.block},
                    {"score", p.score},
                    {"category", std::string(Name(p.category))},
                    {"category_code", ToCode(p.category)},
                    {"points", p.points},
                    {"anchor", {p.anchor.x, p.anchor.y, p.anchor.z}}});
  }
  j["proposals"] = rows;
  j["assignment"] = f.assignment;
  return j;
}

inline nlohmann::json TimingJson(const SceneResult& scene) {
  nlohmann::json blocks = nlohmann::json::array();
  double total = 0.0;
  for (const BlockLog& l : scene.log) {
    total += l.wall_s;
    blocks.push_back({{"block", l.block},
                      {"points", l.points},
                      {"voxels", l.voxels},
                      {"proposals", l.proposals},
                      {"features_s", l.features_s},
                      {"candidates_s", l.stages.candidates_s},
                      {"grouping_s", l.stages.grouping_s},
                      {"merging_s", l.stages.merging_s},
                      {"scoring_s", l.stages.scoring_s},
                      {"wall_s", l.wall_s}});
  }
  return {{"blocks", blocks}, {"total_block_wall_s", total}};
}

// ---------------------------------------------------------------------------
// Evaluation against an annotated cloud.

// With `per_block`, each block is one evaluation unit whose ground truth is
// the part of every instance inside that block. Otherwise the whole scene is
// a single unit.
inline EvalReport EvaluateSegmentation(const SegmentationFile& f,
                                       const AnnotatedPointCloud& gt, ApRange range,
                                       bool per_block = true) {
  const std::size_t n = gt.size();
  if (f.assignment.size() != n || f.block_of_point.size() != n) {
    ThrowInvalid("result covers " + std::to_string(f.assignment.size()) +
                 " points but the ground truth has " + std::to_string(n));
  }
  for (std::int32_t a : f.assignment) {
    if (a != kUnassigned && (a < 0 || static_cast<std::size_t>(a) >= f.proposals.size())) {
      ThrowInvalid("assignment references missing proposal " + std::to_string(a));
    }
  }
  std::map<std::uint32_t, std::vector<std::uint32_t>> unit_points;
  for (std::uint32_t i = 0; i < n; ++i) {
    unit_points[per_block ? f.block_of_point[i] : 0].push_back(i);
  }
  std::vector<ApInput> units;
  for (const auto& [unit, points] : unit_points) {
    std::map<std::int32_t, std::int64_t> pred_id;
    std::map<InstanceId, std::int64_t> gt_id;
    std::vector<std::int64_t> pred_labels(points.size(), -1), gt_labels(points.size(), -1);
    for (std::size_t k = 0; k < points.size(); ++k) {
      const std::uint32_t i = points[k];
      if (f.assignment[i] != kUnassigned) {
        auto [it, _] = pred_id.try_emplace(f.assignment[i],
                                           static_cast<std::int64_t>(pred_id.size()));
        pred_labels[k] = it->second;
      }
      if (gt.instance[i] != kNoInstance) {
        auto [it, _] = gt_id.try_emplace(gt.instance[i], static_cast<std::int64_t>(gt_id.size()));
        gt_labels[k] = it->second;
      }
    }
    ApInput input;
    input.iou = IouTableFromLabels(pred_labels, pred_id.size(), gt_labels, gt_id.size());
    input.scores.resize(pred_id.size());
    for (const auto& [global, local] : pred_id) {
      input.scores[local] = f.proposals[global].score;
    }
    units.push_back(std::move(input));
  }
  std::vector<BuildingCategory> pred_cat(n, BuildingCategory::kUnlabeled);
  std::vector<BuildingCategory> gt_cat(n, BuildingCategory::kUnlabeled);
  for (std::size_t i = 0; i < n; ++i) {
    if (f.assignment[i] != kUnassigned) pred_cat[i] = f.proposals[f.assignment[i]].category;
    if (gt.instance[i] != kNoInstance) gt_cat[i] = gt.category[i];
  }
  return Evaluate(units, pred_cat, gt_cat, range);
}

}  // namespace urbanseg

#endif  // URBANSEG_PIPELINE_H_

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

// Command-line front end: sample / segment / evaluate / stats / synth.
// Exit codes: 0 success, 1 validation, 2 I/O or parse, 3 internal.

#ifndef URBANSEG_CLI_H_
#define URBANSEG_CLI_H_

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "urbanseg/config.h"
#include "urbanseg/error.h"
#include "urbanseg/features.h"
#include "urbanseg/ingest.h"
#include "urbanseg/metrics.h"
#include "urbanseg/pipeline.h"
#include "urbanseg/segmenter.h"
#include "urbanseg/stats.h"
#include "urbanseg/synth.h"

namespace urbanseg::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitIo = 2,
  kExitInternal = 3,
};

inline int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse:
    case ErrorCode::kIo:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

namespace internal {

inline void WriteText(const std::string& path, const std::string& text) {
  WriteFileBytes(path, text);
}

inline Rgb InstanceColor(std::int32_t id) {
  if (id < 0) return {90, 90, 90};
  const std::uint64_t h = urbanseg::internal::SplitMix64(static_cast<std::uint64_t>(id));
  return {static_cast<std::uint8_t>(64 + (h & 0xBF)), static_cast<std::uint8_t>(64 + ((h >> 8) & 0xBF)),
          static_cast<std::uint8_t>(64 + ((h >> 16) & 0xBF))};
}

inline std::string FormatOptional(const std::optional<double>& v, int width, int precision) {
  std::ostringstream s;
  s << std::setw(width);
  if (v) {
    s << std::fixed << std::setprecision(precision) << *v;
  } else {
    s << "-";
  }
  return s.str();
}

// Applies key = value lines from a synth spec file.
inline void ApplySynthSpec(std::string_view text, SynthSpec& spec) {
  std::uint64_t offset = 0;
  while (offset <= text.size()) {
    std::size_t end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(offset, end - offset);
    const std::uint64_t at = offset;
    offset = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = urbanseg::internal::Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(at, "synth spec", "expected 'key = value'");
    const std::string key(urbanseg::internal::Trim(line.substr(0, eq)));
    const std::string_view value = urbanseg::internal::Trim(line.substr(eq + 1));
    using urbanseg::internal::ParseNumber;
    if (key == "buildings") spec.buildings = ParseNumber<int>(value, at, key);
    else if (key == "footprint_min") spec.footprint_min = ParseNumber<double>(value, at, key);
    else if (key == "footprint_max") spec.footprint_max = ParseNumber<double>(value, at, key);
    else if (key == "height_min") spec.height_min = ParseNumber<double>(value, at, key);
    else if (key == "height_max") spec.height_max = ParseNumber<double>(value, at, key);
    else if (key == "spacing") spec.spacing = ParseNumber<double>(value, at, key);
    else if (key == "building_density") spec.building_density = ParseNumber<double>(value, at, key);
    else if (key == "ground_density") spec.ground_density = ParseNumber<double>(value, at, key);
    else if (key == "clutter_density") spec.clutter_density = ParseNumber<double>(value, at, key);
    else if (key == "vegetation") spec.vegetation = ParseNumber<int>(value, at, key);
    else if (key == "vehicles") spec.vehicles = ParseNumber<int>(value, at, key);
    else if (key == "water") spec.water = ParseNumber<int>(value, at, key) != 0;
    else if (key == "unlabeled_fraction") spec.unlabeled_fraction = ParseNumber<double>(value, at, key);
    else throw ParseError(at, key, "unknown synth spec key");
  }
}

}  // namespace internal

// ---------------------------------------------------------------------------

struct SampleArgs {
  std::string mesh;
  double density = kDefaultSampleDensity;
  std::uint64_t seed = 0;
  std::string out;
  int workers = 1;
};

inline int RunSample(const SampleArgs& a, std::ostream& out) {
  if (!(a.density > 0.0)) ThrowInvalid("--density must be positive");
  const TriangleMesh mesh = ReadMesh(a.mesh);
  const AnnotatedPointCloud cloud = SampleMesh(mesh, a.density, a.seed, a.workers);
  WriteCloud(cloud, a.out);
  out << "sampled " << cloud.size() << " points from " << mesh.triangles.size()
      << " triangles -> " << a.out << "\n";
  return kExitOk;
}

struct SegmentArgs {
  std::string cloud;
  PipelineConfig config;
  int workers = 1;
  std::string out;
  std::string json;
  std::string timing;
  std::string ply_out;
};

inline int RunSegment(const SegmentArgs& a, std::ostream& out) {
  a.config.Validate();
  const AnnotatedPointCloud cloud = ReadCloud(a.cloud);
  OracleOptions oracle = a.config.oracle;
  oracle.seed = a.config.seed;
  const auto provider = MakeProvider(a.config.provider, oracle);
  const auto scorer = MakeScorer(a.config.scorer);
  SceneOptions options;
  options.segmenter = a.config.segmenter;
  options.segmenter.seed = a.config.seed;
  options.max_points = a.config.max_points;
  options.voxel_edge = a.config.voxel_edge;
  options.crop_seed = a.config.seed;
  options.workers = a.workers;
  const SceneResult scene = SegmentScene(cloud, *provider, *scorer, options);
  const SegmentationFile file = Flatten(scene, cloud.size());
  WriteSegmentation(file, a.out);
  const std::string json_path = a.json.empty() ? a.out + ".json" : a.json;
  const std::string timing_path = a.timing.empty() ? a.out + ".timing.json" : a.timing;
  internal::WriteText(json_path, ToJson(file).dump(1) + "\n");
  internal::WriteText(timing_path, TimingJson(scene).dump(1) + "\n");
  if (!a.ply_out.empty()) {
    AnnotatedPointCloud colored = cloud;
    for (std::size_t i = 0; i < colored.size(); ++i) {
      colored.colors[i] = internal::InstanceColor(file.assignment[i]);
    }
    WriteCloud(colored, a.ply_out);
  }
  out << "segmented " << cloud.size() << " points in " << scene.blocks.size() << " block(s): "
      << file.proposals.size() << " building instance(s) -> " << a.out << "\n";
  for (const BlockLog& l : scene.log) {
    out << "  block " << l.block << ": " << l.points << " points, " << l.voxels << " voxels, "
        << l.proposals << " proposals, " << std::fixed << std::setprecision(3) << l.wall_s
        << " s\n";
  }
  out.unsetf(std::ios::fixed);
  return kExitOk;
}

struct EvaluateArgs {
  std::string result;
  std::string gt;
  ApRange range = ApRange::k25To95;
  bool scene_level = false;
  std::string json;
};

inline int RunEvaluate(const EvaluateArgs& a, std::ostream& out) {
  const SegmentationFile file = ReadSegmentation(a.result);
  const AnnotatedPointCloud gt = ReadCloud(a.gt);
  const EvalReport report = EvaluateSegmentation(file, gt, a.range, !a.scene_level);
  out << RenderTable(report);
  if (!a.json.empty()) internal::WriteText(a.json, ToJson(report).dump(1) + "\n");
  return kExitOk;
}

struct StatsArgs {
  std::vector<std::string> inputs;
  std::string json;
  std::string csv;
};

inline int RunStats(const StatsArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<SceneSummary> scenes;
  for (const std::string& path : a.inputs) {
    if (path.ends_with(".json")) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(ReadFileBytes(path));
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.byte, path, e.what());
      }
      for (SceneSummary& s : SummariesFromJson(j)) scenes.push_back(std::move(s));
    } else {
      std::string name = path;
      if (const auto slash = name.find_last_of('/'); slash != std::string::npos) {
        name = name.substr(slash + 1);
      }
      if (const auto dot = name.find_last_of('.'); dot != std::string::npos && dot > 0) {
        name = name.substr(0, dot);
      }
      scenes.push_back(Summarize(ReadCloud(path), name));
    }
  }

  out << "Points per urban class\n" << std::setw(12) << "class";
  for (const auto& s : scenes) out << std::setw(14) << s.name;
  out << "\n";
  for (int c = 0; c < kNumUrbanClasses; ++c) {
    out << std::setw(12) << Name(static_cast<UrbanClass>(c));
    for (const auto& s : scenes) out << std::setw(14) << s.points[c];
    out << "\n";
  }
  out << std::setw(12) << "Total";
  for (const auto& s : scenes) out << std::setw(14) << s.total_points;
  out << "\n\nBuildings per category and height class\n" << std::setw(12) << "scene";
  for (int c = 0; c <= kNumBuildingCategories; ++c) {
    out << std::setw(6) << Name(static_cast<BuildingCategory>(c)).substr(0, 5);
  }
  out << " |" << std::setw(6) << "L" << std::setw(6) << "H" << std::setw(6) << "SH" << "\n";
  for (const auto& s : scenes) {
    out << std::setw(12) << s.name;
    for (auto v : s.buildings_by_category) out << std::setw(6) << v;
    out << " |";
    for (auto v : s.buildings_by_height) out << std::setw(6) << v;
    out << "\n";
  }
  out << "\nLong tail (descending point count)\n";
  nlohmann::json tails = nlohmann::json::object();
  for (const auto& s : scenes) {
    out << std::setw(12) << s.name << ":";
    nlohmann::json tail = nlohmann::json::array();
    for (const auto& [cls, count] : LongTail(s)) {
      out << " " << Name(cls) << "(" << count << ")";
      tail.push_back({{"class", std::string(Name(cls))}, {"points", count}});
    }
    out << "\n";
    tails[s.name] = tail;
  }

  const auto matrix = CorrelationMatrix(scenes);
  out << "\nBuilding-category correlation\n" << std::setw(12) << "";
  for (const auto& s : scenes) out << std::setw(12) << s.name;
  out << "\n";
  bool undefined = false;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    out << std::setw(12) << scenes[i].name;
    for (std::size_t j = 0; j < scenes.size(); ++j) {
      out << internal::FormatOptional(matrix[i][j], 12, 2);
      undefined |= !matrix[i][j].has_value();
    }
    out << "\n";
  }
  if (undefined) {
    for (const auto& s : scenes) {
      const auto v = CategoryVector(s);
      if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; })) {
        err << "warning: correlation undefined for scene '" << s.name
            << "': its building-category counts have zero variance\n";
      }
    }
  }

  if (!a.json.empty()) {
    nlohmann::json j;
    j["scenes"] = nlohmann::json::array();
    for (const auto& s : scenes) j["scenes"].push_back(ToJson(s));
    j["long_tail"] = tails;
    nlohmann::json names = nlohmann::json::array();
    for (const auto& s : scenes) names.push_back(s.name);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : matrix) {
      nlohmann::json r = nlohmann::json::array();
      for (const auto& v : row) r.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
      rows.push_back(r);
    }
    j["correlation"] = {{"scenes", names}, {"matrix", rows}};
    internal::WriteText(a.json, j.dump(1) + "\n");
  }
  if (!a.csv.empty()) {
    std::ostringstream summary;
    summary << "scene,total_points";
    for (int c = 0; c < kNumUrbanClasses; ++c) summary << ",points_" << Name(static_cast<UrbanClass>(c));
    for (int c = 0; c <= kNumBuildingCategories; ++c) {
      summary << ",buildings_" << Name(static_cast<BuildingCategory>(c));
    }
    for (int c = 0; c < kNumHeightClasses; ++c) summary << ",height_" << Name(static_cast<HeightClass>(c));
    summary << ",total_buildings\n";
    for (const auto& s : scenes) {
      summary << s.name << "," << s.total_points;
      for (auto v : s.points) summary << "," << v;
      for (auto v : s.buildings_by_category) summary << "," << v;
      for (auto v : s.buildings_by_height) summary << "," << v;
      summary << "," << s.total_buildings << "\n";
    }
    internal::WriteText(a.csv + "_summary.csv", summary.str());
    std::ostringstream corr;
    corr << "scene";
    for (const auto& s : scenes) corr << "," << s.name;
    corr << "\n" << std::setprecision(17);
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      corr << scenes[i].name;
      for (const auto& v : matrix[i]) {
        corr << ",";
        if (v) corr << *v;
      }
      corr << "\n";
    }
    internal::WriteText(a.csv + "_correlation.csv", corr.str());
  }
  return kExitOk;
}

struct SynthArgs {
  SynthSpec spec;
  std::string spec_file;
  std::uint64_t seed = 0;
  std::string out;
  std::string mesh_out;
  int workers = 1;
};

inline int RunSynth(const SynthArgs& a, std::ostream& out) {
  const SynthScene scene = GenerateScene(a.spec, a.seed, a.workers);
  WriteCloud(scene.cloud, a.out);
  if (!a.mesh_out.empty()) WriteMesh(scene.mesh, a.mesh_out);
  out << "synthesized " << a.spec.buildings << " building(s), " << scene.cloud.size()
      << " points -> " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"urbanseg: clustering-free building instance segmentation for urban point clouds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "urbanseg 1.0.0");

  const PipelineConfig defaults;

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "Sample an annotated point cloud from a labeled PLY mesh");
  sample_cmd->add_option("mesh", sample.mesh, "Labeled triangle mesh (PLY)")->required();
  sample_cmd->add_option("--density", sample.density, "Points per square meter")->capture_default_str();
  sample_cmd->add_option("--seed", sample.seed, "Random seed")->capture_default_str();
  sample_cmd->add_option("-o,--out", sample.out, "Output cloud (.ply or container)")->required();
  sample_cmd->add_option("--workers", sample.workers, "Sampling threads")->capture_default_str();

  SegmentArgs segment;
  segment.workers = DefaultWorkers();
  std::string config_path;
  PipelineConfig flags = defaults;
  std::string ap_range_text = ApRangeName(defaults.ap_range);
  std::string scorer_text = "geometric";
  auto* seg_cmd = app.add_subcommand("segment", "Segment building instances block by block");
  seg_cmd->add_option("cloud", segment.cloud, "Annotated cloud (.ply or container)")->required();
  seg_cmd->add_option("--config", config_path,
                      std::string("Config file (key = value); default from $") + kConfigEnvVar);
  std::vector<std::pair<std::string, std::function<void(PipelineConfig&)>>> overrides;
  auto flag = [&](const std::string& name, auto* target, const std::string& help,
                  auto apply) {
    seg_cmd->add_option(name, *target, help)->capture_default_str();
    overrides.emplace_back(name, apply);
  };
  flag("--features", &flags.provider, "Feature provider: oracle | file:PATH",
       [&](PipelineConfig& c) { c.provider = flags.provider; });
  flag("--noise-embedding", &flags.oracle.noise_embedding, "Oracle embedding noise stddev",
       [&](PipelineConfig& c) { c.oracle.noise_embedding = flags.oracle.noise_embedding; });
  flag("--noise-offset", &flags.oracle.noise_offset, "Oracle offset noise stddev (m)",
       [&](PipelineConfig& c) { c.oracle.noise_offset = flags.oracle.noise_offset; });
  flag("--noise-semantic", &flags.oracle.noise_semantic, "Oracle semantic flip probability",
       [&](PipelineConfig& c) { c.oracle.noise_semantic = flags.oracle.noise_semantic; });
  flag("--seed", &flags.seed, "Seed for cropping, oracle noise and FPS start",
       [&](PipelineConfig& c) { c.seed = flags.seed; });
  flag("--k-ratio", &flags.segmenter.k_ratio, "Foreground points per candidate",
       [&](PipelineConfig& c) { c.segmenter.k_ratio = flags.segmenter.k_ratio; });
  flag("--k-max", &flags.segmenter.k_max, "Maximum candidates per block",
       [&](PipelineConfig& c) { c.segmenter.k_max = flags.segmenter.k_max; });
  flag("--merge-radius", &flags.segmenter.merge_radius, "Anchor merge radius (m)",
       [&](PipelineConfig& c) { c.segmenter.merge_radius = flags.segmenter.merge_radius; });
  flag("--score-threshold", &flags.segmenter.score_threshold, "Minimum proposal score",
       [&](PipelineConfig& c) { c.segmenter.score_threshold = flags.segmenter.score_threshold; });
  flag("--voxel-edge", &flags.voxel_edge, "Voxel edge length (m)",
       [&](PipelineConfig& c) { c.voxel_edge = flags.voxel_edge; });
  flag("--max-points", &flags.max_points, "Maximum points per block",
       [&](PipelineConfig& c) { c.max_points = flags.max_points; });
  flag("--embedding-dim", &flags.oracle.dim, "Oracle embedding dimension",
       [&](PipelineConfig& c) { c.oracle.dim = flags.oracle.dim; });
  flag("--scorer", &scorer_text, "Proposal scorer: geometric | gt", [&](PipelineConfig& c) {
    if (scorer_text == "gt") {
      c.scorer = ScorerKind::kGroundTruth;
    } else if (scorer_text == "geometric") {
      c.scorer = ScorerKind::kGeometric;
    } else {
      ThrowInvalid("--scorer must be 'geometric' or 'gt'");
    }
  });
  seg_cmd->add_option("--workers", segment.workers, "Worker threads")->capture_default_str();
  seg_cmd->add_option("-o,--out", segment.out, "Output segmentation container")->required();
  seg_cmd->add_option("--json", segment.json, "JSON result (default: OUT.json)");
  seg_cmd->add_option("--timing", segment.timing, "Timing log (default: OUT.timing.json)");
  seg_cmd->add_option("--ply-out", segment.ply_out, "PLY colored by instance id");

  EvaluateArgs evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compute AP / AP50 / AP25 and category mIoU");
  eval_cmd->add_option("result", evaluate.result, "Segmentation container")->required();
  eval_cmd->add_option("gt", evaluate.gt, "Ground-truth annotated cloud")->required();
  eval_cmd->add_option("--ap-range", ap_range_text, "IoU range averaged into AP: 25-95 | 50-95")
      ->capture_default_str();
  eval_cmd->add_flag("--scene-level", evaluate.scene_level,
                     "Evaluate the scene as one unit instead of per block");
  eval_cmd->add_option("--json", evaluate.json, "Write the report as JSON");

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Scene statistics, long tail and correlations");
  stats_cmd->add_option("inputs", stats.inputs, "Annotated clouds or summary JSON files")
      ->required();
  stats_cmd->add_option("--json", stats.json, "Write summaries and matrix as JSON");
  stats_cmd->add_option("--csv", stats.csv, "Write PREFIX_summary.csv and PREFIX_correlation.csv");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic annotated scene");
  synth_cmd->add_option("--spec", synth.spec_file, "Spec file (key = value); flags override it");
  std::vector<std::pair<std::string, std::function<void(SynthSpec&)>>> synth_overrides;
  SynthSpec synth_flags;
  auto sflag = [&](const std::string& name, auto SynthSpec::*member, const std::string& help) {
    synth_cmd->add_option(name, synth_flags.*member, help)->capture_default_str();
    synth_overrides.emplace_back(name, [member, &synth_flags](SynthSpec& s) {
      s.*member = synth_flags.*member;
    });
  };
  sflag("--buildings", &SynthSpec::buildings, "Number of buildings");
  sflag("--footprint-min", &SynthSpec::footprint_min, "Minimum footprint side (m)");
  sflag("--footprint-max", &SynthSpec::footprint_max, "Maximum footprint side (m)");
  sflag("--height-min", &SynthSpec::height_min, "Minimum building height (m)");
  sflag("--height-max", &SynthSpec::height_max, "Maximum building height (m)");
  sflag("--spacing", &SynthSpec::spacing, "Minimum gap between buildings (m)");
  sflag("--building-density", &SynthSpec::building_density, "Building points per m^2");
  sflag("--ground-density", &SynthSpec::ground_density, "Ground points per m^2");
  sflag("--clutter-density", &SynthSpec::clutter_density, "Vegetation/vehicle points per m^2");
  sflag("--vegetation", &SynthSpec::vegetation, "Vegetation blobs (-1: one per building)");
  sflag("--vehicles", &SynthSpec::vehicles, "Vehicles (-1: one per two buildings)");
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("-o,--out", synth.out, "Output cloud (.ply or container)")->required();
  synth_cmd->add_option("--mesh-out", synth.mesh_out, "Also write the labeled mesh (PLY)");
  synth_cmd->add_option("--workers", synth.workers, "Sampling threads")->capture_default_str();

  std::vector<std::string> argv_store;
  argv_store.push_back("urbanseg");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
    }

    if (*sample_cmd) return RunSample(sample, out);
    if (*seg_cmd) {
      if (config_path.empty()) {
        if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') {
          config_path = env;
        }
      }
      segment.config = config_path.empty() ? defaults : LoadConfig(config_path);
      for (auto& [name, apply] : overrides) {
        if (seg_cmd->count(name) > 0) apply(segment.config);
      }
      return RunSegment(segment, out);
    }
    if (*eval_cmd) {
      const auto range = ParseApRange(ap_range_text);
      if (!range) ThrowInvalid("--ap-range must be 25-95 or 50-95");
      evaluate.range = *range;
      return RunEvaluate(evaluate, out);
    }
    if (*stats_cmd) return RunStats(stats, out, err);
    if (*synth_cmd) {
      if (!synth.spec_file.empty()) internal::ApplySynthSpec(ReadFileBytes(synth.spec_file), synth.spec);
      for (auto& [name, apply] : synth_overrides) {
        if (synth_cmd->count(name) > 0) apply(synth.spec);
      }
      return RunSynth(synth, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace urbanseg::cli

#endif  // URBANSEG_CLI_H_

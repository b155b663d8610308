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

// Procedural test scenes: box buildings on a ground plane with vegetation
// blobs, vehicles and an optional water strip, sampled into annotated clouds.

#ifndef URBANSEG_SYNTH_H_
#define URBANSEG_SYNTH_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "urbanseg/error.h"
#include "urbanseg/ingest.h"
#include "urbanseg/types.h"

namespace urbanseg {

struct SynthSpec {
  int buildings = 20;
  double footprint_min = 12.0;  // meters, per horizontal side
  double footprint_max = 20.0;
  double height_min = 10.0;
  double height_max = 25.0;
  // Minimum horizontal gap between neighbouring buildings. Keep it above the
  // largest building diameter if every building must receive a candidate.
  double spacing = 60.0;
  double building_density = 5.0;  // points per m^2 on roofs and walls
  double ground_density = 0.2;
  double clutter_density = 2.0;   // vegetation, vehicles, water
  int vegetation = -1;            // blobs; -1 = one per building
  int vehicles = -1;              // -1 = one per two buildings
  bool water = true;
  double unlabeled_fraction = 0.1;

  void Validate() const {
    if (buildings < 0) ThrowInvalid("building count must be non-negative");
    if (!(footprint_min > 0.0) || footprint_max < footprint_min) {
      ThrowInvalid("footprint range must satisfy 0 < min <= max");
    }
    if (!(height_min > 0.0) || height_max < height_min) {
      ThrowInvalid("height range must satisfy 0 < min <= max");
    }
    if (!(spacing > 0.0)) ThrowInvalid("spacing must be positive");
    if (!(building_density > 0.0) || !(ground_density >= 0.0) || !(clutter_density >= 0.0)) {
      ThrowInvalid("densities must be positive (building) or non-negative");
    }
    if (!(unlabeled_fraction >= 0.0 && unlabeled_fraction <= 1.0)) {
      ThrowInvalid("unlabeled_fraction must lie in [0, 1]");
    }
  }
};

struct SynthScene {
  TriangleMesh mesh;
  std::vector<double> densities;  // per triangle
  AnnotatedPointCloud cloud;
};

namespace internal {

class MeshBuilder {
 public:
  MeshBuilder(TriangleMesh& mesh, std::vector<double>& densities)
      : mesh_(mesh), densities_(densities) {}

  std::uint32_t Vertex(const Vec3& p, Rgb c) {
    mesh_.vertices.push_back(p);
    mesh_.vertex_colors.push_back(c);
    return static_cast<std::uint32_t>(mesh_.vertices.size() - 1);
  }

  void Tri(std::uint32_t a, std::uint32_t b, std::uint32_t c, UrbanClass cls,
           InstanceId id, BuildingCategory cat, double density) {
    mesh_.AddTriangle(a, b, c, cls, id, cat);
    densities_.push_back(density);
  }

  void Quad(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, Rgb color,
            UrbanClass cls, InstanceId id, BuildingCategory cat, double density) {
    const auto ia = Vertex(a, color), ib = Vertex(b, color);
    const auto ic = Vertex(c, color), id_ = Vertex(d, color);
    Tri(ia, ib, ic, cls, id, cat, density);
    Tri(ia, ic, id_, cls, id, cat, density);
  }

  // Roof and four walls of an axis-aligned box standing on z = base.
  void Box(const Vec3& lo, const Vec3& hi, Rgb color, UrbanClass cls, InstanceId id,
           BuildingCategory cat, double density) {
    const double x0 = lo.x, y0 = lo.y, z0 = lo.z, x1 = hi.x, y1 = hi.y, z1 = hi.z;
    Quad({x0, y0, z1}, {x1, y0, z1}, {x1, y1, z1}, {x0, y1, z1}, color, cls, id, cat, density);
    Quad({x0, y0, z0}, {x1, y0, z0}, {x1, y0, z1}, {x0, y0, z1}, color, cls, id, cat, density);
    Quad({x1, y0, z0}, {x1, y1, z0}, {x1, y1, z1}, {x1, y0, z1}, color, cls, id, cat, density);
    Quad({x1, y1, z0}, {x0, y1, z0}, {x0, y1, z1}, {x1, y1, z1}, color, cls, id, cat, density);
    Quad({x0, y1, z0}, {x0, y0, z0}, {x0, y0, z1}, {x0, y1, z1}, color, cls, id, cat, density);
  }

  // Octahedron blob.
  void Blob(const Vec3& c, double radius, double height, Rgb color, double density) {
    const auto top = Vertex({c.x, c.y, c.z + height}, color);
    const auto bottom = Vertex({c.x, c.y, c.z}, color);
    const double zm = c.z + 0.5 * height;
    const std::uint32_t ring[4] = {Vertex({c.x + radius, c.y, zm}, color),
                                   Vertex({c.x, c.y + radius, zm}, color),
                                   Vertex({c.x - radius, c.y, zm}, color),
                                   Vertex({c.x, c.y - radius, zm}, color)};
    for (int k = 0; k < 4; ++k) {
      const auto a = ring[k], b = ring[(k + 1) % 4];
      Tri(a, b, top, UrbanClass::kVegetation, kNoInstance, BuildingCategory::kUnlabeled, density);
      Tri(b, a, bottom, UrbanClass::kVegetation, kNoInstance, BuildingCategory::kUnlabeled,
          density);
    }
  }

 private:
  TriangleMesh& mesh_;
  std::vector<double>& densities_;
};

inline double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * UnitDouble(rng);
}

}  // namespace internal

// Buildings sit on a square grid whose cells are footprint_max + spacing wide,
// so neighbouring footprints are at least `spacing` apart. Building instance
// ids are 1..buildings in grid order.
inline SynthScene GenerateScene(const SynthSpec& spec, std::uint64_t seed, int workers = 1) {
  spec.Validate();
  SynthScene scene;
  internal::MeshBuilder mb(scene.mesh, scene.densities);
  std::mt19937_64 rng = StreamRng(seed, 0x5c3e);

  const int n = spec.buildings;
  const int cols = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))));
  const int rows = std::max(1, (n + cols - 1) / cols);
  const double cell = spec.footprint_max + spec.spacing;
  const double width = cols * cell;
  const double depth = rows * cell;

  const Rgb ground_color{110, 110, 105};
  mb.Quad({0, 0, 0}, {width, 0, 0}, {width, depth, 0}, {0, depth, 0}, ground_color,
          UrbanClass::kGround, kNoInstance, BuildingCategory::kUnlabeled, spec.ground_density);

  for (int b = 0; b < n; ++b) {
    const double ox = (b % cols) * cell + 0.5 * spec.spacing;
    const double oy = (b / cols) * cell + 0.5 * spec.spacing;
    const double fx = internal::Uniform(rng, spec.footprint_min, spec.footprint_max);
    const double fy = internal::Uniform(rng, spec.footprint_min, spec.footprint_max);
    const double h = internal::Uniform(rng, spec.height_min, spec.height_max);
    const double x0 = ox + internal::Uniform(rng, 0.0, spec.footprint_max - fx);
    const double y0 = oy + internal::Uniform(rng, 0.0, spec.footprint_max - fy);
    BuildingCategory cat = BuildingCategory::kUnlabeled;
    if (internal::UnitDouble(rng) >= spec.unlabeled_fraction) {
      cat = static_cast<BuildingCategory>(rng() % kNumBuildingCategories);
    }
    const auto shade = static_cast<std::uint8_t>(150 + rng() % 100);
    mb.Box({x0, y0, 0.0}, {x0 + fx, y0 + fy, h}, {shade, shade, static_cast<std::uint8_t>(shade - 20)},
           UrbanClass::kBuilding, static_cast<InstanceId>(b + 1), cat, spec.building_density);
  }

  // Clutter lives in the street corridors, clear of every footprint.
  const auto corridor_point = [&]() {
    const int cx = static_cast<int>(rng() % static_cast<std::uint64_t>(cols));
    const int cy = static_cast<int>(rng() % static_cast<std::uint64_t>(rows));
    const double margin = 0.25 * spec.spacing;
    return Vec3{cx * cell + internal::Uniform(rng, 0.0, 0.5 * spec.spacing - margin) + 0.5 * margin,
                cy * cell + internal::Uniform(rng, 0.0, depth > 0 ? cell : 1.0), 0.0};
  };
  const int vegetation = spec.vegetation < 0 ? n : spec.vegetation;
  for (int v = 0; v < vegetation; ++v) {
    const Vec3 c = corridor_point();
    const double r = internal::Uniform(rng, 1.5, 3.5);
    mb.Blob(c, r, internal::Uniform(rng, 3.0, 8.0), {60, 120, 50}, spec.clutter_density);
  }
  const int vehicles = spec.vehicles < 0 ? n / 2 : spec.vehicles;
  for (int v = 0; v < vehicles; ++v) {
    const Vec3 c = corridor_point();
    mb.Box(c, c + Vec3{1.8, 4.5, 1.5}, {200, 40, 40}, UrbanClass::kVehicle, kNoInstance,
           BuildingCategory::kUnlabeled, spec.clutter_density);
  }
  if (spec.water) {
    mb.Quad({0, -30, -0.5}, {width, -30, -0.5}, {width, -5, -0.5}, {0, -5, -0.5},
            {40, 80, 160}, UrbanClass::kWater, kNoInstance, BuildingCategory::kUnlabeled,
            spec.clutter_density * 0.25);
  }

  scene.cloud = SampleMeshWeighted(scene.mesh, scene.densities, seed, workers);
  return scene;
}

}  // namespace urbanseg

#endif  // URBANSEG_SYNTH_H_

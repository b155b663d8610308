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

// Annotated point-cloud I/O (binary container and extended PLY) and
// area-weighted surface sampling of labeled triangle meshes.

#ifndef URBANSEG_INGEST_H_
#define URBANSEG_INGEST_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "urbanseg/container.h"
#include "urbanseg/error.h"
#include "urbanseg/ply.h"
#include "urbanseg/types.h"

namespace urbanseg {

inline constexpr double kDefaultSampleDensity = 80.0;  // points per m^2
inline constexpr Rgb kDefaultGray{128, 128, 128};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Rgb> vertex_colors;  // empty, or one per vertex
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<UrbanClass> semantic;
  std::vector<InstanceId> instance;
  std::vector<BuildingCategory> category;

  void AddTriangle(std::uint32_t a, std::uint32_t b, std::uint32_t c,
                   UrbanClass cls, InstanceId id, BuildingCategory cat) {
    triangles.push_back({a, b, c});
    semantic.push_back(cls);
    instance.push_back(id);
    category.push_back(cat);
  }

  double TriangleArea(std::size_t t) const {
    const auto& tri = triangles[t];
    const Vec3& a = vertices[tri[0]];
    return 0.5 * Norm(Cross(vertices[tri[1]] - a, vertices[tri[2]] - a));
  }

  void Validate() const {
    const std::size_t nt = triangles.size();
    if (semantic.size() != nt || instance.size() != nt || category.size() != nt) {
      ThrowInvalid("mesh triangle label channels have mismatched lengths");
    }
    if (!vertex_colors.empty() && vertex_colors.size() != vertices.size()) {
      ThrowInvalid("mesh vertex colors must be absent or one per vertex");
    }
    for (std::size_t v = 0; v < vertices.size(); ++v) {
      if (!IsFinite(vertices[v])) {
        ThrowInvalid("non-finite mesh vertex " + std::to_string(v));
      }
    }
    for (std::size_t t = 0; t < nt; ++t) {
      for (std::uint32_t idx : triangles[t]) {
        if (idx >= vertices.size()) {
          ThrowInvalid("triangle " + std::to_string(t) +
                       " references missing vertex " + std::to_string(idx));
        }
      }
      if (ToCode(semantic[t]) >= kNumUrbanClasses ||
          ToCode(category[t]) > kNumBuildingCategories) {
        ThrowInvalid("triangle " + std::to_string(t) + " has an unknown label code");
      }
      if ((semantic[t] == UrbanClass::kBuilding) != (instance[t] != kNoInstance)) {
        ThrowInvalid("triangle " + std::to_string(t) +
                     ": instance id must be set exactly on building triangles");
      }
    }
  }
};

namespace internal {

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform double in [0, 1) from the top 53 bits; portable across standard
// library implementations, unlike std::uniform_real_distribution.
inline double UnitDouble(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint8_t BlendChannel(double w0, double w1, double w2, int c0,
                                 int c1, int c2) {
  const double v = w0 * c0 + w1 * c1 + w2 * c2;
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace internal

// Derives the RNG stream for one unit of work (triangle, block, ...).
inline std::mt19937_64 StreamRng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(
      internal::SplitMix64(internal::SplitMix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL)));
}

// Per-triangle sample counts: floor(density * area) plus one extra sample
// for the triangles with the largest fractional remainders, so the total is
// exactly round(density * total_area).
inline std::vector<std::uint64_t> AllocateSamples(const TriangleMesh& mesh,
                                                  std::span<const double> densities) {
  const std::size_t nt = mesh.triangles.size();
  if (densities.size() != nt) ThrowInvalid("one density per triangle required");
  std::vector<std::uint64_t> counts(nt, 0);
  std::vector<double> remainder(nt, 0.0);
  double expected_total = 0.0;
  std::uint64_t floor_total = 0;
  for (std::size_t t = 0; t < nt; ++t) {
    const double expected = densities[t] * mesh.TriangleArea(t);
    expected_total += expected;
    const double whole = std::floor(expected);
    counts[t] = static_cast<std::uint64_t>(whole);
    remainder[t] = expected - whole;
    floor_total += counts[t];
  }
  const auto total = static_cast<std::uint64_t>(std::llround(expected_total));
  if (total <= floor_total) return counts;
  std::vector<std::uint32_t> order;
  order.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    if (remainder[t] > 0.0) order.push_back(static_cast<std::uint32_t>(t));
  }
  const std::uint64_t extra = std::min<std::uint64_t>(total - floor_total, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(extra),
                    order.end(), [&](std::uint32_t a, std::uint32_t b) {
                      if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
                      return a < b;
                    });
  for (std::uint64_t k = 0; k < extra; ++k) ++counts[order[k]];
  return counts;
}

// Samples points uniformly on each triangle at that triangle's density
// (points per square meter). Points are ordered by triangle, then by sample;
// each triangle draws from its own seeded stream, so the output does not
// depend on `workers`.
inline AnnotatedPointCloud SampleMeshWeighted(const TriangleMesh& mesh,
                                              std::span<const double> densities,
                                              std::uint64_t seed, int workers = 1) {
  for (double d : densities) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
      ThrowInvalid("sampling densities must be finite and non-negative");
    }
  }
  mesh.Validate();
  const std::vector<std::uint64_t> counts = AllocateSamples(mesh, densities);
  const std::size_t nt = mesh.triangles.size();
  std::vector<std::uint64_t> start(nt + 1, 0);
  for (std::size_t t = 0; t < nt; ++t) start[t + 1] = start[t] + counts[t];
  const std::uint64_t n = start[nt];

  AnnotatedPointCloud cloud;
  cloud.positions.resize(n);
  cloud.colors.resize(n);
  cloud.semantic.resize(n);
  cloud.instance.resize(n);
  cloud.category.resize(n);
  const bool has_colors = !mesh.vertex_colors.empty();

  auto sample_range = [&](std::size_t t_begin, std::size_t t_end) {
    for (std::size_t t = t_begin; t < t_end; ++t) {
      if (counts[t] == 0) continue;
      std::mt19937_64 rng = StreamRng(seed, t);
      const auto& tri = mesh.triangles[t];
      const Vec3& a = mesh.vertices[tri[0]];
      const Vec3 ab = mesh.vertices[tri[1]] - a;
      const Vec3 ac = mesh.vertices[tri[2]] - a;
      for (std::uint64_t s = 0; s < counts[t]; ++s) {
        double u = internal::UnitDouble(rng);
        double v = internal::UnitDouble(rng);
        if (u + v > 1.0) {
          u = 1.0 - u;
          v = 1.0 - v;
        }
        const std::uint64_t i = start[t] + s;
        cloud.positions[i] = a + u * ab + v * ac;
        if (has_colors) {
          const Rgb& c0 = mesh.vertex_colors[tri[0]];
          const Rgb& c1 = mesh.vertex_colors[tri[1]];
          const Rgb& c2 = mesh.vertex_colors[tri[2]];
          const double w0 = 1.0 - u - v;
          cloud.colors[i] = {internal::BlendChannel(w0, u, v, c0.r, c1.r, c2.r),
                             internal::BlendChannel(w0, u, v, c0.g, c1.g, c2.g),
                             internal::BlendChannel(w0, u, v, c0.b, c1.b, c2.b)};
        } else {
          cloud.colors[i] = kDefaultGray;
        }
        cloud.semantic[i] = mesh.semantic[t];
        cloud.instance[i] = mesh.instance[t];
        cloud.category[i] = mesh.category[t];
      }
    }
  };

  workers = std::max(1, workers);
  if (workers == 1 || nt < 2) {
    sample_range(0, nt);
  } else {
    std::vector<std::thread> threads;
    const std::size_t chunk = (nt + workers - 1) / workers;
    for (std::size_t begin = 0; begin < nt; begin += chunk) {
      threads.emplace_back(sample_range, begin, std::min(nt, begin + chunk));
    }
    for (auto& th : threads) th.join();
  }
  return cloud;
}

inline AnnotatedPointCloud SampleMesh(const TriangleMesh& mesh, double density,
                                      std::uint64_t seed, int workers = 1) {
  if (!(density > 0.0) || !std::isfinite(density)) {
    ThrowInvalid("sampling density must be a positive number");
  }
  const std::vector<double> densities(mesh.triangles.size(), density);
  return SampleMeshWeighted(mesh, densities, seed, workers);
}

// ---------------------------------------------------------------------------
// Binary container form.

inline Container CloudToContainer(const AnnotatedPointCloud& cloud) {
  const std::uint64_t n = cloud.size();
  Container c(ContainerKind::kCloud, n);
  std::vector<double> xyz(3 * n);
  std::vector<std::uint8_t> rgb(3 * n), sem(n), cat(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    xyz[i] = cloud.positions[i].x;
    xyz[n + i] = cloud.positions[i].y;
    xyz[2 * n + i] = cloud.positions[i].z;
    rgb[i] = cloud.colors[i].r;
    rgb[n + i] = cloud.colors[i].g;
    rgb[2 * n + i] = cloud.colors[i].b;
    sem[i] = static_cast<std::uint8_t>(cloud.semantic[i]);
    cat[i] = static_cast<std::uint8_t>(cloud.category[i]);
  }
  c.Add<double>("XYZ ", 3, n, xyz);
  c.Add<std::uint8_t>("RGB ", 3, n, rgb);
  c.Add<std::uint8_t>("SEM ", 1, n, sem);
  c.Add<std::uint32_t>("INST", 1, n, cloud.instance);
  c.Add<std::uint8_t>("CAT ", 1, n, cat);
  return c;
}

inline AnnotatedPointCloud CloudFromContainer(const Container& c) {
  const std::uint64_t n = c.point_count();
  const auto xyz = c.Get<double>("XYZ ", 3, n);
  const auto rgb = c.Get<std::uint8_t>("RGB ", 3, n);
  const auto sem = c.Get<std::uint8_t>("SEM ", 1, n);
  const auto inst = c.Get<std::uint32_t>("INST", 1, n);
  const auto cat = c.Get<std::uint8_t>("CAT ", 1, n);
  const auto data_offset = [&](std::string_view tag, std::uint64_t i,
                               std::size_t size) {
    return c.Find(tag)->file_offset + kChannelHeaderSize + i * size;
  };
  AnnotatedPointCloud cloud;
  cloud.Reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const Vec3 p{xyz[i], xyz[n + i], xyz[2 * n + i]};
    if (!IsFinite(p)) {
      throw ParseError(data_offset("XYZ ", i, 8), "XYZ ", "non-finite coordinate");
    }
    const auto cls = UrbanClassFromCode(sem[i]);
    if (!cls) {
      throw ParseError(data_offset("SEM ", i, 1), "SEM ",
                       "unknown urban class code " + std::to_string(sem[i]));
    }
    const auto category = BuildingCategoryFromCode(cat[i]);
    if (!category) {
      throw ParseError(data_offset("CAT ", i, 1), "CAT ",
                       "unknown building category code " + std::to_string(cat[i]));
    }
    if ((*cls == UrbanClass::kBuilding) != (inst[i] != kNoInstance)) {
      throw ParseError(data_offset("INST", i, 4), "INST",
                       "instance id must be set exactly on building points");
    }
    cloud.Append(p, {rgb[i], rgb[n + i], rgb[2 * n + i]}, *cls, inst[i], *category);
  }
  return cloud;
}

// ---------------------------------------------------------------------------
// Extended PLY form: x y z (double), red green blue (uchar), semantic
// (uchar), instance (uint, 4294967295 = none), category (uchar).

inline std::string CloudToPly(const AnnotatedPointCloud& cloud) {
  std::string header =
      "ply\nformat binary_little_endian 1.0\ncomment urbanseg annotated cloud\n"
      "element vertex " +
      std::to_string(cloud.size()) +
      "\nproperty double x\nproperty double y\nproperty double z\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      "property uchar semantic\nproperty uint instance\nproperty uchar category\n"
      "end_header\n";
  ply::BinaryWriter w(std::move(header));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    w.Put(cloud.positions[i].x);
    w.Put(cloud.positions[i].y);
    w.Put(cloud.positions[i].z);
    w.Put(cloud.colors[i].r);
    w.Put(cloud.colors[i].g);
    w.Put(cloud.colors[i].b);
    w.Put(static_cast<std::uint8_t>(cloud.semantic[i]));
    w.Put(cloud.instance[i]);
    w.Put(static_cast<std::uint8_t>(cloud.category[i]));
  }
  return w.Take();
}

namespace internal {

inline const ply::Property& RequireProperty(const ply::File& file,
                                            const ply::Element& element,
                                            std::string_view name) {
  const ply::Property* p = element.Find(name);
  if (p == nullptr) {
    throw ParseError(file.header_size, element.name + "." + std::string(name),
                     "missing required property '" + std::string(name) + "'");
  }
  return *p;
}

inline const ply::Element& RequireElement(const ply::File& file,
                                          std::string_view name) {
  const ply::Element* e = file.Find(name);
  if (e == nullptr) {
    throw ParseError(file.header_size, std::string(name),
                     "missing required element '" + std::string(name) + "'");
  }
  return *e;
}

// Validates an integral label value and returns it.
inline std::int64_t LabelValue(const ply::Element& e, const ply::Property& p,
                               std::uint64_t row, std::int64_t max_code) {
  const double v = p.values[row];
  if (v != std::floor(v) || v < 0 || v > static_cast<double>(max_code)) {
    throw ParseError(e.row_offsets[row], e.name + "." + p.name,
                     "invalid code " + std::to_string(v) + " in row " +
                         std::to_string(row));
  }
  return static_cast<std::int64_t>(v);
}

inline InstanceId InstanceValue(const ply::Element& e, const ply::Property& p,
                                std::uint64_t row) {
  const double v = p.values[row];
  if (v == -1.0) return kNoInstance;
  if (v != std::floor(v) || v < 0 || v > static_cast<double>(kNoInstance)) {
    throw ParseError(e.row_offsets[row], e.name + "." + p.name,
                     "invalid instance id in row " + std::to_string(row));
  }
  return static_cast<InstanceId>(v);
}

}  // namespace internal

inline AnnotatedPointCloud CloudFromPly(std::string_view bytes) {
  const ply::File file = ply::Parse(bytes);
  const ply::Element& v = internal::RequireElement(file, "vertex");
  const auto& px = internal::RequireProperty(file, v, "x");
  const auto& py = internal::RequireProperty(file, v, "y");
  const auto& pz = internal::RequireProperty(file, v, "z");
  const auto& psem = internal::RequireProperty(file, v, "semantic");
  const auto& pinst = internal::RequireProperty(file, v, "instance");
  const auto& pcat = internal::RequireProperty(file, v, "category");
  const ply::Property* pr = v.Find("red");
  const ply::Property* pg = v.Find("green");
  const ply::Property* pb = v.Find("blue");
  const bool has_rgb = pr && pg && pb;

  AnnotatedPointCloud cloud;
  cloud.Reserve(v.count);
  for (std::uint64_t i = 0; i < v.count; ++i) {
    const Vec3 p{px.values[i], py.values[i], pz.values[i]};
    if (!IsFinite(p)) {
      throw ParseError(v.row_offsets[i], "vertex.x", "non-finite coordinate");
    }
    const auto cls = static_cast<UrbanClass>(
        internal::LabelValue(v, psem, i, kNumUrbanClasses - 1));
    const auto cat = static_cast<BuildingCategory>(
        internal::LabelValue(v, pcat, i, kNumBuildingCategories));
    const InstanceId id = internal::InstanceValue(v, pinst, i);
    if ((cls == UrbanClass::kBuilding) != (id != kNoInstance)) {
      throw ParseError(v.row_offsets[i], "vertex.instance",
                       "instance id must be set exactly on building points");
    }
    Rgb rgb = kDefaultGray;
    if (has_rgb) {
      rgb = {static_cast<std::uint8_t>(internal::LabelValue(v, *pr, i, 255)),
             static_cast<std::uint8_t>(internal::LabelValue(v, *pg, i, 255)),
             static_cast<std::uint8_t>(internal::LabelValue(v, *pb, i, 255))};
    }
    cloud.Append(p, rgb, cls, id, cat);
  }
  return cloud;
}

inline bool HasPlyExtension(std::string_view path) {
  return path.size() >= 4 && (path.ends_with(".ply") || path.ends_with(".PLY"));
}

// Format is chosen by extension: *.ply is PLY, anything else the container.
inline AnnotatedPointCloud ReadCloud(const std::string& path) {
  const std::string bytes = ReadFileBytes(path);
  if (HasPlyExtension(path)) return CloudFromPly(bytes);
  Container c = Container::Parse(bytes);
  if (c.kind() != ContainerKind::kCloud) {
    throw ParseError(6, "kind", "'" + path + "' is not a point-cloud container");
  }
  return CloudFromContainer(c);
}

inline void WriteCloud(const AnnotatedPointCloud& cloud, const std::string& path) {
  cloud.Validate();
  if (HasPlyExtension(path)) {
    WriteFileBytes(path, CloudToPly(cloud));
  } else {
    WriteFileBytes(path, CloudToContainer(cloud).Serialize());
  }
}

// ---------------------------------------------------------------------------
// Labeled meshes (PLY only). Faces carry semantic, instance and category.

inline std::string MeshToPly(const TriangleMesh& mesh) {
  const bool has_rgb = !mesh.vertex_colors.empty();
  std::string header =
      "ply\nformat binary_little_endian 1.0\ncomment urbanseg labeled mesh\n"
      "element vertex " +
      std::to_string(mesh.vertices.size()) +
      "\nproperty double x\nproperty double y\nproperty double z\n";
  if (has_rgb) header += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  header += "element face " + std::to_string(mesh.triangles.size()) +
            "\nproperty list uchar uint vertex_indices\nproperty uchar semantic\n"
            "property uint instance\nproperty uchar category\nend_header\n";
  ply::BinaryWriter w(std::move(header));
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    w.Put(mesh.vertices[v].x);
    w.Put(mesh.vertices[v].y);
    w.Put(mesh.vertices[v].z);
    if (has_rgb) {
      w.Put(mesh.vertex_colors[v].r);
      w.Put(mesh.vertex_colors[v].g);
      w.Put(mesh.vertex_colors[v].b);
    }
  }
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    w.Put(std::uint8_t{3});
    for (std::uint32_t idx : mesh.triangles[t]) w.Put(idx);
    w.Put(static_cast<std::uint8_t>(mesh.semantic[t]));
    w.Put(mesh.instance[t]);
    w.Put(static_cast<std::uint8_t>(mesh.category[t]));
  }
  return w.Take();
}

inline TriangleMesh MeshFromPly(std::string_view bytes) {
  const ply::File file = ply::Parse(bytes);
  const ply::Element& v = internal::RequireElement(file, "vertex");
  const ply::Element& f = internal::RequireElement(file, "face");
  const auto& px = internal::RequireProperty(file, v, "x");
  const auto& py = internal::RequireProperty(file, v, "y");
  const auto& pz = internal::RequireProperty(file, v, "z");
  const ply::Property* pr = v.Find("red");
  const ply::Property* pg = v.Find("green");
  const ply::Property* pb = v.Find("blue");
  const ply::Property* pidx = f.Find("vertex_indices");
  if (pidx == nullptr) pidx = f.Find("vertex_index");
  if (pidx == nullptr || !pidx->is_list) {
    throw ParseError(file.header_size, "face.vertex_indices",
                     "missing required list property 'vertex_indices'");
  }
  const auto& psem = internal::RequireProperty(file, f, "semantic");
  const auto& pinst = internal::RequireProperty(file, f, "instance");
  const auto& pcat = internal::RequireProperty(file, f, "category");

  TriangleMesh mesh;
  mesh.vertices.reserve(v.count);
  for (std::uint64_t i = 0; i < v.count; ++i) {
    const Vec3 p{px.values[i], py.values[i], pz.values[i]};
    if (!IsFinite(p)) {
      throw ParseError(v.row_offsets[i], "vertex.x", "non-finite vertex");
    }
    mesh.vertices.push_back(p);
  }
  if (pr && pg && pb) {
    mesh.vertex_colors.reserve(v.count);
    for (std::uint64_t i = 0; i < v.count; ++i) {
      mesh.vertex_colors.push_back(
          {static_cast<std::uint8_t>(internal::LabelValue(v, *pr, i, 255)),
           static_cast<std::uint8_t>(internal::LabelValue(v, *pg, i, 255)),
           static_cast<std::uint8_t>(internal::LabelValue(v, *pb, i, 255))});
    }
  }
  for (std::uint64_t t = 0; t < f.count; ++t) {
    const std::uint64_t begin = pidx->list_offsets[t];
    if (pidx->list_offsets[t + 1] - begin != 3) {
      throw ParseError(f.row_offsets[t], "face.vertex_indices",
                       "only triangular faces are supported");
    }
    std::array<std::uint32_t, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      const double idx = pidx->values[begin + k];
      if (idx < 0 || idx != std::floor(idx) ||
          idx >= static_cast<double>(mesh.vertices.size())) {
        throw ParseError(f.row_offsets[t], "face.vertex_indices",
                         "vertex index out of range in face " + std::to_string(t));
      }
      tri[k] = static_cast<std::uint32_t>(idx);
    }
    const auto cls = static_cast<UrbanClass>(
        internal::LabelValue(f, psem, t, kNumUrbanClasses - 1));
    const auto cat = static_cast<BuildingCategory>(
        internal::LabelValue(f, pcat, t, kNumBuildingCategories));
    const InstanceId id = internal::InstanceValue(f, pinst, t);
    if ((cls == UrbanClass::kBuilding) != (id != kNoInstance)) {
      throw ParseError(f.row_offsets[t], "face.instance",
                       "instance id must be set exactly on building faces");
    }
    mesh.AddTriangle(tri[0], tri[1], tri[2], cls, id, cat);
  }
  return mesh;
}

inline TriangleMesh ReadMesh(const std::string& path) {
  return MeshFromPly(ReadFileBytes(path));
}

inline void WriteMesh(const TriangleMesh& mesh, const std::string& path) {
  mesh.Validate();
  WriteFileBytes(path, MeshToPly(mesh));
}

}  // namespace urbanseg

#endif  // URBANSEG_INGEST_H_

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

// Versioned little-endian binary container with column-major channel blocks.
// Layout is documented in FORMAT.md.

#ifndef URBANSEG_CONTAINER_H_
#define URBANSEG_CONTAINER_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "urbanseg/error.h"

namespace urbanseg {

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

inline constexpr char kContainerMagic[4] = {'U', 'S', 'E', 'G'};
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderSize = 24;
inline constexpr std::size_t kChannelHeaderSize = 24;

enum class ContainerKind : std::uint16_t {
  kCloud = 1,
  kFeatures = 2,
  kSegmentation = 3,
  kBlocks = 4,
};

enum class ScalarType : std::uint8_t {
  kU8 = 1,
  kU32 = 2,
  kI32 = 3,
  kU64 = 4,
  kF64 = 5,
};

inline std::size_t ScalarSize(ScalarType t) {
  switch (t) {
    case ScalarType::kU8:
      return 1;
    case ScalarType::kU32:
    case ScalarType::kI32:
      return 4;
    case ScalarType::kU64:
    case ScalarType::kF64:
      return 8;
  }
  return 0;
}

template <typename T>
constexpr ScalarType ScalarTypeOf() {
  if constexpr (std::is_same_v<T, std::uint8_t>) return ScalarType::kU8;
  if constexpr (std::is_same_v<T, std::uint32_t>) return ScalarType::kU32;
  if constexpr (std::is_same_v<T, std::int32_t>) return ScalarType::kI32;
  if constexpr (std::is_same_v<T, std::uint64_t>) return ScalarType::kU64;
  if constexpr (std::is_same_v<T, double>) return ScalarType::kF64;
}

struct Channel {
  std::string tag;  // exactly four ASCII characters
  ScalarType type = ScalarType::kU8;
  std::uint32_t components = 1;
  std::uint64_t rows = 0;
  std::vector<std::byte> data;  // column-major: component-by-component
  std::uint64_t file_offset = 0;  // set when parsed; offset of the header
};

class Container {
 public:
  Container() = default;
  Container(ContainerKind kind, std::uint64_t point_count)
      : kind_(kind), point_count_(point_count) {}

  ContainerKind kind() const { return kind_; }
  std::uint64_t point_count() const { return point_count_; }
  const std::vector<Channel>& channels() const { return channels_; }

  // `column_major` holds components * rows values, component-by-component.
  template <typename T>
  void Add(std::string_view tag, std::uint32_t components, std::uint64_t rows,
           std::span<const T> column_major) {
    if (tag.size() != 4) ThrowInvalid("channel tag must have four characters");
    if (column_major.size() != components * rows) {
      ThrowInvalid("channel '" + std::string(tag) + "' has wrong element count");
    }
    Channel ch;
    ch.tag = std::string(tag);
    ch.type = ScalarTypeOf<T>();
    ch.components = components;
    ch.rows = rows;
    ch.data.resize(column_major.size_bytes());
    if (!column_major.empty()) {
      std::memcpy(ch.data.data(), column_major.data(), ch.data.size());
    }
    channels_.push_back(std::move(ch));
  }

  const Channel* Find(std::string_view tag) const {
    for (const Channel& ch : channels_) {
      if (ch.tag == tag) return &ch;
    }
    return nullptr;
  }

  bool Has(std::string_view tag) const { return Find(tag) != nullptr; }

  // Returns the channel's column-major values after checking its type and
  // shape. `components == 0` accepts any component count.
  template <typename T>
  std::vector<T> Get(std::string_view tag, std::uint32_t components,
                     std::uint64_t rows) const {
    const Channel* ch = Find(tag);
    if (ch == nullptr) {
      throw ParseError(kContainerHeaderSize, std::string(tag),
                       "required channel is missing");
    }
    if (ch->type != ScalarTypeOf<T>()) {
      throw ParseError(ch->file_offset + 4, ch->tag, "unexpected scalar type");
    }
    if (components != 0 && ch->components != components) {
      throw ParseError(ch->file_offset + 8, ch->tag,
                       "expected " + std::to_string(components) +
                           " components, found " +
                           std::to_string(ch->components));
    }
    if (ch->rows != rows) {
      throw ParseError(ch->file_offset + 12, ch->tag,
                       "expected " + std::to_string(rows) + " rows, found " +
                           std::to_string(ch->rows));
    }
    std::vector<T> out(ch->data.size() / sizeof(T));
    if (!out.empty()) std::memcpy(out.data(), ch->data.data(), ch->data.size());
    return out;
  }

  std::string Serialize() const {
    std::string out;
    out.append(kContainerMagic, 4);
    AppendPod(out, kContainerVersion);
    AppendPod(out, static_cast<std::uint16_t>(kind_));
    AppendPod(out, point_count_);
    AppendPod(out, static_cast<std::uint32_t>(channels_.size()));
    AppendPod(out, std::uint32_t{0});
    for (const Channel& ch : channels_) {
      out.append(ch.tag);
      AppendPod(out, static_cast<std::uint8_t>(ch.type));
      out.append(3, '\0');
      AppendPod(out, ch.components);
      AppendPod(out, ch.rows);
      AppendPod(out, std::uint32_t{0});
      out.append(reinterpret_cast<const char*>(ch.data.data()), ch.data.size());
    }
    return out;
  }

  static Container Parse(std::string_view bytes) {
    if (bytes.size() < kContainerHeaderSize) {
      throw ParseError(bytes.size(), "header", "file shorter than header");
    }
    if (std::memcmp(bytes.data(), kContainerMagic, 4) != 0) {
      throw ParseError(0, "magic", "not a urbanseg container");
    }
    const auto version = ReadPod<std::uint16_t>(bytes, 4);
    if (version != kContainerVersion) {
      throw ParseError(4, "version",
                       "unsupported version " + std::to_string(version));
    }
    const auto kind = ReadPod<std::uint16_t>(bytes, 6);
    if (kind < 1 || kind > 4) {
      throw ParseError(6, "kind", "unknown container kind " + std::to_string(kind));
    }
    Container c(static_cast<ContainerKind>(kind), ReadPod<std::uint64_t>(bytes, 8));
    const auto count = ReadPod<std::uint32_t>(bytes, 16);
    std::uint64_t offset = kContainerHeaderSize;
    for (std::uint32_t i = 0; i < count; ++i) {
      if (bytes.size() - offset < kChannelHeaderSize) {
        throw ParseError(offset, "channel header", "truncated channel header");
      }
      Channel ch;
      ch.file_offset = offset;
      ch.tag = std::string(bytes.substr(offset, 4));
      const auto type = ReadPod<std::uint8_t>(bytes, offset + 4);
      if (type < 1 || type > 5) {
        throw ParseError(offset + 4, ch.tag,
                         "unknown scalar type " + std::to_string(type));
      }
      ch.type = static_cast<ScalarType>(type);
      ch.components = ReadPod<std::uint32_t>(bytes, offset + 8);
      ch.rows = ReadPod<std::uint64_t>(bytes, offset + 12);
      offset += kChannelHeaderSize;
      const std::uint64_t elements = ch.rows * ch.components;
      if (ch.components != 0 && elements / ch.components != ch.rows) {
        throw ParseError(offset - 12, ch.tag, "channel size overflows");
      }
      const std::uint64_t size = elements * ScalarSize(ch.type);
      if (size / ScalarSize(ch.type) != elements ||
          bytes.size() - offset < size) {
        throw ParseError(offset, ch.tag, "channel data truncated");
      }
      ch.data.resize(size);
      if (size > 0) std::memcpy(ch.data.data(), bytes.data() + offset, size);
      offset += size;
      c.channels_.push_back(std::move(ch));
    }
    if (offset != bytes.size()) {
      throw ParseError(offset, "trailer", "unexpected bytes after last channel");
    }
    return c;
  }

 private:
  template <typename T>
  static void AppendPod(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
  }

  template <typename T>
  static T ReadPod(std::string_view bytes, std::uint64_t offset) {
    T value;
    std::memcpy(&value, bytes.data() + offset, sizeof(T));
    return value;
  }

  ContainerKind kind_ = ContainerKind::kCloud;
  std::uint64_t point_count_ = 0;
  std::vector<Channel> channels_;
};

inline std::string ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "failed reading '" + path + "'");
  return bytes;
}

inline void WriteFileBytes(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path + "'");
}

inline Container ReadContainer(const std::string& path, ContainerKind expected) {
  Container c = Container::Parse(ReadFileBytes(path));
  if (c.kind() != expected) {
    throw ParseError(6, "kind",
                     "'" + path + "' holds container kind " +
                         std::to_string(static_cast<int>(c.kind())) +
                         ", expected " +
                         std::to_string(static_cast<int>(expected)));
  }
  return c;
}

}  // namespace urbanseg

#endif  // URBANSEG_CONTAINER_H_

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

// Minimal PLY reader/writer: ascii and binary_little_endian, scalar and list
// properties. Values are widened to double on read.

#ifndef URBANSEG_PLY_H_
#define URBANSEG_PLY_H_

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "urbanseg/error.h"

namespace urbanseg::ply {

enum class Type { kChar, kUChar, kShort, kUShort, kInt, kUInt, kFloat, kDouble };

inline std::optional<Type> TypeFromName(std::string_view name) {
  if (name == "char" || name == "int8") return Type::kChar;
  if (name == "uchar" || name == "uint8") return Type::kUChar;
  if (name == "short" || name == "int16") return Type::kShort;
  if (name == "ushort" || name == "uint16") return Type::kUShort;
  if (name == "int" || name == "int32") return Type::kInt;
  if (name == "uint" || name == "uint32") return Type::kUInt;
  if (name == "float" || name == "float32") return Type::kFloat;
  if (name == "double" || name == "float64") return Type::kDouble;
  return std::nullopt;
}

inline std::size_t TypeSize(Type t) {
  switch (t) {
    case Type::kChar:
    case Type::kUChar:
      return 1;
    case Type::kShort:
    case Type::kUShort:
      return 2;
    case Type::kInt:
    case Type::kUInt:
    case Type::kFloat:
      return 4;
    case Type::kDouble:
      return 8;
  }
  return 0;
}

inline bool IsIntegral(Type t) { return t != Type::kFloat && t != Type::kDouble; }

struct Property {
  std::string name;
  Type type = Type::kDouble;
  bool is_list = false;
  Type count_type = Type::kUChar;
  // Scalar properties: one value per row. List properties: flattened items
  // with `list_offsets` of size rows + 1.
  std::vector<double> values;
  std::vector<std::uint64_t> list_offsets;
};

struct Element {
  std::string name;
  std::uint64_t count = 0;
  std::vector<Property> properties;
  std::vector<std::uint64_t> row_offsets;  // byte offset of each row

  const Property* Find(std::string_view prop) const {
    for (const Property& p : properties) {
      if (p.name == prop) return &p;
    }
    return nullptr;
  }
};

struct File {
  bool binary = true;
  std::vector<Element> elements;
  std::uint64_t header_size = 0;

  const Element* Find(std::string_view name) const {
    for (const Element& e : elements) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }
};

namespace internal {

inline double ReadBinary(Type t, const char* p) {
  switch (t) {
    case Type::kChar: {
      std::int8_t v;
      std::memcpy(&v, p, 1);
      return v;
    }
    case Type::kUChar: {
      std::uint8_t v;
      std::memcpy(&v, p, 1);
      return v;
    }
    case Type::kShort: {
      std::int16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case Type::kUShort: {
      std::uint16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case Type::kInt: {
      std::int32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case Type::kUInt: {
      std::uint32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case Type::kFloat: {
      float v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case Type::kDouble: {
      double v;
      std::memcpy(&v, p, 8);
      return v;
    }
  }
  return 0.0;
}

class AsciiCursor {
 public:
  AsciiCursor(std::string_view bytes, std::uint64_t offset)
      : bytes_(bytes), offset_(offset) {}

  std::uint64_t offset() const { return offset_; }

  void SkipSpace() {
    while (offset_ < bytes_.size() &&
           (bytes_[offset_] == ' ' || bytes_[offset_] == '\t' ||
            bytes_[offset_] == '\n' || bytes_[offset_] == '\r')) {
      ++offset_;
    }
  }

  double Next(const std::string& field) {
    SkipSpace();
    const std::uint64_t start = offset_;
    while (offset_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(
                                          bytes_[offset_]))) {
      ++offset_;
    }
    if (start == offset_) throw ParseError(start, field, "unexpected end of data");
    double value = 0.0;
    const char* first = bytes_.data() + start;
    const char* last = bytes_.data() + offset_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      throw ParseError(start, field,
                       "malformed number '" + std::string(first, last) + "'");
    }
    return value;
  }

 private:
  std::string_view bytes_;
  std::uint64_t offset_;
};

}  // namespace internal

inline File Parse(std::string_view bytes) {
  File file;
  std::uint64_t offset = 0;
  auto next_line = [&]() -> std::string_view {
    const std::size_t end = bytes.find('\n', offset);
    if (end == std::string_view::npos) {
      throw ParseError(offset, "header", "missing end_header");
    }
    std::string_view line = bytes.substr(offset, end - offset);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    offset = end + 1;
    return line;
  };

  if (next_line() != "ply") throw ParseError(0, "magic", "not a PLY file");
  bool have_format = false;
  while (true) {
    const std::uint64_t line_offset = offset;
    std::string_view line = next_line();
    std::istringstream words{std::string(line)};
    std::string keyword;
    words >> keyword;
    if (keyword == "end_header") break;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "format") {
      std::string fmt, version;
      words >> fmt >> version;
      if (fmt == "ascii") {
        file.binary = false;
      } else if (fmt == "binary_little_endian") {
        file.binary = true;
      } else {
        throw ParseError(line_offset, "format", "unsupported format '" + fmt + "'");
      }
      have_format = true;
    } else if (keyword == "element") {
      Element e;
      std::int64_t count = -1;
      words >> e.name >> count;
      if (e.name.empty() || count < 0) {
        throw ParseError(line_offset, "element", "malformed element line");
      }
      e.count = static_cast<std::uint64_t>(count);
      file.elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (file.elements.empty()) {
        throw ParseError(line_offset, "property", "property before any element");
      }
      Property p;
      std::string type_name;
      words >> type_name;
      if (type_name == "list") {
        std::string count_name, item_name;
        words >> count_name >> item_name >> p.name;
        auto count_type = TypeFromName(count_name);
        auto item_type = TypeFromName(item_name);
        if (!count_type || !item_type || !IsIntegral(*count_type)) {
          throw ParseError(line_offset, "property", "malformed list property");
        }
        p.is_list = true;
        p.count_type = *count_type;
        p.type = *item_type;
      } else {
        words >> p.name;
        auto type = TypeFromName(type_name);
        if (!type) {
          throw ParseError(line_offset, "property",
                           "unknown property type '" + type_name + "'");
        }
        p.type = *type;
      }
      if (p.name.empty()) {
        throw ParseError(line_offset, "property", "property without a name");
      }
      file.elements.back().properties.push_back(std::move(p));
    } else {
      throw ParseError(line_offset, "header",
                       "unknown header keyword '" + keyword + "'");
    }
  }
  if (!have_format) throw ParseError(0, "format", "missing format line");
  file.header_size = offset;

  for (Element& e : file.elements) {
    for (Property& p : e.properties) {
      if (p.is_list) {
        p.list_offsets.reserve(e.count + 1);
        p.list_offsets.push_back(0);
      } else {
        p.values.reserve(e.count);
      }
    }
    e.row_offsets.reserve(e.count);
    if (file.binary) {
      for (std::uint64_t row = 0; row < e.count; ++row) {
        e.row_offsets.push_back(offset);
        for (Property& p : e.properties) {
          const std::string field = e.name + "." + p.name;
          if (p.is_list) {
            const std::size_t csize = TypeSize(p.count_type);
            if (bytes.size() - offset < csize) {
              throw ParseError(offset, field, "unexpected end of data");
            }
            const double n = internal::ReadBinary(p.count_type, bytes.data() + offset);
            if (n < 0) throw ParseError(offset, field, "negative list length");
            offset += csize;
            const std::size_t isize = TypeSize(p.type);
            const auto items = static_cast<std::uint64_t>(n);
            if ((bytes.size() - offset) / isize < items) {
              throw ParseError(offset, field, "unexpected end of data");
            }
            for (std::uint64_t k = 0; k < items; ++k) {
              p.values.push_back(internal::ReadBinary(p.type, bytes.data() + offset));
              offset += isize;
            }
            p.list_offsets.push_back(p.values.size());
          } else {
            const std::size_t size = TypeSize(p.type);
            if (bytes.size() - offset < size) {
              throw ParseError(offset, field, "unexpected end of data");
            }
            p.values.push_back(internal::ReadBinary(p.type, bytes.data() + offset));
            offset += size;
          }
        }
      }
    } else {
      internal::AsciiCursor cursor(bytes, offset);
      for (std::uint64_t row = 0; row < e.count; ++row) {
        cursor.SkipSpace();
        e.row_offsets.push_back(cursor.offset());
        for (Property& p : e.properties) {
          const std::string field = e.name + "." + p.name;
          if (p.is_list) {
            const std::uint64_t at = cursor.offset();
            const double n = cursor.Next(field);
            if (n < 0 || n != std::floor(n)) {
              throw ParseError(at, field, "invalid list length");
            }
            for (std::uint64_t k = 0; k < static_cast<std::uint64_t>(n); ++k) {
              p.values.push_back(cursor.Next(field));
            }
            p.list_offsets.push_back(p.values.size());
          } else {
            p.values.push_back(cursor.Next(field));
          }
        }
      }
      offset = cursor.offset();
    }
  }
  return file;
}

// Byte-level writer for binary_little_endian files.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::string header) : out_(std::move(header)) {}

  template <typename T>
  void Put(T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out_.append(buf, sizeof(T));
  }

  std::string Take() { return std::move(out_); }

 private:
  std::string out_;
};

}  // namespace urbanseg::ply

#endif  // URBANSEG_PLY_H_

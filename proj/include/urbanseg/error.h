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

#ifndef URBANSEG_ERROR_H_
#define URBANSEG_ERROR_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace urbanseg {

enum class ErrorCode {
  kInvalidInput,
  kDimensionMismatch,
  kParse,
  kIo,
  kUndefined,
};

inline const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput:
      return "invalid-input";
    case ErrorCode::kDimensionMismatch:
      return "dimension-mismatch";
    case ErrorCode::kParse:
      return "parse";
    case ErrorCode::kIo:
      return "io";
    case ErrorCode::kUndefined:
      return "undefined";
  }
  return "unknown";
}

// Base error for everything the library throws.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Malformed file content. Carries the byte offset where decoding failed and
// the name of the header element or field being decoded.
class ParseError : public Error {
 public:
  ParseError(std::uint64_t byte_offset, std::string field,
             const std::string& message)
      : Error(ErrorCode::kParse,
              "parse error at byte " + std::to_string(byte_offset) +
                  " (field '" + field + "'): " + message),
        byte_offset_(byte_offset),
        field_(std::move(field)) {}

  std::uint64_t byte_offset() const { return byte_offset_; }
  const std::string& field() const { return field_; }

 private:
  std::uint64_t byte_offset_;
  std::string field_;
};

[[noreturn]] inline void ThrowInvalid(const std::string& message) {
  throw Error(ErrorCode::kInvalidInput, message);
}

}  // namespace urbanseg

#endif  // URBANSEG_ERROR_H_

// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ticon {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TICON_DEFINE_ERROR(Name)            \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  }

TICON_DEFINE_ERROR(NumericalError);
TICON_DEFINE_ERROR(ShapeError);
TICON_DEFINE_ERROR(RangeError);
TICON_DEFINE_ERROR(ConfigError);
TICON_DEFINE_ERROR(RegistryError);
TICON_DEFINE_ERROR(EmptyInputError);
TICON_DEFINE_ERROR(DegenerateGridError);
TICON_DEFINE_ERROR(AlignmentError);
TICON_DEFINE_ERROR(DatasetError);
TICON_DEFINE_ERROR(MetricError);
TICON_DEFINE_ERROR(BatchError);

#undef TICON_DEFINE_ERROR

/// Malformed or truncated binary file. `offset` is the byte position at which
/// the reader gave up.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace ticon

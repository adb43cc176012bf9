// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sg3d {

enum class ErrorCode {
  kInvalidPanorama,
  kDegenerateDirection,
  kEmptyGeometry,
  kNonUnitDirection,
  kFormat,
  kConfig,
  kOutOfRange,
  kOverlap,
  kUnknownClass,
  kMalformedRle,
  kDimensionMismatch,
  kUndefinedRatio,
  kInvalidPose,
  kIo,
  kStage,
  kNotFound,
};

std::string_view to_string(ErrorCode code);

/// Base exception for everything thrown by sg3d. `code()` is stable and is
/// what tests and callers should branch on; `what()` is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sg3d

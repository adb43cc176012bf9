// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/error.hpp"

namespace sg3d {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidPanorama: return "invalid-panorama";
    case ErrorCode::kDegenerateDirection: return "degenerate-direction";
    case ErrorCode::kEmptyGeometry: return "empty-geometry";
    case ErrorCode::kNonUnitDirection: return "non-unit-direction";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kOverlap: return "overlap";
    case ErrorCode::kUnknownClass: return "unknown-class";
    case ErrorCode::kMalformedRle: return "malformed-rle";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kUndefinedRatio: return "undefined-ratio";
    case ErrorCode::kInvalidPose: return "invalid-pose";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kStage: return "stage";
    case ErrorCode::kNotFound: return "not-found";
  }
  return "unknown";
}

}  // namespace sg3d

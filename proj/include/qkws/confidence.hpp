// Copyright 2026 The qkws Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace qkws {

enum class Normalization { kRaw, kFrames, kNoBlank };

/// One of the six confidence scores: raw, frame-normalized or
/// non-blank-normalized, each optionally divided by the best-path score.
struct ConfidenceKind {
  Normalization normalization = Normalization::kNoBlank;
  bool ratio = false;

  friend bool operator==(ConfidenceKind, ConfidenceKind) = default;
};

/// Parses "raw", "nf" or "nb".
std::optional<Normalization> parse_normalization(std::string_view name) noexcept;
std::string to_string(ConfidenceKind kind);

/// Non-blank frame count below which a segment scores 0.
inline constexpr double kMinNonBlankFrames = 0.5;

/// Inputs of a confidence score for one (keyword, segment) pair.
struct SegmentStats {
  double log_raw = 0.0;     // Viterbi log probability of the keyword
  double log_best = 0.0;    // log probability of the unconstrained best path
  double n_frames = 0.0;    // scored frames
  double blank_mass = 0.0;  // sum of p(blank) over scored frames
};

/// Confidence in [0, 1]. Throws std::invalid_argument when n_frames is 0.
double score(ConfidenceKind kind, const SegmentStats& stats);

}  // namespace qkws

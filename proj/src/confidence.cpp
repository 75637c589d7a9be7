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

#include "qkws/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qkws {

std::optional<Normalization> parse_normalization(std::string_view name) noexcept {
  if (name == "raw") return Normalization::kRaw;
  if (name == "nf") return Normalization::kFrames;
  if (name == "nb") return Normalization::kNoBlank;
  return std::nullopt;
}

std::string to_string(ConfidenceKind kind) {
  std::string s = kind.normalization == Normalization::kRaw      ? "raw"
                  : kind.normalization == Normalization::kFrames ? "nf"
                                                                 : "nb";
  return kind.ratio ? s + "+ratio" : s;
}

double score(ConfidenceKind kind, const SegmentStats& stats) {
  if (!(stats.n_frames > 0.0)) throw std::invalid_argument("confidence of an empty segment");
  double divisor = 1.0;
  switch (kind.normalization) {
    case Normalization::kRaw:
      break;
    case Normalization::kFrames:
      divisor = stats.n_frames;
      break;
    case Normalization::kNoBlank:
      divisor = stats.n_frames - stats.blank_mass;
      if (divisor < kMinNonBlankFrames) return 0.0;
      break;
  }
  const double log_num = kind.ratio ? stats.log_raw - stats.log_best : stats.log_raw;
  return std::clamp(std::exp(log_num / divisor), 0.0, 1.0);
}

}  // namespace qkws

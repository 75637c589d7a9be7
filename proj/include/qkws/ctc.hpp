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

// CTC scoring of phone sequences over posteriorgram segments. All scores are
// natural-log probabilities; probabilities are floored at kProbFloor before
// taking logs.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "qkws/posteriorgram.hpp"

namespace qkws {

using PhoneSeq = std::vector<int>;

inline constexpr double kProbFloor = 1e-12;
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Inclusive frame range [start, end], 0-based.
struct Segment {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t length() const noexcept { return end - start + 1; }
};

/// log(max(p, kProbFloor)).
double floored_log(double p) noexcept;

/// Merge repeated labels, then drop blanks.
PhoneSeq collapse(std::span<const int> labels);

/// log of the total probability of all label paths over the segment that
/// collapse to `seq`. kLogZero when no path exists.
double ctc_forward(const Posteriorgram& post, Segment seg, std::span<const int> seq);

struct ViterbiResult {
  double log_prob = kLogZero;
  std::vector<int> path;  // one label per frame; empty when infeasible
};

/// Best single label path collapsing to `seq`.
ViterbiResult ctc_viterbi(const Posteriorgram& post, Segment seg, std::span<const int> seq);

/// log of prod_t max_c p(c | t): the unconstrained best path.
double best_path_score(const Posteriorgram& post, Segment seg);

/// Prefix sums of the blank probability and of the best-path log score, for
/// O(1) segment queries.
class SegmentPrefix {
 public:
  explicit SegmentPrefix(const Posteriorgram& post);

  double blank_mass(Segment seg) const noexcept { return blank_[seg.end + 1] - blank_[seg.start]; }
  double best_path(Segment seg) const noexcept { return best_[seg.end + 1] - best_[seg.start]; }

 private:
  std::vector<double> blank_;
  std::vector<double> best_;
};

}  // namespace qkws

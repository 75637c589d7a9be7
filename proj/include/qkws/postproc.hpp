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

// Reduction of overlapping detection candidates to a non-overlapping
// detection list, where consecutive entries satisfy prev.end < next.start.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "qkws/decoder.hpp"

namespace qkws {

using DetectionList = std::vector<DetectionCandidate>;

bool is_non_overlapping(std::span<const DetectionCandidate> list) noexcept;
double total_confidence(std::span<const DetectionCandidate> list) noexcept;

/// Ranking among candidates sharing an end frame: higher confidence, then
/// longer segment, then lower keyword id.
bool preferred(const DetectionCandidate& a, const DetectionCandidate& b) noexcept;

/// Scans end frames in increasing order, keeps the preferred candidate at
/// each end and discards every candidate starting at or before it ends.
DetectionList greedy(std::span<const DetectionCandidate> candidates);

/// Non-overlapping list with the largest summed confidence. Ties go to fewer
/// detections, then to the list whose last detection ends earlier.
DetectionList sequence(std::span<const DetectionCandidate> candidates);

/// Online greedy: emits a detection as soon as its end frame is processed.
class StreamingGreedy {
 public:
  /// `ending_now` holds the candidates of one end frame; frames must be
  /// pushed in increasing order.
  std::optional<DetectionCandidate> push(std::span<const DetectionCandidate> ending_now);
  void reset() { last_end_.reset(); }

 private:
  std::optional<std::size_t> last_end_;
};

/// Online sequence search: the dynamic program runs as candidates arrive,
/// the list is only final once the query ends.
class StreamingSequence {
 public:
  /// Candidates of one end frame; frames must be pushed in increasing order.
  void push(std::span<const DetectionCandidate> ending_now);
  /// Best list over everything pushed so far.
  DetectionList finish() const;
  void reset();

 private:
  struct Solution {
    double sum = 0.0;
    std::size_t count = 0;
    std::size_t last_end = 0;
    int tail = -1;  // index into chain_
  };
  struct Link {
    DetectionCandidate candidate;
    int prev = -1;
  };
  static bool better(const Solution& a, const Solution& b) noexcept;
  const Solution& best_before(std::size_t frame) const noexcept;

  std::vector<std::size_t> ends_;
  std::vector<Solution> best_;  // best_[i]: best list using ends <= ends_[i]
  std::vector<Link> chain_;
  Solution empty_;
};

}  // namespace qkws

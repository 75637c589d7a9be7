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

#include "qkws/postproc.hpp"

#include <algorithm>

namespace qkws {

namespace {

std::vector<DetectionCandidate> sorted(std::span<const DetectionCandidate> candidates) {
  std::vector<DetectionCandidate> v(candidates.begin(), candidates.end());
  std::sort(v.begin(), v.end(), candidate_order);
  return v;
}

// Calls fn(group) for each run of candidates sharing an end frame.
template <typename Fn>
void for_each_end(const std::vector<DetectionCandidate>& v, Fn fn) {
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j].end == v[i].end) ++j;
    fn(std::span<const DetectionCandidate>(v.data() + i, j - i));
    i = j;
  }
}

}  // namespace

bool is_non_overlapping(std::span<const DetectionCandidate> list) noexcept {
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i].start > list[i].end) return false;
    if (i > 0 && !(list[i - 1].end < list[i].start)) return false;
  }
  return true;
}

double total_confidence(std::span<const DetectionCandidate> list) noexcept {
  double s = 0.0;
  for (const auto& c : list) s += c.confidence;
  return s;
}

bool preferred(const DetectionCandidate& a, const DetectionCandidate& b) noexcept {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.start != b.start) return a.start < b.start;
  return a.keyword < b.keyword;
}

std::optional<DetectionCandidate> StreamingGreedy::push(std::span<const DetectionCandidate> ending_now) {
  const DetectionCandidate* best = nullptr;
  for (const auto& c : ending_now) {
    if (last_end_ && c.start <= *last_end_) continue;
    if (!best || preferred(c, *best)) best = &c;
  }
  if (!best) return std::nullopt;
  last_end_ = best->end;
  return *best;
}

DetectionList greedy(std::span<const DetectionCandidate> candidates) {
  DetectionList out;
  StreamingGreedy g;
  for_each_end(sorted(candidates), [&](std::span<const DetectionCandidate> group) {
    if (auto d = g.push(group)) out.push_back(*d);
  });
  return out;
}

bool StreamingSequence::better(const Solution& a, const Solution& b) noexcept {
  if (a.sum != b.sum) return a.sum > b.sum;
  if (a.count != b.count) return a.count < b.count;
  return a.last_end < b.last_end;
}

const StreamingSequence::Solution& StreamingSequence::best_before(std::size_t frame) const noexcept {
  // Last processed end strictly before `frame`.
  auto it = std::lower_bound(ends_.begin(), ends_.end(), frame);
  if (it == ends_.begin()) return empty_;
  return best_[static_cast<std::size_t>(it - ends_.begin()) - 1];
}

void StreamingSequence::push(std::span<const DetectionCandidate> ending_now) {
  if (ending_now.empty()) return;
  const std::size_t end = ending_now.front().end;
  Solution best = best_.empty() ? empty_ : best_.back();
  for (const auto& c : sorted(ending_now)) {
    const Solution& prev = best_before(c.start);
    Solution cand{prev.sum + c.confidence, prev.count + 1, end, -1};
    if (better(cand, best)) {
      chain_.push_back({c, prev.tail});
      cand.tail = static_cast<int>(chain_.size()) - 1;
      best = cand;
    }
  }
  ends_.push_back(end);
  best_.push_back(best);
}

DetectionList StreamingSequence::finish() const {
  DetectionList out;
  if (best_.empty()) return out;
  for (int i = best_.back().tail; i >= 0; i = chain_[static_cast<std::size_t>(i)].prev) {
    out.push_back(chain_[static_cast<std::size_t>(i)].candidate);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

void StreamingSequence::reset() {
  ends_.clear();
  best_.clear();
  chain_.clear();
}

DetectionList sequence(std::span<const DetectionCandidate> candidates) {
  StreamingSequence s;
  for_each_end(sorted(candidates), [&](std::span<const DetectionCandidate> group) { s.push(group); });
  return s.finish();
}

}  // namespace qkws

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

#include "qkws/ctc.hpp"

#include <algorithm>
#include <cmath>

#include "qkws/errors.hpp"

namespace qkws {

namespace {

void check_segment(const Posteriorgram& post, Segment seg) {
  if (seg.start > seg.end || seg.end >= post.rows()) throw StructuralError("segment outside posteriorgram");
}

double log_add(double a, double b) noexcept {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Extended label sequence: blank, seq[0], blank, seq[1], ..., blank.
std::vector<int> extend(std::span<const int> seq) {
  std::vector<int> ext(2 * seq.size() + 1, kBlank);
  for (std::size_t i = 0; i < seq.size(); ++i) ext[2 * i + 1] = seq[i];
  return ext;
}

bool can_skip(const std::vector<int>& ext, std::size_t s) {
  return s >= 2 && ext[s] != kBlank && ext[s] != ext[s - 2];
}

// Minimum number of frames needed to emit seq (repeats need a blank between).
std::size_t min_frames(std::span<const int> seq) {
  std::size_t n = seq.size();
  for (std::size_t i = 1; i < seq.size(); ++i) n += seq[i] == seq[i - 1];
  return n;
}

}  // namespace

double floored_log(double p) noexcept { return std::log(std::max(p, kProbFloor)); }

PhoneSeq collapse(std::span<const int> labels) {
  PhoneSeq out;
  int prev = -1;
  for (int l : labels) {
    if (l != prev && l != kBlank) out.push_back(l);
    prev = l;
  }
  return out;
}

double ctc_forward(const Posteriorgram& post, Segment seg, std::span<const int> seq) {
  check_segment(post, seg);
  if (seq.empty()) {
    double s = 0.0;
    for (std::size_t t = seg.start; t <= seg.end; ++t) s += floored_log(post(t, kBlank));
    return s;
  }
  if (min_frames(seq) > seg.length()) return kLogZero;
  const auto ext = extend(seq);
  const std::size_t S = ext.size();
  std::vector<double> alpha(S, kLogZero), next(S);
  alpha[0] = floored_log(post(seg.start, ext[0]));
  alpha[1] = floored_log(post(seg.start, ext[1]));
  for (std::size_t t = seg.start + 1; t <= seg.end; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double a = alpha[s];
      if (s >= 1) a = log_add(a, alpha[s - 1]);
      if (can_skip(ext, s)) a = log_add(a, alpha[s - 2]);
      next[s] = a == kLogZero ? kLogZero : a + floored_log(post(t, ext[s]));
    }
    alpha.swap(next);
  }
  return log_add(alpha[S - 1], alpha[S - 2]);
}

ViterbiResult ctc_viterbi(const Posteriorgram& post, Segment seg, std::span<const int> seq) {
  check_segment(post, seg);
  ViterbiResult result;
  if (seq.empty()) {
    result.log_prob = 0.0;
    for (std::size_t t = seg.start; t <= seg.end; ++t) result.log_prob += floored_log(post(t, kBlank));
    result.path.assign(seg.length(), kBlank);
    return result;
  }
  if (min_frames(seq) > seg.length()) return result;
  const auto ext = extend(seq);
  const std::size_t S = ext.size();
  const std::size_t L = seg.length();
  std::vector<double> delta(S, kLogZero), next(S);
  std::vector<std::vector<int>> back(L, std::vector<int>(S, -1));
  delta[0] = floored_log(post(seg.start, ext[0]));
  delta[1] = floored_log(post(seg.start, ext[1]));
  for (std::size_t i = 1; i < L; ++i) {
    const std::size_t t = seg.start + i;
    for (std::size_t s = 0; s < S; ++s) {
      double best = delta[s];
      int from = static_cast<int>(s);
      if (s >= 1 && delta[s - 1] > best) best = delta[s - 1], from = static_cast<int>(s - 1);
      if (can_skip(ext, s) && delta[s - 2] > best) best = delta[s - 2], from = static_cast<int>(s - 2);
      next[s] = best == kLogZero ? kLogZero : best + floored_log(post(t, ext[s]));
      back[i][s] = best == kLogZero ? -1 : from;
    }
    delta.swap(next);
  }
  std::size_t s = delta[S - 1] >= delta[S - 2] ? S - 1 : S - 2;
  result.log_prob = delta[s];
  if (result.log_prob == kLogZero) return result;
  result.path.resize(L);
  for (std::size_t i = L; i-- > 0;) {
    result.path[i] = ext[s];
    if (i > 0) s = static_cast<std::size_t>(back[i][s]);
  }
  return result;
}

double best_path_score(const Posteriorgram& post, Segment seg) {
  check_segment(post, seg);
  double s = 0.0;
  for (std::size_t t = seg.start; t <= seg.end; ++t) {
    const auto row = post.row(t);
    s += floored_log(*std::max_element(row.begin(), row.end()));
  }
  return s;
}

SegmentPrefix::SegmentPrefix(const Posteriorgram& post)
    : blank_(post.rows() + 1, 0.0), best_(post.rows() + 1, 0.0) {
  for (std::size_t t = 0; t < post.rows(); ++t) {
    const auto row = post.row(t);
    blank_[t + 1] = blank_[t] + row[kBlank];
    best_[t + 1] = best_[t] + floored_log(*std::max_element(row.begin(), row.end()));
  }
}

}  // namespace qkws

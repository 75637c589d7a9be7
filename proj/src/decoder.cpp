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

#include "qkws/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "qkws/ctc.hpp"
#include "qkws/errors.hpp"

namespace qkws {

void DecoderConfig::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must be in [0, 1]");
  if (max_segment < 1) throw ConfigError("max segment length must be >= 1");
  if (!(prune_nll > 0.0)) throw ConfigError("prune bound must be > 0");
  if (!(blank_skip > 0.0 && blank_skip <= 1.0)) throw ConfigError("blank-skip threshold must be in (0, 1]");
  if (subsample < 1) throw ConfigError("subsampling factor must be >= 1");
}

DecoderConfig DecoderConfig::exhaustive(double threshold, ConfidenceKind kind) {
  DecoderConfig c;
  c.threshold = threshold;
  c.confidence = kind;
  c.max_segment = std::numeric_limits<std::size_t>::max();
  c.prune_nll = std::numeric_limits<double>::infinity();
  c.blank_skip = 1.0;
  c.subsample = 1;
  return c;
}

bool candidate_order(const DetectionCandidate& a, const DetectionCandidate& b) noexcept {
  if (a.end != b.end) return a.end < b.end;
  if (a.start != b.start) return a.start < b.start;
  return a.keyword < b.keyword;
}

bool should_prune(double best_log_score, std::size_t scored_frames, double prune_nll) noexcept {
  if (scored_frames == 0) return false;
  return -best_log_score / static_cast<double>(scored_frames) > prune_nll;
}

Decoder::Decoder(const KeywordTrie& trie, DecoderConfig config) : trie_(&trie), config_(config) {
  config_.validate();
  log_row_.resize(trie.num_classes());
  best_conf_.resize(trie.num_keywords());
}

void Decoder::reset() {
  groups_.clear();
  frame_ = 0;
  stats_ = {};
}

bool Decoder::advance(StartGroup& g) {
  const auto& nodes = trie_->nodes();
  const double lp_blank = log_row_[kBlank];
  // Parents precede children in node order, so a reverse sweep reads the
  // parent's previous-frame scores before they are overwritten.
  for (std::size_t n = nodes.size(); n-- > 1;) {
    const auto& node = nodes[n];
    const auto parent = static_cast<std::size_t>(node.parent);
    const double old_label = g.label_score[n];
    const double old_blank = g.blank_score[n];
    double enter = std::max(old_label, g.blank_score[parent]);
    if (parent != 0 && nodes[parent].label != node.label) enter = std::max(enter, g.label_score[parent]);
    g.label_score[n] = enter == kLogZero ? kLogZero : enter + log_row_[static_cast<std::size_t>(node.label)];
    const double stay = std::max(old_label, old_blank);
    g.blank_score[n] = stay == kLogZero ? kLogZero : stay + lp_blank;
  }
  if (g.blank_score[0] != kLogZero) g.blank_score[0] += lp_blank;

  ++g.scored;
  bool alive = false;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const double best = std::max(g.label_score[n], g.blank_score[n]);
    if (best == kLogZero) continue;
    if (should_prune(best, g.scored, config_.prune_nll)) {
      g.label_score[n] = g.blank_score[n] = kLogZero;
      ++stats_.tokens_pruned;
      continue;
    }
    ++stats_.token_updates;
    alive = true;
  }
  return alive;
}

std::vector<DetectionCandidate> Decoder::step(std::span<const float> row) {
  if (row.size() != trie_->num_classes()) {
    throw StructuralError("posterior row has " + std::to_string(row.size()) + " classes, keyword trie expects " +
                          std::to_string(trie_->num_classes()));
  }
  const std::size_t t = frame_++;
  ++stats_.frames_seen;

  std::erase_if(groups_, [&](const StartGroup& g) { return t - g.start + 1 > config_.max_segment; });
  std::vector<DetectionCandidate> out;
  if (row[kBlank] > config_.blank_skip) return out;
  ++stats_.frames_scored;

  for (std::size_t c = 0; c < row.size(); ++c) log_row_[c] = floored_log(row[c]);
  const double best_log = floored_log(*std::max_element(row.begin(), row.end()));
  const bool on_stride = t % config_.subsample == 0;

  if (on_stride) {
    StartGroup g;
    g.start = t;
    g.label_score.assign(trie_->num_nodes(), kLogZero);
    g.blank_score.assign(trie_->num_nodes(), kLogZero);
    g.blank_score[0] = 0.0;
    groups_.push_back(std::move(g));
  }

  for (auto& g : groups_) {
    g.blank_mass += row[kBlank];
    g.best_path += best_log;
  }
  std::erase_if(groups_, [&](StartGroup& g) { return !advance(g); });
  if (!on_stride) return out;

  const auto& nodes = trie_->nodes();
  for (const auto& g : groups_) {
    std::fill(best_conf_.begin(), best_conf_.end(), -1.0);
    const SegmentStats base{0.0, g.best_path, static_cast<double>(g.scored), g.blank_mass};
    for (std::size_t n = 1; n < nodes.size(); ++n) {
      if (nodes[n].terminals.empty()) continue;
      const double log_raw = std::max(g.label_score[n], g.blank_score[n]);
      if (log_raw == kLogZero) continue;
      SegmentStats stats = base;
      stats.log_raw = log_raw;
      const double conf = score(config_.confidence, stats);
      for (int id : nodes[n].terminals) {
        auto& slot = best_conf_[static_cast<std::size_t>(id)];
        slot = std::max(slot, conf);
      }
    }
    for (std::size_t k = 0; k < best_conf_.size(); ++k) {
      if (best_conf_[k] > config_.threshold) {
        out.push_back({static_cast<int>(k), g.start, t, best_conf_[k]});
      }
    }
  }
  return out;
}

std::vector<DetectionCandidate> detect(const Posteriorgram& post, const KeywordTrie& trie,
                                       const DecoderConfig& config, DecoderStats* stats) {
  if (post.cols() != trie.num_classes() && !post.empty()) {
    throw StructuralError("posteriorgram has " + std::to_string(post.cols()) + " classes, keyword trie expects " +
                          std::to_string(trie.num_classes()));
  }
  Decoder decoder(trie, config);
  std::vector<DetectionCandidate> out;
  for (std::size_t t = 0; t < post.rows(); ++t) {
    auto c = decoder.step(post.row(t));
    out.insert(out.end(), c.begin(), c.end());
  }
  if (stats) *stats = decoder.stats();
  return out;
}

namespace serial {
std::vector<std::vector<DetectionCandidate>> detect_batch(std::span<const Posteriorgram> posts,
                                                          const KeywordTrie& trie, const DecoderConfig& config) {
  std::vector<std::vector<DetectionCandidate>> out(posts.size());
  for (std::size_t i = 0; i < posts.size(); ++i) out[i] = detect(posts[i], trie, config);
  return out;
}
}  // namespace serial

namespace parallel {
std::vector<std::vector<DetectionCandidate>> detect_batch(std::span<const Posteriorgram> posts,
                                                          const KeywordTrie& trie, const DecoderConfig& config) {
  config.validate();
  for (const auto& post : posts) {
    if (!post.empty() && post.cols() != trie.num_classes()) {
      throw StructuralError("posteriorgram width does not match the keyword trie");
    }
  }
  std::vector<std::vector<DetectionCandidate>> out(posts.size());
  const auto n = static_cast<std::ptrdiff_t>(posts.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = detect(posts[i], trie, config);
  return out;
}
}  // namespace parallel

BlankSkipResult apply_blank_skip(const Posteriorgram& post, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("blank-skip threshold must be in (0, 1]");
  BlankSkipResult r;
  r.kept = Posteriorgram(0, post.cols());
  for (std::size_t t = 0; t < post.rows(); ++t) {
    if (post(t, kBlank) > threshold) continue;
    r.kept.append_row(post.row(t));
    r.original_index.push_back(t);
  }
  return r;
}

}  // namespace qkws

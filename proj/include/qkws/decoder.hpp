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

// Token-passing keyword detector over a pronunciation trie.
//
// A token is the pair (trie node, start frame). It carries two Viterbi
// log-scores: the best path whose last emitted label is the node's phone, and
// the best path that has moved on to a blank after it. A new start is opened
// at the root every `subsample` frames; every kept frame advances all live
// tokens, and tokens sitting on terminal nodes are scored as candidates.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "qkws/confidence.hpp"
#include "qkws/keywords.hpp"
#include "qkws/posteriorgram.hpp"

namespace qkws {

struct DecoderConfig {
  double threshold = 0.5;
  ConfidenceKind confidence{Normalization::kNoBlank, false};
  std::size_t max_segment = 30;  // frames, inclusive span
  double prune_nll = 2.5;        // max mean negative log-likelihood per scored frame
  double blank_skip = 0.95;      // frames with p(blank) above this are not scored
  std::size_t subsample = 1;     // stride for start and end frames

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  /// All search restrictions disabled: every (keyword, segment) is scored.
  static DecoderConfig exhaustive(double threshold, ConfidenceKind kind);
};

struct DetectionCandidate {
  int keyword = 0;
  std::size_t start = 0;  // inclusive frame indices
  std::size_t end = 0;
  double confidence = 0.0;

  friend bool operator==(const DetectionCandidate&, const DetectionCandidate&) = default;
};

/// Orders by end, then start, then keyword.
bool candidate_order(const DetectionCandidate& a, const DetectionCandidate& b) noexcept;

struct DecoderStats {
  std::size_t frames_seen = 0;
  std::size_t frames_scored = 0;
  std::size_t token_updates = 0;
  std::size_t tokens_pruned = 0;
};

/// True when a token's best score averages more than `prune_nll` nats per
/// scored frame.
bool should_prune(double best_log_score, std::size_t scored_frames, double prune_nll) noexcept;

/// Streaming detector; one instance per audio stream. Holds a reference to
/// the trie, which must outlive it.
class Decoder {
 public:
  Decoder(const KeywordTrie& trie, DecoderConfig config);

  /// Consumes the next posterior row and returns candidates ending on it,
  /// ordered by start then keyword.
  std::vector<DetectionCandidate> step(std::span<const float> row);
  void reset();

  std::size_t frame() const noexcept { return frame_; }
  std::size_t live_starts() const noexcept { return groups_.size(); }
  const DecoderStats& stats() const noexcept { return stats_; }
  const DecoderConfig& config() const noexcept { return config_; }

 private:
  // All tokens sharing one start frame.
  struct StartGroup {
    std::size_t start = 0;
    std::size_t scored = 0;
    double blank_mass = 0.0;
    double best_path = 0.0;
    std::vector<double> label_score;  // per trie node
    std::vector<double> blank_score;  // per trie node
  };

  bool advance(StartGroup& group);

  const KeywordTrie* trie_;
  DecoderConfig config_;
  std::vector<StartGroup> groups_;  // ordered by start
  std::vector<double> log_row_;
  std::vector<double> best_conf_;
  std::size_t frame_ = 0;
  DecoderStats stats_;
};

/// Runs a Decoder over every row. Throws StructuralError when the
/// posteriorgram width differs from the trie's class count.
std::vector<DetectionCandidate> detect(const Posteriorgram& post, const KeywordTrie& trie,
                                       const DecoderConfig& config, DecoderStats* stats = nullptr);

/// detect over independent streams; the OpenMP flavour runs streams in parallel.
namespace serial {
std::vector<std::vector<DetectionCandidate>> detect_batch(std::span<const Posteriorgram> posts,
                                                          const KeywordTrie& trie, const DecoderConfig& config);
}
namespace parallel {
std::vector<std::vector<DetectionCandidate>> detect_batch(std::span<const Posteriorgram> posts,
                                                          const KeywordTrie& trie, const DecoderConfig& config);
}

struct BlankSkipResult {
  Posteriorgram kept;
  std::vector<std::size_t> original_index;  // kept row -> source row
};

/// Drops rows whose blank probability exceeds `threshold`.
BlankSkipResult apply_blank_skip(const Posteriorgram& post, double threshold);

}  // namespace qkws

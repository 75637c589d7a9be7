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

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qkws/acoustic_model.hpp"
#include "qkws/decoder.hpp"
#include "qkws/frontend.hpp"
#include "qkws/postproc.hpp"

namespace qkws {

enum class PostProcessor { kGreedy, kSequence };

std::optional<PostProcessor> parse_postprocessor(std::string_view name) noexcept;
DetectionList postprocess(std::span<const DetectionCandidate> candidates, PostProcessor kind);

/// Seconds between two posterior frames (hop * skip / sample rate).
double frame_seconds(const FrontendConfig& config) noexcept;

/// One-shot audio to posteriorgram.
Posteriorgram posteriors_from_audio(const AcousticModel& model, const AudioBuffer& audio);

/// Audio-in, candidates-out streaming spotter for a single stream. Keeps
/// references to the model and trie.
class StreamingSpotter {
 public:
  StreamingSpotter(const AcousticModel& model, const KeywordTrie& trie, const DecoderConfig& config);

  /// Returns the candidates produced by the frames this chunk completed.
  std::vector<DetectionCandidate> accept_audio(std::span<const std::int16_t> samples);
  std::vector<DetectionCandidate> accept_frame(std::span<const float> stacked_frame);

  /// Every posterior row produced so far.
  const Posteriorgram& posteriors() const noexcept { return posteriors_; }
  const Decoder& decoder() const noexcept { return decoder_; }
  void reset();

 private:
  const AcousticModel* model_;
  FeaturePipeline features_;
  ModelStream network_;
  Decoder decoder_;
  Posteriorgram posteriors_;
};

}  // namespace qkws

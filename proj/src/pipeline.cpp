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

#include "qkws/pipeline.hpp"

#include "qkws/errors.hpp"

namespace qkws {

std::optional<PostProcessor> parse_postprocessor(std::string_view name) noexcept {
  if (name == "greedy") return PostProcessor::kGreedy;
  if (name == "sequence") return PostProcessor::kSequence;
  return std::nullopt;
}

DetectionList postprocess(std::span<const DetectionCandidate> candidates, PostProcessor kind) {
  return kind == PostProcessor::kGreedy ? greedy(candidates) : sequence(candidates);
}

double frame_seconds(const FrontendConfig& config) noexcept {
  return static_cast<double>(config.hop) * config.skip / config.sample_rate;
}

Posteriorgram posteriors_from_audio(const AcousticModel& model, const AudioBuffer& audio) {
  const auto frames = compute_features(audio, model.frontend, model.norm);
  return forward(model, frames);
}

StreamingSpotter::StreamingSpotter(const AcousticModel& model, const KeywordTrie& trie, const DecoderConfig& config)
    : model_(&model),
      features_(model.frontend, model.norm),
      network_(model),
      decoder_(trie, config),
      posteriors_(0, model.num_classes()) {
  if (trie.num_classes() != model.num_classes()) {
    throw StructuralError("keyword trie and model disagree on the phone table size");
  }
}

std::vector<DetectionCandidate> StreamingSpotter::accept_frame(std::span<const float> stacked_frame) {
  const auto row = network_.push(stacked_frame);
  posteriors_.append_row(row);
  return decoder_.step(row);
}

std::vector<DetectionCandidate> StreamingSpotter::accept_audio(std::span<const std::int16_t> samples) {
  std::vector<DetectionCandidate> out;
  for (const auto& frame : features_.accept(samples)) {
    auto c = accept_frame(frame);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

void StreamingSpotter::reset() {
  features_.reset();
  network_.reset();
  decoder_.reset();
  posteriors_ = Posteriorgram(0, model_->num_classes());
}

}  // namespace qkws

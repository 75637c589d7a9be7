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

// Audio front end: MFCC extraction, feature normalization and stack&skip
// frame assembly. Every stage has a streaming form; the one-shot functions
// are thin wrappers over it so both produce bit-identical frames.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "qkws/wav.hpp"

namespace qkws {

using FeatureFrame = std::vector<float>;

struct FrontendConfig {
  int sample_rate = 16000;
  int window = 400;  // samples (25 ms)
  int hop = 160;     // samples (10 ms)
  int n_fft = 512;
  int n_mel = 40;
  int n_mfcc = 20;
  float low_hz = 0.0f;
  float high_hz = 8000.0f;
  float log_floor = 1e-10f;
  int stack = 5;
  int skip = 3;

  int stacked_dim() const noexcept { return n_mfcc * stack; }
  /// Checks internal consistency; throws ConfigError.
  void validate() const;

  friend bool operator==(const FrontendConfig&, const FrontendConfig&) = default;
};

/// Per-coefficient normalization applied to base MFCC frames. Empty vectors
/// mean identity.
struct NormStats {
  std::vector<float> mean;
  std::vector<float> inv_std;

  void apply(FeatureFrame& frame) const noexcept;
  bool empty() const noexcept { return mean.empty(); }
};

/// Streaming MFCC extractor. Holds FFT buffers; one instance per stream.
class MfccExtractor {
 public:
  explicit MfccExtractor(const FrontendConfig& config);
  ~MfccExtractor();
  MfccExtractor(const MfccExtractor&) = delete;
  MfccExtractor& operator=(const MfccExtractor&) = delete;
  MfccExtractor(MfccExtractor&&) noexcept;
  MfccExtractor& operator=(MfccExtractor&&) noexcept;

  /// Appends samples and returns every frame that became complete.
  std::vector<FeatureFrame> accept(std::span<const std::int16_t> samples);
  void reset();

  const FrontendConfig& config() const noexcept { return config_; }

 private:
  FeatureFrame compute_frame(std::span<const float> window) ;

  FrontendConfig config_;
  std::vector<float> pending_;
  std::vector<double> hamming_;
  std::vector<std::vector<std::pair<int, double>>> mel_weights_;
  std::vector<double> dct_;  // n_mfcc x n_mel
  struct Fft;
  std::unique_ptr<Fft> fft_;
};

/// One frame per hop: floor((N - window) / hop) + 1 frames, 0 when N < window.
/// Throws ConfigError on a wrong sample rate or empty audio.
std::vector<FeatureFrame> compute_mfcc(const AudioBuffer& audio, const FrontendConfig& config);

/// Streaming stack&skip: output t concatenates base frames [skip*t, skip*t + stack).
class FrameStacker {
 public:
  FrameStacker(int stack, int skip);

  std::optional<FeatureFrame> push(FeatureFrame frame);
  void reset();

 private:
  int stack_;
  int skip_;
  std::size_t seen_ = 0;
  std::deque<FeatureFrame> window_;
};

/// floor((T - stack) / skip) + 1 frames for T >= stack, else none.
std::vector<FeatureFrame> stack_and_skip(std::span<const FeatureFrame> frames, int stack = 5, int skip = 3);

/// Audio to normalized stacked frames, incrementally.
class FeaturePipeline {
 public:
  FeaturePipeline(const FrontendConfig& config, NormStats norm);

  std::vector<FeatureFrame> accept(std::span<const std::int16_t> samples);
  void reset();

 private:
  MfccExtractor mfcc_;
  NormStats norm_;
  FrameStacker stacker_;
};

/// One-shot form of FeaturePipeline.
std::vector<FeatureFrame> compute_features(const AudioBuffer& audio, const FrontendConfig& config,
                                           const NormStats& norm);

}  // namespace qkws

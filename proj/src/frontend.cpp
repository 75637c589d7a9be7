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

#include "qkws/frontend.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "qkws/errors.hpp"

namespace qkws {

namespace {

// FFTW planning is not thread-safe; execution with a private plan is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

void FrontendConfig::validate() const {
  if (sample_rate != 16000) throw ConfigError("sample rate must be 16000 Hz");
  if (window <= 0 || hop <= 0 || n_fft < window) throw ConfigError("bad MFCC window/hop/fft sizes");
  if (n_mel <= 0 || n_mfcc <= 0 || n_mfcc > n_mel) throw ConfigError("bad MFCC filter/cepstrum counts");
  if (!(low_hz >= 0.0f && high_hz > low_hz && high_hz <= sample_rate / 2.0f)) {
    throw ConfigError("bad mel frequency range");
  }
  if (!(log_floor > 0.0f)) throw ConfigError("log floor must be positive");
  if (stack < 1 || skip < 1) throw ConfigError("stack and skip must be >= 1");
}

void NormStats::apply(FeatureFrame& frame) const noexcept {
  if (mean.size() != frame.size()) return;
  for (std::size_t i = 0; i < frame.size(); ++i) frame[i] = (frame[i] - mean[i]) * inv_std[i];
}

struct MfccExtractor::Fft {
  explicit Fft(int n) : size(n) {
    std::lock_guard lock(fftw_planner_mutex());
    in = fftw_alloc_real(static_cast<std::size_t>(n));
    out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  ~Fft() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  int size;
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;
};

MfccExtractor::MfccExtractor(const FrontendConfig& config) : config_(config) {
  config_.validate();
  const int n = config_.window;
  hamming_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    hamming_[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
  }

  // Triangular filters equally spaced on the mel scale.
  const int bins = config_.n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(config_.low_hz);
  const double mel_hi = hz_to_mel(config_.high_hz);
  std::vector<double> edges(static_cast<std::size_t>(config_.n_mel + 2));
  for (std::size_t m = 0; m < edges.size(); ++m) {
    edges[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(m) / (config_.n_mel + 1));
  }
  mel_weights_.resize(static_cast<std::size_t>(config_.n_mel));
  for (int m = 0; m < config_.n_mel; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * config_.sample_rate / config_.n_fft;
      double w = 0.0;
      if (f > left && f <= center) w = (f - left) / (center - left);
      else if (f > center && f < right) w = (right - f) / (right - center);
      if (w > 0.0) mel_weights_[m].emplace_back(k, w);
    }
  }

  // Orthonormal DCT-II.
  const int M = config_.n_mel;
  dct_.resize(static_cast<std::size_t>(config_.n_mfcc * M));
  for (int k = 0; k < config_.n_mfcc; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / M) : std::sqrt(2.0 / M);
    for (int m = 0; m < M; ++m) {
      dct_[k * M + m] = scale * std::cos(std::numbers::pi * k * (m + 0.5) / M);
    }
  }
  fft_ = std::make_unique<Fft>(config_.n_fft);
}

MfccExtractor::~MfccExtractor() = default;
MfccExtractor::MfccExtractor(MfccExtractor&&) noexcept = default;
MfccExtractor& MfccExtractor::operator=(MfccExtractor&&) noexcept = default;

FeatureFrame MfccExtractor::compute_frame(std::span<const float> window) {
  const int n = config_.window;
  std::fill(fft_->in, fft_->in + config_.n_fft, 0.0);
  for (int i = 0; i < n; ++i) fft_->in[i] = window[i] * hamming_[i];
  fftw_execute(fft_->plan);

  std::vector<double> log_mel(static_cast<std::size_t>(config_.n_mel));
  for (std::size_t m = 0; m < log_mel.size(); ++m) {
    double e = 0.0;
    for (const auto& [k, w] : mel_weights_[m]) {
      const double re = fft_->out[k][0], im = fft_->out[k][1];
      e += w * (re * re + im * im);
    }
    log_mel[m] = std::log(std::max(e, static_cast<double>(config_.log_floor)));
  }

  FeatureFrame ceps(static_cast<std::size_t>(config_.n_mfcc));
  for (int k = 0; k < config_.n_mfcc; ++k) {
    double acc = 0.0;
    for (int m = 0; m < config_.n_mel; ++m) acc += dct_[k * config_.n_mel + m] * log_mel[m];
    ceps[k] = static_cast<float>(acc);
  }
  return ceps;
}

std::vector<FeatureFrame> MfccExtractor::accept(std::span<const std::int16_t> samples) {
  for (auto s : samples) pending_.push_back(static_cast<float>(s) / 32768.0f);
  std::vector<FeatureFrame> frames;
  std::size_t start = 0;
  const auto window = static_cast<std::size_t>(config_.window);
  const auto hop = static_cast<std::size_t>(config_.hop);
  while (start + window <= pending_.size()) {
    frames.push_back(compute_frame(std::span<const float>(pending_).subspan(start, window)));
    start += hop;
  }
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(std::min(start, pending_.size())));
  return frames;
}

void MfccExtractor::reset() { pending_.clear(); }

std::vector<FeatureFrame> compute_mfcc(const AudioBuffer& audio, const FrontendConfig& config) {
  if (audio.sample_rate != config.sample_rate) {
    throw ConfigError("audio sample rate " + std::to_string(audio.sample_rate) + " Hz, expected " +
                      std::to_string(config.sample_rate));
  }
  if (audio.samples.empty()) throw ConfigError("empty audio");
  MfccExtractor extractor(config);
  return extractor.accept(audio.samples);
}

FrameStacker::FrameStacker(int stack, int skip) : stack_(stack), skip_(skip) {
  if (stack < 1 || skip < 1) throw ConfigError("stack and skip must be >= 1");
}

std::optional<FeatureFrame> FrameStacker::push(FeatureFrame frame) {
  window_.push_back(std::move(frame));
  if (window_.size() > static_cast<std::size_t>(stack_)) window_.pop_front();
  const std::size_t index = seen_++;
  if (index + 1 < static_cast<std::size_t>(stack_)) return std::nullopt;
  const std::size_t first = index + 1 - static_cast<std::size_t>(stack_);
  if (first % static_cast<std::size_t>(skip_) != 0) return std::nullopt;
  FeatureFrame stacked;
  for (const auto& f : window_) stacked.insert(stacked.end(), f.begin(), f.end());
  return stacked;
}

void FrameStacker::reset() {
  seen_ = 0;
  window_.clear();
}

std::vector<FeatureFrame> stack_and_skip(std::span<const FeatureFrame> frames, int stack, int skip) {
  FrameStacker stacker(stack, skip);
  std::vector<FeatureFrame> out;
  for (const auto& f : frames) {
    if (auto s = stacker.push(f)) out.push_back(std::move(*s));
  }
  return out;
}

FeaturePipeline::FeaturePipeline(const FrontendConfig& config, NormStats norm)
    : mfcc_(config), norm_(std::move(norm)), stacker_(config.stack, config.skip) {}

std::vector<FeatureFrame> FeaturePipeline::accept(std::span<const std::int16_t> samples) {
  std::vector<FeatureFrame> out;
  for (auto& frame : mfcc_.accept(samples)) {
    norm_.apply(frame);
    if (auto s = stacker_.push(std::move(frame))) out.push_back(std::move(*s));
  }
  return out;
}

void FeaturePipeline::reset() {
  mfcc_.reset();
  stacker_.reset();
}

std::vector<FeatureFrame> compute_features(const AudioBuffer& audio, const FrontendConfig& config,
                                           const NormStats& norm) {
  if (audio.sample_rate != config.sample_rate) throw ConfigError("audio sample rate mismatch");
  if (audio.samples.empty()) throw ConfigError("empty audio");
  FeaturePipeline pipeline(config, norm);
  return pipeline.accept(audio.samples);
}

}  // namespace qkws

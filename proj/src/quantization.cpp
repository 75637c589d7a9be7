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

#include "qkws/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qkws {

double QuantRange::step() const noexcept { return std::ldexp(1.0, step_exponent()); }

double round_half_away(double v) noexcept { return std::round(v); }

std::int8_t quantize_code(double v, QuantRange r) noexcept {
  if (std::isnan(v)) return 0;
  const double scaled = round_half_away(std::ldexp(v, -r.step_exponent()));
  return static_cast<std::int8_t>(std::clamp(scaled, -128.0, 127.0));
}

double dequantize_code(std::int32_t code, QuantRange r) noexcept {
  return std::ldexp(static_cast<double>(code), r.step_exponent());
}

double fake_quantize(double v, QuantRange r) noexcept {
  return dequantize_code(quantize_code(v, r), r);
}

std::int64_t shift_round(std::int64_t v, int shift) noexcept {
  if (shift <= 0) return v * (std::int64_t{1} << -shift);
  const std::int64_t half = std::int64_t{1} << (shift - 1);
  if (v >= 0) return (v + half) >> shift;
  return -((-v + half) >> shift);
}

std::int8_t rescale(std::int64_t acc, int acc_step_exponent, QuantRange to) noexcept {
  const std::int64_t code = shift_round(acc, to.step_exponent() - acc_step_exponent);
  return static_cast<std::int8_t>(std::clamp<std::int64_t>(code, -128, 127));
}

std::vector<double> QuantizedTensor::dequantize() const {
  std::vector<double> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) out[i] = value(i);
  return out;
}

int weight_exponent_for(double max_abs, int min_exponent) noexcept {
  int e = std::clamp(min_exponent, kMinWeightExponent, kMaxWeightExponent);
  while (e < kMaxWeightExponent && std::ldexp(1.0, e) < max_abs) ++e;
  return e;
}

QuantizedTensor quantize_weights(std::span<const float> values, std::vector<std::size_t> shape,
                                 int min_exponent) {
  std::size_t expected = 1;
  for (auto d : shape) expected *= d;
  if (expected != values.size()) {
    throw std::invalid_argument("quantize_weights: shape does not match value count");
  }
  double max_abs = 0.0;
  for (float v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("quantize_weights: non-finite weight");
    max_abs = std::max(max_abs, std::min(std::fabs(static_cast<double>(v)), kWeightClip));
  }
  QuantizedTensor t;
  t.shape = std::move(shape);
  t.range = QuantRange{weight_exponent_for(max_abs, min_exponent)};
  t.codes.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double clipped = std::clamp(static_cast<double>(values[i]), -kWeightClip, kWeightClip);
    t.codes[i] = quantize_code(clipped, t.range);
  }
  return t;
}

namespace {

double activation(ActivationKind kind, double x) {
  return kind == ActivationKind::kSigmoid ? 1.0 / (1.0 + std::exp(-x)) : std::tanh(x);
}

}  // namespace

ActivationLut::ActivationLut(ActivationKind kind) : kind_(kind) {
  for (int c = -128; c <= 127; ++c) {
    const double x = dequantize_code(c, kQ4);
    table_[static_cast<std::size_t>(c + 128)] = quantize_code(activation(kind, x), kQ1);
  }
}

const ActivationLut& sigmoid_lut() {
  static const ActivationLut lut(ActivationKind::kSigmoid);
  return lut;
}

const ActivationLut& tanh_lut() {
  static const ActivationLut lut(ActivationKind::kTanh);
  return lut;
}

}  // namespace qkws

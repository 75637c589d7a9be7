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

// Symmetric power-of-two 8-bit quantization.
//
// A range with exponent e covers [-2^e, +2^e) with a step of 2^e / 128, so
// code c represents c * 2^(e-7). Scale changes between ranges are shifts.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qkws {

inline constexpr int kMinWeightExponent = -10;
inline constexpr int kMaxWeightExponent = 3;
inline constexpr double kWeightClip = 8.0;

/// Range [-2^exponent, +2^exponent).
struct QuantRange {
  int exponent = 0;

  constexpr double bound() const noexcept;
  /// log2 of the quantization step.
  constexpr int step_exponent() const noexcept { return exponent - 7; }
  double step() const noexcept;

  friend constexpr bool operator==(QuantRange, QuantRange) = default;
};

inline constexpr QuantRange kQ1{0};   // gate and hidden outputs
inline constexpr QuantRange kQ4{2};   // activation inputs, cell state
inline constexpr QuantRange kQ16{4};  // logits

/// Round half away from zero.
double round_half_away(double v) noexcept;

/// Nearest int8 code of v in range r, clamped to [-128, 127].
std::int8_t quantize_code(double v, QuantRange r) noexcept;

/// Real value of a code.
double dequantize_code(std::int32_t code, QuantRange r) noexcept;

/// Fake quantization: clamp(round(v * 128 / r), -128, 127) * r / 128.
double fake_quantize(double v, QuantRange r) noexcept;

/// Shift by `shift` bits (positive = right) rounding half away from zero.
std::int64_t shift_round(std::int64_t v, int shift) noexcept;

/// Requantize an accumulator whose value is acc * 2^acc_step_exponent into
/// range `to`, saturating to int8.
std::int8_t rescale(std::int64_t acc, int acc_step_exponent, QuantRange to) noexcept;

/// Dense int8 tensor with a single power-of-two range.
struct QuantizedTensor {
  std::vector<std::size_t> shape;
  std::vector<std::int8_t> codes;
  QuantRange range;

  std::size_t size() const noexcept { return codes.size(); }
  double value(std::size_t i) const noexcept { return dequantize_code(codes[i], range); }
  std::vector<double> dequantize() const;
};

/// Post-training weight quantization. Values are clipped to [-8, 8]; the
/// exponent is the smallest one in [min_exponent, 3] whose range covers the
/// largest magnitude.
QuantizedTensor quantize_weights(std::span<const float> values,
                                 std::vector<std::size_t> shape,
                                 int min_exponent = kMinWeightExponent);

/// Exponent picked by quantize_weights for a given max magnitude.
int weight_exponent_for(double max_abs, int min_exponent = kMinWeightExponent) noexcept;

enum class ActivationKind { kSigmoid, kTanh };

/// Maps a Q_4 input code to a Q_1 output code.
class ActivationLut {
 public:
  explicit ActivationLut(ActivationKind kind);

  ActivationKind kind() const noexcept { return kind_; }
  std::int8_t operator()(std::int8_t q4_code) const noexcept {
    return table_[static_cast<std::uint8_t>(q4_code + 128)];
  }
  /// Entries indexed by code + 128.
  const std::array<std::int8_t, 256>& table() const noexcept { return table_; }

 private:
  ActivationKind kind_;
  std::array<std::int8_t, 256> table_{};
};

const ActivationLut& sigmoid_lut();
const ActivationLut& tanh_lut();

constexpr double QuantRange::bound() const noexcept {
  double b = 1.0;
  if (exponent >= 0) {
    for (int i = 0; i < exponent; ++i) b *= 2.0;
  } else {
    for (int i = 0; i < -exponent; ++i) b /= 2.0;
  }
  return b;
}

}  // namespace qkws

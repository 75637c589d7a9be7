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

// Stack&Skip acoustic model: tanh input projection, a stack of unidirectional
// LSTM layers and an affine output layer over |P| phones plus blank.
//
// Two numeric paths exist. Float models run the textbook LSTM in float.
// Quantized models run entirely on int8 codes with int32 matrix products:
// gate pre-activations are requantized to Q_4, squashed through the shared
// activation tables into Q_1, the cell state lives in Q_4, hidden outputs in
// Q_1 and logits in Q_16. Only the final softmax uses real arithmetic.

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "qkws/frontend.hpp"
#include "qkws/posteriorgram.hpp"
#include "qkws/quantization.hpp"

namespace qkws {

/// Phone names; index 0 is the blank class.
class PhoneTable {
 public:
  PhoneTable() = default;
  /// `phones` excludes blank.
  explicit PhoneTable(std::vector<std::string> phones, std::string blank_name = "<blk>");

  std::size_t num_classes() const noexcept { return names_.size(); }
  std::size_t num_phones() const noexcept { return names_.empty() ? 0 : names_.size() - 1; }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  /// Index of a phone, -1 when absent. Never returns the blank index.
  int find(const std::string& phone) const;

  friend bool operator==(const PhoneTable& a, const PhoneTable& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

enum Gate : std::size_t { kInputGate = 0, kCellInput = 1, kForgetGate = 2, kOutputGate = 3 };
inline constexpr std::array<const char*, 4> kGateSuffix = {"i", "j", "f", "o"};

// ---- float network ----------------------------------------------------------

struct FloatMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;  // row-major
};

struct FloatAffine {
  FloatMatrix w;
  std::vector<float> b;
};

struct FloatGate {
  FloatMatrix w_x;
  FloatMatrix w_h;
  std::vector<float> b;
};

struct FloatLstmLayer {
  std::array<FloatGate, 4> gates;  // indexed by Gate
  std::size_t input_dim() const noexcept { return gates[0].w_x.cols; }
  std::size_t units() const noexcept { return gates[0].w_x.rows; }
};

struct FloatNetwork {
  FloatAffine projection;
  std::vector<FloatLstmLayer> lstm;
  FloatAffine output;
};

// ---- quantized network ------------------------------------------------------

struct QuantAffine {
  QuantizedTensor w;  // [rows, cols]
  QuantizedTensor b;  // [rows]
};

struct QuantGate {
  QuantizedTensor w_x;
  QuantizedTensor w_h;
  QuantizedTensor b;
};

struct QuantLstmLayer {
  std::array<QuantGate, 4> gates;
  std::size_t input_dim() const noexcept { return gates[0].w_x.shape.at(1); }
  std::size_t units() const noexcept { return gates[0].w_x.shape.at(0); }
};

struct QuantNetwork {
  QuantAffine projection;
  std::vector<QuantLstmLayer> lstm;
  QuantAffine output;
};

/// log2 step of a gate accumulator: both products are aligned to the finer
/// of the two weight scales, with Q_1 operands.
int gate_accumulator_step(const QuantGate& gate) noexcept;
/// Lowest bias exponent that is exactly representable at the accumulator step.
int min_bias_exponent(int accumulator_step) noexcept;
/// Accumulator step of the projection (Q_4 input) and output (Q_1 input) layers.
int projection_accumulator_step(const QuantAffine& layer) noexcept;
int output_accumulator_step(const QuantAffine& layer) noexcept;

// ---- model ------------------------------------------------------------------

struct ModelShape {
  std::size_t input_dim = 100;
  std::size_t units = 64;
  std::size_t layers = 3;
  std::size_t num_classes = 41;  // |P| + 1
};

struct AcousticModel {
  FrontendConfig frontend;
  NormStats norm;
  PhoneTable phones;
  std::variant<FloatNetwork, QuantNetwork> network;

  bool quantized() const noexcept { return std::holds_alternative<QuantNetwork>(network); }
  ModelShape shape() const;
  std::size_t input_dim() const { return shape().input_dim; }
  std::size_t num_classes() const { return shape().num_classes; }
  /// Weights and biases of every layer (normalization statistics excluded).
  std::size_t parameter_count() const;
  /// Throws StructuralError on inconsistent shapes, exponents or phone table.
  void validate() const;
};

/// Float model with uniform random weights scaled by 1/sqrt(fan_in).
AcousticModel make_random_model(const ModelShape& shape, std::uint64_t seed);

/// Post-training quantization of a float model. Weights use quantize_weights;
/// each bias gets the exponent floor that makes it exact at its accumulator.
AcousticModel quantize_model(const AcousticModel& float_model);

// ---- inference --------------------------------------------------------------

struct FloatLstmState {
  std::vector<float> h;
  std::vector<float> c;
  explicit FloatLstmState(std::size_t units = 0) : h(units, 0.0f), c(units, 0.0f) {}
};

/// Codes: h in Q_1, c in Q_4.
struct QuantLstmState {
  std::vector<std::int8_t> h;
  std::vector<std::int8_t> c;
  explicit QuantLstmState(std::size_t units = 0) : h(units, 0), c(units, 0) {}
};

/// Gate codes of one quantized step, for inspection and testing.
struct QuantLstmTrace {
  std::array<std::vector<std::int8_t>, 4> preactivation;  // Q_4
  std::array<std::vector<std::int8_t>, 4> gate;           // Q_1
};

/// Float LSTM step; updates state in place.
void lstm_step(const FloatLstmLayer& layer, std::span<const float> x, FloatLstmState& state);

/// Integer LSTM layer with accumulator shifts and biases prepared once.
class QuantLstmKernel {
 public:
  explicit QuantLstmKernel(const QuantLstmLayer& layer);

  void step(std::span<const std::int8_t> x, QuantLstmState& state, QuantLstmTrace* trace = nullptr) const;
  std::size_t units() const noexcept { return layer_->units(); }

 private:
  struct PreparedGate {
    int acc_step = 0;
    int shift_x = 0;
    int shift_h = 0;
    std::vector<std::int64_t> bias;  // at acc_step
  };
  const QuantLstmLayer* layer_;
  std::array<PreparedGate, 4> prepared_;
};

/// Integer LSTM step; equivalent to QuantLstmKernel(layer).step(...).
void lstm_step(const QuantLstmLayer& layer, std::span<const std::int8_t> x, QuantLstmState& state,
               QuantLstmTrace* trace = nullptr);

/// Softmax in double precision, returned as float.
std::vector<float> softmax(std::span<const double> logits);

/// Per-stream inference state. Holds a reference to the model, which must
/// outlive it.
class ModelStream {
 public:
  explicit ModelStream(const AcousticModel& model);

  /// Consumes one stacked frame and returns its posterior row.
  std::vector<float> push(std::span<const float> frame);
  /// Output-layer logits of the last pushed frame (dequantized when quantized).
  const std::vector<double>& last_logits() const noexcept { return logits_; }
  void reset();

 private:
  const AcousticModel* model_;
  std::vector<FloatLstmState> float_states_;
  std::vector<QuantLstmState> quant_states_;
  std::vector<QuantLstmKernel> kernels_;
  std::vector<std::int64_t> proj_bias_;
  std::vector<std::int64_t> out_bias_;
  std::vector<double> logits_;
};

/// Posteriorgram with one row per stacked frame.
Posteriorgram forward(const AcousticModel& model, std::span<const FeatureFrame> frames);

}  // namespace qkws

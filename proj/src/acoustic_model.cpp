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

#include "qkws/acoustic_model.hpp"

#include <algorithm>
#include <cmath>

#include "qkws/errors.hpp"
#include "qkws/kernels.hpp"

namespace qkws {

PhoneTable::PhoneTable(std::vector<std::string> phones, std::string blank_name) {
  names_.reserve(phones.size() + 1);
  names_.push_back(std::move(blank_name));
  for (auto& p : phones) {
    if (p.empty()) throw StructuralError("empty phone name");
    if (p == names_.front() || index_.contains(p)) throw StructuralError("duplicate phone '" + p + "'");
    index_.emplace(p, static_cast<int>(names_.size()));
    names_.push_back(std::move(p));
  }
}

int PhoneTable::find(const std::string& phone) const {
  auto it = index_.find(phone);
  return it == index_.end() ? -1 : it->second;
}

// ---- quantization bookkeeping -------------------------------------------------

namespace {

constexpr int kQ1Step = kQ1.step_exponent();  // -7
constexpr int kQ4Step = kQ4.step_exponent();  // -5

kernels::MatrixView<std::int8_t> view(const QuantizedTensor& t) {
  return {t.codes, t.shape.at(0), t.shape.at(1)};
}

kernels::MatrixView<float> view(const FloatMatrix& m) { return {m.values, m.rows, m.cols}; }

std::vector<std::int64_t> bias_at_step(const QuantizedTensor& b, int acc_step) {
  std::vector<std::int64_t> out(b.codes.size());
  const int shift = acc_step - b.range.step_exponent();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = shift_round(b.codes[i], shift);
  return out;
}

float sigmoidf(float x) { return 1.0f / (1.0f + std::exp(-x)); }

}  // namespace

int gate_accumulator_step(const QuantGate& gate) noexcept {
  return std::min(gate.w_x.range.exponent, gate.w_h.range.exponent) - 7 + kQ1Step;
}

int projection_accumulator_step(const QuantAffine& layer) noexcept {
  return layer.w.range.step_exponent() + kQ4Step;
}

int output_accumulator_step(const QuantAffine& layer) noexcept {
  return layer.w.range.step_exponent() + kQ1Step;
}

int min_bias_exponent(int accumulator_step) noexcept {
  return std::clamp(accumulator_step + 7, kMinWeightExponent, kMaxWeightExponent);
}

// ---- model --------------------------------------------------------------------

ModelShape AcousticModel::shape() const {
  ModelShape s;
  if (const auto* f = std::get_if<FloatNetwork>(&network)) {
    s.input_dim = f->projection.w.cols;
    s.units = f->projection.w.rows;
    s.layers = f->lstm.size();
    s.num_classes = f->output.w.rows;
  } else {
    const auto& q = std::get<QuantNetwork>(network);
    s.input_dim = q.projection.w.shape.at(1);
    s.units = q.projection.w.shape.at(0);
    s.layers = q.lstm.size();
    s.num_classes = q.output.w.shape.at(0);
  }
  return s;
}

std::size_t AcousticModel::parameter_count() const {
  std::size_t n = 0;
  if (const auto* f = std::get_if<FloatNetwork>(&network)) {
    n += f->projection.w.values.size() + f->projection.b.size();
    for (const auto& layer : f->lstm) {
      for (const auto& g : layer.gates) n += g.w_x.values.size() + g.w_h.values.size() + g.b.size();
    }
    n += f->output.w.values.size() + f->output.b.size();
  } else {
    const auto& q = std::get<QuantNetwork>(network);
    n += q.projection.w.size() + q.projection.b.size();
    for (const auto& layer : q.lstm) {
      for (const auto& g : layer.gates) n += g.w_x.size() + g.w_h.size() + g.b.size();
    }
    n += q.output.w.size() + q.output.b.size();
  }
  return n;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw StructuralError(what);
}

void check_matrix(const FloatMatrix& m, std::size_t rows, std::size_t cols, const std::string& name) {
  require(m.rows == rows && m.cols == cols && m.values.size() == rows * cols,
          name + ": expected " + std::to_string(rows) + "x" + std::to_string(cols));
}

void check_tensor(const QuantizedTensor& t, std::vector<std::size_t> shape, const std::string& name) {
  require(t.shape == shape, name + ": unexpected shape");
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  require(t.codes.size() == n, name + ": code count does not match shape");
  require(t.range.exponent >= kMinWeightExponent && t.range.exponent <= kMaxWeightExponent,
          name + ": exponent out of range");
}

void check_bias(const QuantizedTensor& b, std::size_t rows, int acc_step, const std::string& name) {
  check_tensor(b, {rows}, name);
  require(b.range.step_exponent() >= acc_step, name + ": bias finer than its accumulator");
}

}  // namespace

void AcousticModel::validate() const {
  frontend.validate();
  const ModelShape s = shape();
  require(s.layers >= 1, "model needs at least one LSTM layer");
  require(s.input_dim == static_cast<std::size_t>(frontend.stacked_dim()),
          "model input width does not match the frontend stacked frame width");
  require(s.num_classes == phones.num_classes(), "output width does not match phone table (|P| + 1)");
  require(norm.mean.size() == norm.inv_std.size(), "normalization statistics size mismatch");
  require(norm.empty() || norm.mean.size() == static_cast<std::size_t>(frontend.n_mfcc),
          "normalization statistics do not match n_mfcc");

  if (const auto* f = std::get_if<FloatNetwork>(&network)) {
    check_matrix(f->projection.w, s.units, s.input_dim, "proj.w");
    require(f->projection.b.size() == s.units, "proj.b: size mismatch");
    std::size_t in = s.units;
    for (std::size_t l = 0; l < f->lstm.size(); ++l) {
      const auto& layer = f->lstm[l];
      const std::size_t units = layer.units();
      for (std::size_t g = 0; g < 4; ++g) {
        const std::string name = "lstm." + std::to_string(l) + "." + kGateSuffix[g];
        check_matrix(layer.gates[g].w_x, units, in, name + ".w_x");
        check_matrix(layer.gates[g].w_h, units, units, name + ".w_h");
        require(layer.gates[g].b.size() == units, name + ".b: size mismatch");
      }
      in = units;
    }
    check_matrix(f->output.w, s.num_classes, in, "out.w");
    require(f->output.b.size() == s.num_classes, "out.b: size mismatch");
  } else {
    const auto& q = std::get<QuantNetwork>(network);
    check_tensor(q.projection.w, {s.units, s.input_dim}, "proj.w");
    check_bias(q.projection.b, s.units, projection_accumulator_step(q.projection), "proj.b");
    std::size_t in = s.units;
    for (std::size_t l = 0; l < q.lstm.size(); ++l) {
      const auto& layer = q.lstm[l];
      require(layer.gates[0].w_x.shape.size() == 2, "lstm weights must be matrices");
      const std::size_t units = layer.units();
      for (std::size_t g = 0; g < 4; ++g) {
        const std::string name = "lstm." + std::to_string(l) + "." + kGateSuffix[g];
        check_tensor(layer.gates[g].w_x, {units, in}, name + ".w_x");
        check_tensor(layer.gates[g].w_h, {units, units}, name + ".w_h");
        check_bias(layer.gates[g].b, units, gate_accumulator_step(layer.gates[g]), name + ".b");
      }
      in = units;
    }
    check_tensor(q.output.w, {s.num_classes, in}, "out.w");
    check_bias(q.output.b, s.num_classes, output_accumulator_step(q.output), "out.b");
  }
}

AcousticModel make_random_model(const ModelShape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto matrix = [&](std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    const float scale = 1.5f / std::sqrt(static_cast<float>(cols));
    FloatMatrix m{rows, cols, std::vector<float>(rows * cols)};
    for (auto& v : m.values) v = dist(rng) * scale;
    return m;
  };
  auto vec = [&](std::size_t n, float lo, float hi) {
    std::uniform_real_distribution<float> dist(lo, hi);
    std::vector<float> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
  };

  AcousticModel model;
  if (shape.input_dim % 5 == 0) {
    model.frontend.n_mfcc = static_cast<int>(shape.input_dim / 5);
  } else {
    model.frontend.stack = 1;
    model.frontend.skip = 1;
    model.frontend.n_mfcc = static_cast<int>(shape.input_dim);
  }
  model.frontend.n_mel = std::max(model.frontend.n_mel, model.frontend.n_mfcc);

  std::vector<std::string> phones;
  for (std::size_t i = 1; i < shape.num_classes; ++i) phones.push_back("p" + std::to_string(i));
  model.phones = PhoneTable(std::move(phones));

  FloatNetwork net;
  net.projection = {matrix(shape.units, shape.input_dim), vec(shape.units, -0.2f, 0.2f)};
  std::size_t in = shape.units;
  for (std::size_t l = 0; l < shape.layers; ++l) {
    FloatLstmLayer layer;
    for (std::size_t g = 0; g < 4; ++g) {
      const float bias_center = g == kForgetGate ? 1.0f : 0.0f;
      layer.gates[g] = {matrix(shape.units, in), matrix(shape.units, shape.units),
                        vec(shape.units, bias_center - 0.2f, bias_center + 0.2f)};
    }
    net.lstm.push_back(std::move(layer));
    in = shape.units;
  }
  net.output = {matrix(shape.num_classes, in), vec(shape.num_classes, -0.5f, 0.5f)};
  model.network = std::move(net);
  model.validate();
  return model;
}

namespace {

QuantizedTensor quantize_matrix(const FloatMatrix& m) {
  return quantize_weights(m.values, {m.rows, m.cols});
}

QuantizedTensor quantize_bias(const std::vector<float>& b, int acc_step) {
  return quantize_weights(b, {b.size()}, min_bias_exponent(acc_step));
}

}  // namespace

AcousticModel quantize_model(const AcousticModel& float_model) {
  const auto* f = std::get_if<FloatNetwork>(&float_model.network);
  if (!f) throw StructuralError("model is already quantized");
  QuantNetwork q;
  q.projection.w = quantize_matrix(f->projection.w);
  q.projection.b = quantize_bias(f->projection.b, projection_accumulator_step(q.projection));
  for (const auto& layer : f->lstm) {
    QuantLstmLayer ql;
    for (std::size_t g = 0; g < 4; ++g) {
      auto& qg = ql.gates[g];
      qg.w_x = quantize_matrix(layer.gates[g].w_x);
      qg.w_h = quantize_matrix(layer.gates[g].w_h);
      qg.b = quantize_bias(layer.gates[g].b, gate_accumulator_step(qg));
    }
    q.lstm.push_back(std::move(ql));
  }
  q.output.w = quantize_matrix(f->output.w);
  q.output.b = quantize_bias(f->output.b, output_accumulator_step(q.output));

  AcousticModel out;
  out.frontend = float_model.frontend;
  out.norm = float_model.norm;
  out.phones = float_model.phones;
  out.network = std::move(q);
  out.validate();
  return out;
}

// ---- float LSTM ---------------------------------------------------------------

void lstm_step(const FloatLstmLayer& layer, std::span<const float> x, FloatLstmState& state) {
  const std::size_t units = layer.units();
  if (x.size() != layer.input_dim() || state.h.size() != units || state.c.size() != units) {
    throw StructuralError("lstm_step: input or state width mismatch");
  }
  std::array<std::vector<float>, 4> act;
  std::vector<float> tmp(units);
  for (std::size_t g = 0; g < 4; ++g) {
    const auto& gate = layer.gates[g];
    act[g].resize(units);
    kernels::matvec_f32(view(gate.w_x), x, act[g]);
    kernels::matvec_f32(view(gate.w_h), state.h, tmp);
    for (std::size_t u = 0; u < units; ++u) {
      const float pre = act[g][u] + tmp[u] + gate.b[u];
      act[g][u] = g == kCellInput ? std::tanh(pre) : sigmoidf(pre);
    }
  }
  for (std::size_t u = 0; u < units; ++u) {
    state.c[u] = act[kForgetGate][u] * state.c[u] + act[kInputGate][u] * act[kCellInput][u];
    state.h[u] = act[kOutputGate][u] * std::tanh(state.c[u]);
  }
}

// ---- quantized LSTM -----------------------------------------------------------

QuantLstmKernel::QuantLstmKernel(const QuantLstmLayer& layer) : layer_(&layer) {
  for (std::size_t g = 0; g < 4; ++g) {
    const auto& gate = layer.gates[g];
    auto& p = prepared_[g];
    p.acc_step = gate_accumulator_step(gate);
    p.shift_x = gate.w_x.range.exponent - std::min(gate.w_x.range.exponent, gate.w_h.range.exponent);
    p.shift_h = gate.w_h.range.exponent - std::min(gate.w_x.range.exponent, gate.w_h.range.exponent);
    p.bias = bias_at_step(gate.b, p.acc_step);
  }
}

void QuantLstmKernel::step(std::span<const std::int8_t> x, QuantLstmState& state, QuantLstmTrace* trace) const {
  const std::size_t units = layer_->units();
  if (x.size() != layer_->input_dim() || state.h.size() != units || state.c.size() != units) {
    throw StructuralError("lstm_step: input or state width mismatch");
  }
  std::array<std::vector<std::int8_t>, 4> gate_codes;
  std::vector<std::int32_t> acc_x(units), acc_h(units);
  for (std::size_t g = 0; g < 4; ++g) {
    const auto& gate = layer_->gates[g];
    const auto& p = prepared_[g];
    kernels::matvec_i8(view(gate.w_x), x, acc_x);
    kernels::matvec_i8(view(gate.w_h), state.h, acc_h);
    const ActivationLut& lut = g == kCellInput ? tanh_lut() : sigmoid_lut();
    gate_codes[g].resize(units);
    if (trace) trace->preactivation[g].resize(units);
    for (std::size_t u = 0; u < units; ++u) {
      const std::int64_t total = (std::int64_t{acc_x[u]} << p.shift_x) + (std::int64_t{acc_h[u]} << p.shift_h) + p.bias[u];
      const std::int8_t pre = rescale(total, p.acc_step, kQ4);
      gate_codes[g][u] = lut(pre);
      if (trace) trace->preactivation[g][u] = pre;
    }
  }
  for (std::size_t u = 0; u < units; ++u) {
    // f*c is at step 2^-12, i*j at 2^-14.
    const std::int64_t cell = std::int64_t{gate_codes[kForgetGate][u]} * state.c[u] * 4 +
                              std::int64_t{gate_codes[kInputGate][u]} * gate_codes[kCellInput][u];
    state.c[u] = rescale(cell, 2 * kQ1Step, kQ4);
    const std::int64_t out = std::int64_t{gate_codes[kOutputGate][u]} * tanh_lut()(state.c[u]);
    state.h[u] = rescale(out, 2 * kQ1Step, kQ1);
  }
  if (trace) trace->gate = std::move(gate_codes);
}

void lstm_step(const QuantLstmLayer& layer, std::span<const std::int8_t> x, QuantLstmState& state,
               QuantLstmTrace* trace) {
  QuantLstmKernel(layer).step(x, state, trace);
}

// ---- network ------------------------------------------------------------------

std::vector<float> softmax(std::span<const double> logits) {
  std::vector<float> out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  std::vector<double> e(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) sum += e[i] = std::exp(logits[i] - mx);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<float>(e[i] / sum);
  return out;
}

ModelStream::ModelStream(const AcousticModel& model) : model_(&model) {
  if (const auto* f = std::get_if<FloatNetwork>(&model.network)) {
    for (const auto& layer : f->lstm) float_states_.emplace_back(layer.units());
  } else {
    const auto& q = std::get<QuantNetwork>(model.network);
    for (const auto& layer : q.lstm) {
      quant_states_.emplace_back(layer.units());
      kernels_.emplace_back(layer);
    }
    proj_bias_ = bias_at_step(q.projection.b, projection_accumulator_step(q.projection));
    out_bias_ = bias_at_step(q.output.b, output_accumulator_step(q.output));
  }
}

void ModelStream::reset() {
  for (auto& s : float_states_) s = FloatLstmState(s.h.size());
  for (auto& s : quant_states_) s = QuantLstmState(s.h.size());
}

std::vector<float> ModelStream::push(std::span<const float> frame) {
  if (frame.size() != model_->input_dim()) {
    throw StructuralError("frame width " + std::to_string(frame.size()) + " does not match model input width " +
                          std::to_string(model_->input_dim()));
  }
  if (const auto* f = std::get_if<FloatNetwork>(&model_->network)) {
    std::vector<float> x(f->projection.w.rows);
    kernels::matvec_f32(view(f->projection.w), frame, x);
    for (std::size_t u = 0; u < x.size(); ++u) x[u] = std::tanh(x[u] + f->projection.b[u]);
    for (std::size_t l = 0; l < f->lstm.size(); ++l) {
      lstm_step(f->lstm[l], x, float_states_[l]);
      x = float_states_[l].h;
    }
    std::vector<float> out(f->output.w.rows);
    kernels::matvec_f32(view(f->output.w), x, out);
    logits_.resize(out.size());
    for (std::size_t k = 0; k < out.size(); ++k) logits_[k] = static_cast<double>(out[k] + f->output.b[k]);
    return softmax(logits_);
  }

  const auto& q = std::get<QuantNetwork>(model_->network);
  std::vector<std::int8_t> in(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) in[i] = quantize_code(frame[i], kQ4);

  const int proj_step = projection_accumulator_step(q.projection);
  const auto& proj_bias = proj_bias_;
  std::vector<std::int32_t> acc(q.projection.w.shape[0]);
  kernels::matvec_i8(view(q.projection.w), in, acc);
  std::vector<std::int8_t> x(acc.size());
  for (std::size_t u = 0; u < acc.size(); ++u) x[u] = tanh_lut()(rescale(acc[u] + proj_bias[u], proj_step, kQ4));

  for (std::size_t l = 0; l < kernels_.size(); ++l) {
    kernels_[l].step(x, quant_states_[l]);
    x = quant_states_[l].h;
  }

  const int out_step = output_accumulator_step(q.output);
  const auto& out_bias = out_bias_;
  std::vector<std::int32_t> out(q.output.w.shape[0]);
  kernels::matvec_i8(view(q.output.w), x, out);
  logits_.resize(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    logits_[k] = dequantize_code(rescale(out[k] + out_bias[k], out_step, kQ16), kQ16);
  }
  return softmax(logits_);
}

Posteriorgram forward(const AcousticModel& model, std::span<const FeatureFrame> frames) {
  ModelStream stream(model);
  Posteriorgram post(0, model.num_classes());
  for (const auto& f : frames) post.append_row(stream.push(f));
  return post;
}

}  // namespace qkws

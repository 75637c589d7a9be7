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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include "qkws/ctc.hpp"

namespace qkws::oracle {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double weight(const QuantizedTensor& t, std::size_t r, std::size_t c) { return t.value(r * t.shape[1] + c); }

std::vector<double> affine(const QuantizedTensor& w, const QuantizedTensor& b, std::span<const double> x) {
  std::vector<double> y(w.shape[0]);
  for (std::size_t r = 0; r < y.size(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) acc += weight(w, r, c) * x[c];
    y[r] = acc + b.value(r);
  }
  return y;
}

}  // namespace

RefLstmState to_ref_state(const QuantLstmState& s) {
  RefLstmState r;
  for (auto v : s.h) r.h.push_back(dequantize_code(v, kQ1));
  for (auto v : s.c) r.c.push_back(dequantize_code(v, kQ4));
  return r;
}

void ref_lstm_step(const QuantLstmLayer& layer, std::span<const double> x, RefLstmState& state,
                   RefLstmTrace* trace) {
  const std::size_t units = layer.units();
  std::vector<double> gate[4];
  for (std::size_t g = 0; g < 4; ++g) {
    const auto& p = layer.gates[g];
    gate[g].resize(units);
    if (trace) trace->preactivation[g].resize(units);
    for (std::size_t u = 0; u < units; ++u) {
      double acc = 0.0;
      for (std::size_t c = 0; c < x.size(); ++c) acc += weight(p.w_x, u, c) * x[c];
      for (std::size_t c = 0; c < units; ++c) acc += weight(p.w_h, u, c) * state.h[c];
      acc += p.b.value(u);
      const double pre = fake_quantize(acc, kQ4);
      gate[g][u] = fake_quantize(g == kCellInput ? std::tanh(pre) : sigmoid(pre), kQ1);
      if (trace) trace->preactivation[g][u] = pre;
    }
  }
  for (std::size_t u = 0; u < units; ++u) {
    state.c[u] = fake_quantize(gate[kForgetGate][u] * state.c[u] + gate[kInputGate][u] * gate[kCellInput][u], kQ4);
    state.h[u] = fake_quantize(gate[kOutputGate][u] * fake_quantize(std::tanh(state.c[u]), kQ1), kQ1);
  }
  if (trace) {
    for (std::size_t g = 0; g < 4; ++g) trace->gate[g] = gate[g];
  }
}

Posteriorgram ref_forward(const AcousticModel& model, std::span<const FeatureFrame> frames) {
  const auto& q = std::get<QuantNetwork>(model.network);
  std::vector<RefLstmState> states;
  for (const auto& layer : q.lstm) {
    states.push_back({std::vector<double>(layer.units(), 0.0), std::vector<double>(layer.units(), 0.0)});
  }
  Posteriorgram post(0, model.num_classes());
  for (const auto& frame : frames) {
    std::vector<double> in(frame.size());
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = fake_quantize(frame[i], kQ4);
    auto x = affine(q.projection.w, q.projection.b, in);
    for (auto& v : x) v = fake_quantize(std::tanh(fake_quantize(v, kQ4)), kQ1);
    for (std::size_t l = 0; l < q.lstm.size(); ++l) {
      ref_lstm_step(q.lstm[l], x, states[l]);
      x = states[l].h;
    }
    auto logits = affine(q.output.w, q.output.b, x);
    double mx = -1e300;
    for (auto& v : logits) mx = std::max(mx, v = fake_quantize(v, kQ16));
    double sum = 0.0;
    for (auto& v : logits) sum += v = std::exp(v - mx);
    std::vector<float> row(logits.size());
    for (std::size_t k = 0; k < row.size(); ++k) row[k] = static_cast<float>(logits[k] / sum);
    post.append_row(row);
  }
  return post;
}

QuantLstmLayer random_quant_layer(std::size_t input_dim, std::size_t units, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> unit(-1.0f, 1.0f);
  std::uniform_int_distribution<int> scale_exp(-6, 3);
  auto matrix = [&](std::size_t rows, std::size_t cols) {
    const float scale = std::ldexp(1.0f, scale_exp(rng));
    std::vector<float> v(rows * cols);
    for (auto& x : v) x = unit(rng) * scale;
    return quantize_weights(v, {rows, cols});
  };
  QuantLstmLayer layer;
  for (std::size_t g = 0; g < 4; ++g) {
    auto& gate = layer.gates[g];
    gate.w_x = matrix(units, input_dim);
    gate.w_h = matrix(units, units);
    const float scale = std::ldexp(1.0f, scale_exp(rng));
    std::vector<float> b(units);
    for (auto& x : b) x = unit(rng) * scale;
    gate.b = quantize_weights(b, {units}, min_bias_exponent(gate_accumulator_step(gate)));
  }
  return layer;
}

Enumerated enumerate_alignments(const Posteriorgram& post, std::size_t start, std::size_t end,
                                std::span<const int> seq) {
  const std::size_t L = end - start + 1;
  const std::size_t C = post.cols();
  std::vector<int> labels(L, 0);
  Enumerated out;
  bool any = false;
  for (;;) {
    // B: merge repeats, drop blanks.
    std::vector<int> collapsed;
    int prev = -1;
    for (int l : labels) {
      if (l != prev && l != 0) collapsed.push_back(l);
      prev = l;
    }
    if (std::equal(collapsed.begin(), collapsed.end(), seq.begin(), seq.end())) {
      double p = 1.0;
      for (std::size_t i = 0; i < L; ++i) p *= std::max(static_cast<double>(post(start + i, labels[i])), 1e-12);
      out.sum += p;
      out.max = any ? std::max(out.max, p) : p;
      any = true;
    }
    std::size_t i = 0;
    while (i < L && ++labels[i] == static_cast<int>(C)) labels[i++] = 0;
    if (i == L) break;
  }
  return out;
}

Posteriorgram random_posteriorgram(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double sharpness) {
  std::normal_distribution<double> n(0.0, sharpness);
  Posteriorgram post(rows, cols);
  for (std::size_t t = 0; t < rows; ++t) {
    std::vector<double> e(cols);
    double s = 0.0;
    for (auto& v : e) s += v = std::exp(n(rng));
    for (std::size_t c = 0; c < cols; ++c) post(t, c) = static_cast<float>(e[c] / s);
  }
  return post;
}

std::vector<DetectionCandidate> exhaustive_detect(const Posteriorgram& post,
                                                  const std::vector<std::vector<std::vector<int>>>& prons,
                                                  ConfidenceKind kind, double threshold, std::size_t max_segment) {
  std::vector<DetectionCandidate> out;
  for (std::size_t e = 0; e < post.rows(); ++e) {
    for (std::size_t s = 0; s <= e; ++s) {
      if (e - s + 1 > max_segment) continue;
      double blank = 0.0, best = 0.0;
      for (std::size_t t = s; t <= e; ++t) {
        const auto row = post.row(t);
        blank += row[0];
        best += floored_log(*std::max_element(row.begin(), row.end()));
      }
      for (std::size_t k = 0; k < prons.size(); ++k) {
        double conf = -1.0;
        for (const auto& pron : prons[k]) {
          const auto v = ctc_viterbi(post, {s, e}, pron);
          if (v.log_prob == kLogZero) continue;
          conf = std::max(conf, score(kind, {v.log_prob, best, static_cast<double>(e - s + 1), blank}));
        }
        if (conf > threshold) out.push_back({static_cast<int>(k), s, e, conf});
      }
    }
  }
  std::sort(out.begin(), out.end(), candidate_order);
  return out;
}

std::vector<DetectionCandidate> brute_force_sequence(std::span<const DetectionCandidate> candidates) {
  std::vector<DetectionCandidate> v(candidates.begin(), candidates.end());
  std::sort(v.begin(), v.end(), candidate_order);
  std::vector<DetectionCandidate> best;
  double best_sum = 0.0;
  const std::size_t n = v.size();
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<DetectionCandidate> pick;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask >> i & 1)) continue;
      if (!pick.empty() && !(pick.back().end < v[i].start)) ok = false;
      pick.push_back(v[i]);
    }
    if (!ok) continue;
    double sum = 0.0;
    for (const auto& c : pick) sum += c.confidence;
    const bool better = sum > best_sum ||
                        (sum == best_sum && !best.empty() &&
                         (pick.size() < best.size() ||
                          (pick.size() == best.size() && pick.back().end < best.back().end)));
    if (better) {
      best = std::move(pick);
      best_sum = sum;
    }
  }
  return best;
}

}  // namespace qkws::oracle

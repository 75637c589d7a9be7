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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qkws/acoustic_model.hpp"
#include "qkws/confidence.hpp"
#include "qkws/ctc.hpp"
#include "qkws/decoder.hpp"
#include "qkws/keywords.hpp"
#include "qkws/metrics.hpp"
#include "qkws/model_io.hpp"
#include "qkws/pipeline.hpp"
#include "qkws/postproc.hpp"
#include "qkws/quantization.hpp"

using namespace qkws;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

bool same_candidates(const std::vector<DetectionCandidate>& a, const std::vector<DetectionCandidate>& b,
                     double* max_diff = nullptr) {
  if (a.size() != b.size()) return false;
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].keyword != b[i].keyword || a[i].start != b[i].start || a[i].end != b[i].end) return false;
    diff = std::max(diff, std::fabs(a[i].confidence - b[i].confidence));
  }
  if (max_diff) *max_diff = diff;
  return true;
}

// ---------------------------------------------------------------------------

Outcome quantizer_exactness() {
  Outcome o;
  o.require(fake_quantize(0.5, kQ1) == 0.5, "0.5 at Q1");
  o.require(fake_quantize(3.1, kQ4) == 3.09375, "3.1 at Q4");
  o.require(fake_quantize(1.5, kQ1) == 0.9921875, "1.5 at Q1");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  const QuantRange ranges[] = {kQ1, kQ4, kQ16};
  for (int i = 0; i < 1000000 && o.pass; ++i) {
    const QuantRange r = ranges[i % 3];
    const double v = u(rng);
    const double q = fake_quantize(v, r);
    o.require(fake_quantize(q, r) == q, "idempotence");
    if (v >= -r.bound() && v <= r.bound() - r.step()) o.require(std::fabs(q - v) <= r.step() / 2, "half-step bound");
  }
  if (o.pass) o.detail = "3 hand values, 1e6 random values";
  return o;
}

Outcome lstm_bit_exactness() {
  Outcome o;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> code(-128, 127);
  const std::size_t widths[] = {2, 4, 8};
  std::size_t compared = 0;
  for (int trial = 0; trial < 1000 && o.pass; ++trial) {
    const std::size_t units = widths[trial % 3];
    const std::size_t in = widths[(trial / 3) % 3];
    const auto layer = oracle::random_quant_layer(in, units, rng);
    QuantLstmState state(units);
    for (auto& v : state.h) v = static_cast<std::int8_t>(code(rng));
    for (auto& v : state.c) v = static_cast<std::int8_t>(code(rng));
    auto ref = oracle::to_ref_state(state);
    std::vector<std::int8_t> x(in);
    std::vector<double> xr(in);
    for (std::size_t i = 0; i < in; ++i) {
      x[i] = static_cast<std::int8_t>(code(rng));
      xr[i] = dequantize_code(x[i], kQ1);
    }
    QuantLstmTrace trace;
    oracle::RefLstmTrace rtrace;
    lstm_step(layer, x, state, &trace);
    oracle::ref_lstm_step(layer, xr, ref, &rtrace);
    for (std::size_t g = 0; g < 4; ++g) {
      for (std::size_t u = 0; u < units; ++u) {
        o.require(dequantize_code(trace.preactivation[g][u], kQ4) == rtrace.preactivation[g][u], "pre-activation");
        o.require(dequantize_code(trace.gate[g][u], kQ1) == rtrace.gate[g][u], "gate");
      }
    }
    for (std::size_t u = 0; u < units; ++u) {
      o.require(dequantize_code(state.h[u], kQ1) == ref.h[u], "hidden state");
      o.require(dequantize_code(state.c[u], kQ4) == ref.c[u], "cell state");
      compared += 10;
    }
  }
  if (o.pass) o.detail = "1000 cases, " + std::to_string(compared) + " values equal";
  return o;
}

Outcome ctc_oracle() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> T(1, 5), P(1, 3), L(1, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto phones = static_cast<std::size_t>(P(rng));
    const auto post = oracle::random_posteriorgram(static_cast<std::size_t>(T(rng)), phones + 1, rng);
    std::uniform_int_distribution<int> ph(1, static_cast<int>(phones));
    std::vector<int> seq(static_cast<std::size_t>(L(rng)));
    for (auto& s : seq) s = ph(rng);
    const Segment seg{0, post.rows() - 1};
    const auto e = oracle::enumerate_alignments(post, 0, seg.end, seq);
    const double f = ctc_forward(post, seg, seq);
    const double v = ctc_viterbi(post, seg, seq).log_prob;
    if (e.sum == 0.0) {
      o.require(f == kLogZero && v == kLogZero, "infeasible case");
      continue;
    }
    const double rf = std::fabs(std::exp(f) - e.sum) / e.sum;
    const double rv = std::fabs(std::exp(v) - e.max) / e.max;
    worst = std::max({worst, rf, rv});
  }
  o.require(worst <= 1e-9, "relative error above 1e-9");
  std::ostringstream s;
  s << "200 cases, max relative error " << worst;
  if (o.pass) o.detail = s.str();
  return o;
}

Outcome confidence_closed_forms() {
  Outcome o;
  const ConfidenceKind raw{Normalization::kRaw, false}, nf{Normalization::kFrames, false},
      nb{Normalization::kNoBlank, false};
  const double c10 = score(raw, {10 * std::log(0.99), 0.0, 10, 0});
  const double c30 = score(raw, {30 * std::log(0.99), 0.0, 30, 0});
  o.require(std::round(c10 * 1e4) / 1e4 == 0.9044, "raw over 10 frames");
  o.require(std::round(c30 * 1e4) / 1e4 == 0.7397, "raw over 30 frames");
  o.require(std::round(c10 * 100) / 100 == 0.90 && std::round(c30 * 100) / 100 == 0.74, "quoted two-digit values");
  for (double p : {0.1, 0.37, 0.5, 0.99}) {
    for (int n : {1, 7, 30}) {
      o.require(std::fabs(score(nf, {n * std::log(p), 0.0, static_cast<double>(n), 0}) - p) <= 1e-12, "nf constant p");
    }
  }
  // Appending certain-blank frames: Viterbi score and non-blank count unchanged.
  std::mt19937_64 rng(4);
  const auto post = oracle::random_posteriorgram(8, 4, rng, 2.0);
  const std::vector<int> seq = {1, 3};
  const SegmentPrefix pre(post);
  const double base =
      score(nb, {ctc_viterbi(post, {0, 7}, seq).log_prob, 0.0, 8.0, pre.blank_mass({0, 7})});
  Posteriorgram padded = post;
  const std::vector<float> blank = {1.0f, 0.0f, 0.0f, 0.0f};
  for (int k = 0; k < 10; ++k) {
    padded.append_row(blank);
    const std::size_t end = padded.rows() - 1;
    const SegmentPrefix pp(padded);
    const double c = score(nb, {ctc_viterbi(padded, {0, end}, seq).log_prob, 0.0, static_cast<double>(end + 1),
                                pp.blank_mass({0, end})});
    o.require(std::fabs(c - base) <= 1e-12, "nb invariance under blank padding");
  }
  std::ostringstream s;
  s << "raw10=" << c10 << " raw30=" << c30;
  if (o.pass) o.detail = s.str();
  return o;
}

Outcome decoder_oracle() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> rows(1, 25), phones(2, 5), nk(1, 3), na(1, 2), len(1, 4);
  std::uniform_real_distribution<double> tau(0.05, 0.7);
  const ConfidenceKind kinds[] = {{Normalization::kRaw, true},     {Normalization::kFrames, false},
                                  {Normalization::kNoBlank, false}, {Normalization::kFrames, true},
                                  {Normalization::kNoBlank, true}};
  std::size_t total = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int P = phones(rng);
    const auto post = oracle::random_posteriorgram(static_cast<std::size_t>(rows(rng)),
                                                   static_cast<std::size_t>(P + 1), rng, 2.5);
    std::uniform_int_distribution<int> ph(1, P);
    std::vector<std::vector<std::vector<int>>> prons(static_cast<std::size_t>(nk(rng)));
    for (auto& alts : prons) {
      alts.resize(static_cast<std::size_t>(na(rng)));
      for (auto& p : alts) {
        p.resize(static_cast<std::size_t>(len(rng)));
        for (auto& x : p) x = ph(rng);
      }
    }
    const KeywordTrie trie(prons, static_cast<std::size_t>(P + 1));
    const auto kind = kinds[trial % 5];
    const double threshold = tau(rng);
    const auto got = detect(post, trie, DecoderConfig::exhaustive(threshold, kind));
    const auto want = oracle::exhaustive_detect(post, prons, kind, threshold);
    double diff = 0.0;
    o.require(same_candidates(got, want, &diff), "candidate sets differ");
    worst = std::max(worst, diff);
    total += want.size();
  }
  o.require(worst <= 1e-12, "confidence mismatch");
  std::ostringstream s;
  s << "100 instances, " << total << " candidates, max confidence difference " << worst;
  if (o.pass) o.detail = s.str();
  return o;
}

Outcome optimization_safety() {
  Outcome o;
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    auto post = oracle::random_posteriorgram(25, 5, rng, 2.0);
    // Include certain-blank rows so blank_skip = 1.0 meets its boundary.
    for (std::size_t t = 0; t < post.rows(); t += 4) {
      auto row = post.row(t);
      std::fill(row.begin(), row.end(), 0.0f);
      row[kBlank] = 1.0f;
    }
    const KeywordTrie trie({{{1, 2}}, {{3}, {4, 2}}, {{1, 3, 4}}}, 5);
    const auto baseline = DecoderConfig::exhaustive(0.2, {Normalization::kNoBlank, false});
    const auto ref = detect(post, trie, baseline);
    auto c = baseline;
    c.blank_skip = 1.0;
    o.require(detect(post, trie, c) == ref, "blank_skip = 1");
    c = baseline;
    c.prune_nll = std::numeric_limits<double>::infinity();
    o.require(detect(post, trie, c) == ref, "prune = inf");
    c = baseline;
    c.subsample = 1;
    o.require(detect(post, trie, c) == ref, "subsample = 1");
    c = baseline;
    c.max_segment = post.rows();
    o.require(detect(post, trie, c) == ref, "S_max = T");
  }

  // 60% of the frames are confident blanks.
  Posteriorgram post(0, 6);
  std::mt19937_64 r2(7);
  std::uniform_int_distribution<int> ph(1, 5);
  for (int t = 0; t < 1000; ++t) {
    std::vector<float> row(6, 0.0f);
    if (t % 5 < 3) {
      row[0] = 0.97f;
      for (std::size_t c = 1; c < 6; ++c) row[c] = 0.006f;
    } else {
      row[0] = 0.1f;
      row[static_cast<std::size_t>(ph(r2))] = 0.8f;
      for (auto& v : row) v += 0.02f;
    }
    post.append_row(row);
  }
  const KeywordTrie trie({{{1, 2}}, {{3, 4, 5}}}, 6);
  DecoderConfig off;
  off.blank_skip = 1.0;
  DecoderConfig on;
  on.blank_skip = 0.95;
  DecoderStats s_off, s_on;
  detect(post, trie, off, &s_off);
  detect(post, trie, on, &s_on);
  const double ratio = static_cast<double>(s_on.frames_scored) / static_cast<double>(s_off.frames_scored);
  o.require(ratio <= 0.42, "blank skipping scored too many frames");
  std::ostringstream s;
  s << "4 switches x 30 inputs unchanged; scored frames " << s_on.frames_scored << "/" << s_off.frames_scored
    << " = " << ratio;
  if (o.pass) o.detail = s.str();
  return o;
}

Outcome postproc_correctness() {
  Outcome o;
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> n(0, 12), f(0, 30), len(0, 6);
  std::uniform_int_distribution<int> kw(0, 3), conf(1, 20);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<DetectionCandidate> c;
    const std::size_t count = n(rng);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t s = f(rng);
      c.push_back({kw(rng), s, s + len(rng), conf(rng) / 20.0});
    }
    o.require(sequence(c) == oracle::brute_force_sequence(c), "sequence differs from brute force");
  }
  const std::vector<DetectionCandidate> ab = {{0, 1, 5, 0.9}, {1, 3, 8, 0.95}};
  o.require(greedy(ab) == DetectionList{{0, 1, 5, 0.9}}, "greedy example 1");
  o.require(greedy({}).empty(), "greedy on empty input");
  const std::vector<DetectionCandidate> same_end = {{0, 2, 6, 0.7}, {1, 1, 6, 0.9}};
  o.require(greedy(same_end) == DetectionList{{1, 1, 6, 0.9}}, "greedy example 2");
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<DetectionCandidate> c;
    const std::size_t count = n(rng) * 4;
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t s = f(rng) * 2;
      c.push_back({kw(rng), s, s + len(rng), conf(rng) / 20.0});
    }
    const auto g = greedy(c), s = sequence(c);
    o.require(is_non_overlapping(g) && is_non_overlapping(s), "overlap");
    o.require(total_confidence(s) >= total_confidence(g), "sequence below greedy");
  }
  if (o.pass) o.detail = "500 brute-force sets, 3 hand examples, 2000 fuzz cases";
  return o;
}

Outcome streaming_equals_batch() {
  Outcome o;
  const auto model = quantize_model(make_random_model({100, 64, 3, 12}, 9));
  const KeywordTrie trie({{{1, 2}}, {{3, 4}}, {{5}}, {{6, 7, 8}}}, 12);
  DecoderConfig cfg;
  cfg.threshold = 0.05;
  cfg.confidence = {Normalization::kFrames, false};
  cfg.prune_nll = 10.0;
  cfg.blank_skip = 1.0;
  std::mt19937_64 rng(10);
  std::normal_distribution<double> g(0.0, 2500.0);
  AudioBuffer audio;
  audio.sample_rate = 16000;
  audio.samples.resize(32000);
  for (auto& s : audio.samples) s = static_cast<std::int16_t>(std::clamp(g(rng), -32768.0, 32767.0));

  const auto post = posteriors_from_audio(model, audio);
  const auto batch = detect(post, trie, cfg);
  o.require(!batch.empty(), "no candidates to compare");
  StreamingSpotter spotter(model, trie, cfg);
  std::uniform_int_distribution<std::size_t> chunk(1, 4000);
  for (int round = 0; round < 50; ++round) {
    spotter.reset();
    std::vector<DetectionCandidate> streamed;
    for (std::size_t pos = 0; pos < audio.samples.size();) {
      const std::size_t n = std::min(chunk(rng), audio.samples.size() - pos);
      auto c = spotter.accept_audio(std::span(audio.samples).subspan(pos, n));
      streamed.insert(streamed.end(), c.begin(), c.end());
      pos += n;
    }
    o.require(spotter.posteriors() == post, "posteriorgram differs");
    o.require(streamed == batch, "candidates differ");
  }
  if (o.pass) {
    o.detail = "50 chunkings, " + std::to_string(post.rows()) + " frames, " + std::to_string(batch.size()) +
               " candidates";
  }
  return o;
}

Outcome size_accounting() {
  Outcome o;
  const std::pair<std::size_t, std::size_t> shapes[] = {{3, 64}, {5, 64}, {3, 96}, {5, 96}, {3, 128}};
  std::ostringstream s;
  std::size_t prev = 0;
  for (const auto& [layers, units] : shapes) {
    const auto model = quantize_model(make_random_model({100, units, layers, 41}, layers * 1000 + units));
    const std::size_t bytes = encode_model(model).size();
    const std::size_t params = model.parameter_count();
    o.require(bytes > prev, "sizes not monotone");
    prev = bytes;
    const double overhead = static_cast<double>(bytes - params) / static_cast<double>(params);
    o.require(overhead < 0.05, "more than 5% over the parameter count");
    if (layers == 5 && units == 96) o.require(bytes < 500 * 1024, "5x96 file is not below 500 KB");
    s << layers << "x" << units << "=" << bytes << "B ";
  }
  if (o.pass) o.detail = s.str();
  return o;
}

// ---- mini spoken-language-understanding set --------------------------------

struct MiniSlu {
  PhoneTable phones;
  std::vector<Keyword> keywords;
  std::vector<std::vector<std::string>> filler;  // phone strings of non-keyword words
};

MiniSlu mini_slu() {
  const char* lexicon = R"(turn t1 t2 t3
on o1 o2
off f1 f2 f3
lights l1 l2 l3
kitchen k1 k2 k3 k4
bedroom b1 b2 b3
brighter r1 r2 r3
dimmer d1 d2 d3
music m1 m2 m3
stop s1 s2
please z1 z2
the z3 z4
in z5 z6 z1
)";
  const auto lex = load_lexicon(lexicon);
  MiniSlu m;
  std::vector<std::string> names;
  for (const auto& [word, prons] : lex.entries) {
    for (const auto& p : prons) names.insert(names.end(), p.begin(), p.end());
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  m.phones = PhoneTable(names);
  m.keywords = parse_keyword_set(R"({"keywords": [
      {"name": "turn on"}, {"name": "turn off"}, {"name": "lights"}, {"name": "kitchen"},
      {"name": "bedroom"}, {"name": "brighter"}, {"name": "dimmer"}, {"name": "music"}, {"name": "stop"}]})",
                                 &lex);
  for (const char* w : {"please", "the", "in"}) m.filler.push_back(lex.find(w)->front());
  return m;
}

// Two frames per phone, one blank frame between phones and a few between
// words. One frame in ten is noisy: its peak drops to 0.6 and 0.3 goes to a
// random other class.
Posteriorgram spell(const MiniSlu& m, const std::vector<std::vector<std::string>>& words, std::mt19937_64& rng) {
  const std::size_t C = m.phones.num_classes();
  Posteriorgram post(0, C);
  std::uniform_int_distribution<std::size_t> other(0, C - 1);
  std::uniform_int_distribution<int> gap(2, 5);
  std::size_t frame = 0;
  auto emit = [&](std::size_t label) {
    std::vector<float> row(C, static_cast<float>(0.1 / static_cast<double>(C - 1)));
    row[label] = 0.9f;
    if (++frame % 10 == 0) {
      std::size_t o = other(rng);
      while (o == label) o = other(rng);
      row[label] = 0.6f;
      row[o] += 0.3f;
    }
    post.append_row(row);
  };
  for (int k = 0; k < gap(rng); ++k) emit(kBlank);
  for (const auto& w : words) {
    for (const auto& p : w) {
      const auto idx = static_cast<std::size_t>(m.phones.find(p));
      emit(idx);
      emit(idx);
      emit(kBlank);
    }
    for (int k = 0; k < gap(rng); ++k) emit(kBlank);
  }
  return post;
}

Outcome end_to_end_mini_slu() {
  Outcome o;
  const auto m = mini_slu();
  const auto trie = KeywordTrie::build(m.keywords, m.phones);
  DecoderConfig cfg;
  cfg.threshold = 0.5;
  cfg.confidence = {Normalization::kNoBlank, false};
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> nkw(1, 3), kw(0, static_cast<int>(m.keywords.size()) - 1),
      nfill(0, 2), fill(0, static_cast<int>(m.filler.size()) - 1);
  std::vector<QueryResult> results;
  for (int q = 0; q < 20; ++q) {
    std::vector<std::vector<std::string>> words;
    std::vector<int> reference;
    const int n = nkw(rng);
    for (int i = 0; i < n; ++i) {
      for (int f = nfill(rng); f > 0; --f) words.push_back(m.filler[static_cast<std::size_t>(fill(rng))]);
      const int k = kw(rng);
      reference.push_back(k);
      words.push_back(m.keywords[static_cast<std::size_t>(k)].pronunciations.front());
    }
    const auto post = spell(m, words, rng);
    const auto detections = postprocess(detect(post, trie, cfg), PostProcessor::kSequence);
    std::vector<int> hyp;
    for (const auto& d : detections) hyp.push_back(d.keyword);
    results.push_back({"q" + std::to_string(q), reference, hyp});
  }
  const auto s = f1(results);
  const double exact = exact_rate(results);
  o.require(s.f1 == 1.0, "F1 below 1");
  o.require(exact == 1.0, "exact rate below 1");

  const std::vector<QueryResult> hand = {{"q", {0, 1}, {0, 2}}};
  o.require(f1(hand).f1 == 0.5, "hand F1 example");
  std::ostringstream d;
  d << "20 queries, F1=" << s.f1 << " exact=" << exact << " (P=" << s.precision << " R=" << s.recall
    << "); hand example F1=" << f1(hand).f1;
  o.detail = o.pass ? d.str() : o.detail + "; " + d.str();
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;  // 0 = no runtime bound
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"quantizer-exactness", 5.0, quantizer_exactness},
      {"quantized-lstm-bit-exactness", 30.0, lstm_bit_exactness},
      {"ctc-oracle-equivalence", 30.0, ctc_oracle},
      {"confidence-closed-forms", 0.0, confidence_closed_forms},
      {"decoder-oracle-equivalence", 60.0, decoder_oracle},
      {"optimization-safety", 0.0, optimization_safety},
      {"postproc-correctness", 0.0, postproc_correctness},
      {"streaming-equals-batch", 0.0, streaming_equals_batch},
      {"size-accounting", 0.0, size_accounting},
      {"end-to-end-mini-slu", 0.0, end_to_end_mini_slu},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += " (over the " + std::to_string(static_cast<int>(c.budget_s)) + " s budget)";
    }
    std::printf("%s %-30s %7.3fs  %s\n", o.pass ? "PASS" : "FAIL", c.name, secs, o.detail.c_str());
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}

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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "qkws/errors.hpp"
#include "qkws/keywords.hpp"
#include "qkws/metrics.hpp"
#include "qkws/model_io.hpp"
#include "qkws/pipeline.hpp"
#include "qkws/wav.hpp"

namespace fs = std::filesystem;
using namespace qkws;

namespace {

enum class InputKind { kAuto, kWav, kFeatures, kPosteriors };

struct DecodeOptions {
  std::string model;
  std::string keywords;
  std::string lexicon;
  double threshold = 0.5;
  std::string confidence = "nb";
  bool ratio = false;
  std::string postproc = "sequence";
  std::size_t smax = 30;
  double prune = 2.5;
  double blank_skip = 0.95;
  std::size_t subsample = 1;
  std::string input_kind = "auto";

  DecoderConfig decoder_config() const {
    const auto norm = parse_normalization(confidence);
    if (!norm) throw ConfigError("unknown confidence '" + confidence + "' (raw, nf or nb)");
    DecoderConfig c;
    c.threshold = threshold;
    c.confidence = {*norm, ratio};
    c.max_segment = smax;
    c.prune_nll = prune;
    c.blank_skip = blank_skip;
    c.subsample = subsample;
    c.validate();
    return c;
  }

  PostProcessor post_processor() const {
    const auto p = parse_postprocessor(postproc);
    if (!p) throw ConfigError("unknown post-processor '" + postproc + "' (greedy or sequence)");
    return *p;
  }

  InputKind kind() const {
    if (input_kind == "auto") return InputKind::kAuto;
    if (input_kind == "wav") return InputKind::kWav;
    if (input_kind == "features") return InputKind::kFeatures;
    if (input_kind == "posteriors") return InputKind::kPosteriors;
    throw ConfigError("unknown input kind '" + input_kind + "'");
  }
};

void add_model_option(CLI::App* cmd, DecodeOptions& o) {
  cmd->add_option("--model", o.model, "acoustic model file")->required()->check(CLI::ExistingFile);
}

void add_decode_options(CLI::App* cmd, DecodeOptions& o) {
  add_model_option(cmd, o);
  cmd->add_option("--keywords", o.keywords, "keyword set (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--lexicon", o.lexicon, "pronunciation lexicon")->check(CLI::ExistingFile);
  cmd->add_option("--threshold", o.threshold, "confidence threshold")->capture_default_str();
  cmd->add_option("--confidence", o.confidence, "raw, nf or nb")->capture_default_str();
  cmd->add_flag("--ratio", o.ratio, "divide by the best-path score");
  cmd->add_option("--postproc", o.postproc, "greedy or sequence")->capture_default_str();
  cmd->add_option("--smax", o.smax, "maximum segment length in frames")->capture_default_str();
  cmd->add_option("--prune", o.prune, "pruning bound, nats per frame")->capture_default_str();
  cmd->add_option("--blank-skip", o.blank_skip, "skip frames with p(blank) above this")->capture_default_str();
  cmd->add_option("--subsample", o.subsample, "start/end frame stride")->capture_default_str();
  cmd->add_option("--input-kind", o.input_kind, "auto, wav, features or posteriors")->capture_default_str();
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

KeywordTrie load_trie(const DecodeOptions& o, const AcousticModel& model) {
  std::optional<Lexicon> lexicon;
  if (!o.lexicon.empty()) lexicon = load_lexicon(read_text(o.lexicon));
  const auto set = parse_keyword_set(read_text(o.keywords), lexicon ? &*lexicon : nullptr);
  spdlog::debug("{} keywords", set.size());
  return KeywordTrie::build(set, model.phones);
}

Posteriorgram load_posteriors(const AcousticModel& model, const fs::path& path, InputKind kind) {
  const auto bytes = read_file_bytes(path);
  if (kind == InputKind::kAuto) {
    if (!is_matrix_file(bytes)) {
      kind = InputKind::kWav;
    } else {
      const auto m = decode_matrix(bytes);
      if (m.cols() == model.num_classes()) return m;
      if (m.cols() == model.input_dim()) kind = InputKind::kFeatures;
      else throw StructuralError(path.string() + ": matrix width fits neither the model input nor its output");
    }
  }
  switch (kind) {
    case InputKind::kWav:
      return posteriors_from_audio(model, parse_wav(bytes));
    case InputKind::kFeatures: {
      const auto m = decode_matrix(bytes);
      std::vector<FeatureFrame> frames;
      for (std::size_t t = 0; t < m.rows(); ++t) frames.emplace_back(m.row(t).begin(), m.row(t).end());
      return forward(model, frames);
    }
    case InputKind::kPosteriors: {
      auto m = decode_matrix(bytes);
      if (m.cols() != model.num_classes()) {
        throw StructuralError(path.string() + ": posteriorgram has " + std::to_string(m.cols()) +
                              " classes, model has " + std::to_string(model.num_classes()));
      }
      return m;
    }
    case InputKind::kAuto:
      break;
  }
  throw ConfigError("unreachable input kind");
}

// ---- spot -------------------------------------------------------------------

int cmd_spot(const DecodeOptions& o, const std::string& input) {
  const auto model = load_model(o.model);
  const auto trie = load_trie(o, model);
  const auto cfg = o.decoder_config();
  const auto post = load_posteriors(model, input, o.kind());
  DecoderStats stats;
  const auto detections = postprocess(detect(post, trie, cfg, &stats), o.post_processor());
  spdlog::info("{} frames, {} scored, {} detections", stats.frames_seen, stats.frames_scored, detections.size());
  const double sec = frame_seconds(model.frontend);
  for (const auto& d : detections) {
    std::printf("%.2f %.2f %s %.4f\n", static_cast<double>(d.start) * sec, static_cast<double>(d.end + 1) * sec,
                trie.keyword_name(d.keyword).c_str(), d.confidence);
  }
  return 0;
}

// ---- eval -------------------------------------------------------------------

struct Sweep {
  double lo = 0.0, hi = 0.0, step = 0.0;
};

Sweep parse_sweep(const std::string& s) {
  Sweep w;
  char c1 = 0, c2 = 0;
  std::istringstream in(s);
  if (!(in >> w.lo >> c1 >> w.hi >> c2 >> w.step) || c1 != ':' || c2 != ':' || !(w.step > 0.0) || w.hi < w.lo) {
    throw ConfigError("--sweep expects lo:hi:step with step > 0 and hi >= lo");
  }
  return w;
}

int cmd_eval(const DecodeOptions& o, const std::string& refs_path, const std::string& sweep_arg) {
  const auto model = load_model(o.model);
  const auto trie = load_trie(o, model);
  auto cfg = o.decoder_config();
  const auto pp = o.post_processor();
  const auto refs = parse_references(read_text(refs_path));
  const fs::path base = fs::path(refs_path).parent_path();

  std::map<std::string, int> ids;
  for (std::size_t k = 0; k < trie.num_keywords(); ++k) ids[trie.keyword_name(static_cast<int>(k))] = static_cast<int>(k);

  std::vector<double> taus;
  if (sweep_arg.empty()) {
    taus.push_back(cfg.threshold);
  } else {
    const auto w = parse_sweep(sweep_arg);
    const auto n = static_cast<long>(std::floor((w.hi - w.lo) / w.step + 1e-9));
    for (long i = 0; i <= n; ++i) taus.push_back(std::min(1.0, w.lo + static_cast<double>(i) * w.step));
  }
  // Pruning does not depend on the threshold, so one pass at the lowest
  // threshold yields every candidate set of the sweep by filtering.
  cfg.threshold = *std::min_element(taus.begin(), taus.end());

  const auto n = static_cast<std::ptrdiff_t>(refs.size());
  std::vector<std::vector<DetectionCandidate>> candidates(refs.size());
  std::vector<std::string> errors(refs.size());
  std::vector<std::vector<int>> references(refs.size());
  for (std::size_t q = 0; q < refs.size(); ++q) {
    for (const auto& name : refs[q].keywords) {
      auto it = ids.find(name);
      if (it == ids.end()) throw ConfigError("reference '" + refs[q].query_id + "' names unknown keyword '" + name + "'");
      references[q].push_back(it->second);
    }
  }
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t q = 0; q < n; ++q) {
    const auto& r = refs[static_cast<std::size_t>(q)];
    try {
      fs::path audio = r.audio_path;
      if (audio.is_relative()) audio = base / audio;
      candidates[static_cast<std::size_t>(q)] = detect(load_posteriors(model, audio, o.kind()), trie, cfg);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(q)] = e.what();
    }
  }
  std::size_t skipped = 0;
  for (std::size_t q = 0; q < refs.size(); ++q) {
    if (errors[q].empty()) continue;
    ++skipped;
    spdlog::warn("skipping {}: {}", refs[q].query_id, errors[q]);
  }
  if (skipped) spdlog::warn("{} of {} queries skipped", skipped, refs.size());

  auto evaluate = [&](double tau) {
    std::vector<QueryResult> results;
    for (std::size_t q = 0; q < refs.size(); ++q) {
      if (!errors[q].empty()) continue;
      std::vector<DetectionCandidate> kept;
      for (const auto& c : candidates[q]) {
        if (c.confidence > tau) kept.push_back(c);
      }
      QueryResult r{refs[q].query_id, references[q], {}};
      for (const auto& d : postprocess(kept, pp)) r.hypothesis.push_back(d.keyword);
      results.push_back(std::move(r));
    }
    return std::pair{f1(results), exact_rate(results)};
  };

  if (sweep_arg.empty()) {
    const auto [s, exact] = evaluate(taus.front());
    std::printf("queries %zu\nskipped %zu\nprecision %.4f\nrecall %.4f\nf1 %.4f\nexact_rate %.4f\n",
                refs.size() - skipped, skipped, s.precision, s.recall, s.f1, exact);
    return 0;
  }
  std::vector<std::pair<F1Score, double>> rows;
  std::size_t best = 0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    rows.push_back(evaluate(taus[i]));
    if (rows[i].second > rows[best].second) best = i;
  }
  std::printf("threshold,precision,recall,f1,exact_rate,best\n");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const auto& [s, exact] = rows[i];
    std::printf("%.4f,%.4f,%.4f,%.4f,%.4f,%s\n", taus[i], s.precision, s.recall, s.f1, exact, i == best ? "*" : "");
  }
  return 0;
}

// ---- model tools ------------------------------------------------------------

int cmd_model_info(const std::string& path) {
  const auto model = load_model(path);
  const auto shape = model.shape();
  std::printf("quantized %s\n", model.quantized() ? "yes" : "no");
  std::printf("layers %zu\nunits %zu\ninput_dim %zu\nclasses %zu\nphones %zu\n", shape.layers, shape.units,
              shape.input_dim, shape.num_classes, model.phones.num_phones());
  std::printf("parameters %zu\nfile_bytes %ju\n", model.parameter_count(),
              static_cast<std::uintmax_t>(fs::file_size(path)));
  std::printf("frontend %d Hz, %d mfcc, stack %d, skip %d\n", model.frontend.sample_rate, model.frontend.n_mfcc,
              model.frontend.stack, model.frontend.skip);
  return 0;
}

int cmd_posteriors(const std::string& model_path, const std::string& input, const std::string& output,
                   const std::string& kind) {
  DecodeOptions o;
  o.input_kind = kind;
  const auto model = load_model(model_path);
  write_matrix(output, load_posteriors(model, input, o.kind()));
  return 0;
}

int cmd_features(const std::string& model_path, const std::string& input, const std::string& output) {
  const auto model = load_model(model_path);
  const auto frames = compute_features(read_wav(input), model.frontend, model.norm);
  Matrix m(0, static_cast<std::size_t>(model.frontend.stacked_dim()));
  for (const auto& f : frames) m.append_row(f);
  write_matrix(output, m);
  return 0;
}

int cmd_synth_model(const ModelShape& shape, std::uint64_t seed, bool keep_float, const std::string& output) {
  auto model = make_random_model(shape, seed);
  if (!keep_float) model = quantize_model(model);
  save_model(output, model);
  return 0;
}

int cmd_synth_audio(double seconds, double freq, double noise, std::uint64_t seed, const std::string& output) {
  AudioBuffer a;
  a.samples.resize(static_cast<std::size_t>(seconds * a.sample_rate));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, noise);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double v = 8000.0 * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / a.sample_rate) + g(rng);
    a.samples[i] = static_cast<std::int16_t>(std::clamp(std::round(v), -32768.0, 32767.0));
  }
  write_wav(output, a);
  return 0;
}

int cmd_make_posteriorgram(std::size_t classes, const std::string& labels, double peak, const std::string& output) {
  if (classes < 2) throw ConfigError("need at least two classes");
  if (!(peak > 0.0 && peak <= 1.0)) throw ConfigError("--peak must be in (0, 1]");
  Posteriorgram post(0, classes);
  std::istringstream in(labels);
  for (std::size_t label; in >> label;) {
    if (label >= classes) throw ConfigError("label " + std::to_string(label) + " outside [0, classes)");
    std::vector<float> row(classes, static_cast<float>((1.0 - peak) / static_cast<double>(classes - 1)));
    row[label] = static_cast<float>(peak);
    post.append_row(row);
  }
  if (!in.eof()) throw ConfigError("labels must be non-negative integers");
  write_matrix(output, post);
  return 0;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_st("qkws");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("KWS_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("unknown KWS_LOG level '{}'", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Streaming open-vocabulary keyword spotter"};
  app.require_subcommand(1);

  DecodeOptions spot_opts;
  std::string spot_input;
  auto* spot = app.add_subcommand("spot", "print detections for one input");
  add_decode_options(spot, spot_opts);
  spot->add_option("--input", spot_input, "wav, feature or posteriorgram file")->required()->check(CLI::ExistingFile);

  DecodeOptions eval_opts;
  std::string refs, sweep;
  auto* eval = app.add_subcommand("eval", "score a reference set");
  add_decode_options(eval, eval_opts);
  eval->add_option("--refs,--input", refs, "query_id<TAB>audio<TAB>kw1,kw2 file")->required()->check(CLI::ExistingFile);
  eval->add_option("--sweep", sweep, "threshold sweep lo:hi:step, one CSV row per threshold");

  std::string info_model;
  auto* info = app.add_subcommand("model-info", "print model shape and size");
  info->add_option("--model", info_model, "acoustic model file")->required()->check(CLI::ExistingFile);

  std::string post_model, post_input, post_output, post_kind = "auto";
  auto* post = app.add_subcommand("posteriors", "write the posteriorgram of an input");
  post->add_option("--model", post_model)->required()->check(CLI::ExistingFile);
  post->add_option("--input", post_input)->required()->check(CLI::ExistingFile);
  post->add_option("--output", post_output)->required();
  post->add_option("--input-kind", post_kind, "auto, wav or features")->capture_default_str();

  std::string feat_model, feat_input, feat_output;
  auto* feat = app.add_subcommand("features", "write normalized, stacked features of a wav file");
  feat->add_option("--model", feat_model)->required()->check(CLI::ExistingFile);
  feat->add_option("--input", feat_input)->required()->check(CLI::ExistingFile);
  feat->add_option("--output", feat_output)->required();

  ModelShape shape;
  std::uint64_t model_seed = 1;
  bool keep_float = false;
  std::string synth_output;
  auto* synth = app.add_subcommand("synth-model", "write a randomly initialized model");
  synth->add_option("--layers", shape.layers)->capture_default_str();
  synth->add_option("--units", shape.units)->capture_default_str();
  synth->add_option("--input-dim", shape.input_dim)->capture_default_str();
  synth->add_option("--classes", shape.num_classes, "phones plus blank")->capture_default_str();
  synth->add_option("--seed", model_seed)->capture_default_str();
  synth->add_flag("--float", keep_float, "skip quantization");
  synth->add_option("--output", synth_output)->required();

  double seconds = 1.0, freq = 440.0, noise = 500.0;
  std::uint64_t audio_seed = 1;
  std::string audio_output;
  auto* audio = app.add_subcommand("synth-audio", "write a tone-plus-noise wav file");
  audio->add_option("--seconds", seconds)->capture_default_str();
  audio->add_option("--freq", freq)->capture_default_str();
  audio->add_option("--noise", noise, "noise standard deviation")->capture_default_str();
  audio->add_option("--seed", audio_seed)->capture_default_str();
  audio->add_option("--output", audio_output)->required();

  std::size_t pg_classes = 0;
  std::string pg_labels, pg_output;
  double pg_peak = 0.9;
  auto* pg = app.add_subcommand("make-posteriorgram", "write a posteriorgram from per-frame labels");
  pg->add_option("--classes", pg_classes)->required();
  pg->add_option("--labels", pg_labels, "space-separated class index per frame")->required();
  pg->add_option("--peak", pg_peak, "probability of the labelled class")->capture_default_str();
  pg->add_option("--output", pg_output)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*spot) return cmd_spot(spot_opts, spot_input);
    if (*eval) return cmd_eval(eval_opts, refs, sweep);
    if (*info) return cmd_model_info(info_model);
    if (*post) return cmd_posteriors(post_model, post_input, post_output, post_kind);
    if (*feat) return cmd_features(feat_model, feat_input, feat_output);
    if (*synth) return cmd_synth_model(shape, model_seed, keep_float, synth_output);
    if (*audio) return cmd_synth_audio(seconds, freq, noise, audio_seed, audio_output);
    if (*pg) return cmd_make_posteriorgram(pg_classes, pg_labels, pg_peak, pg_output);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}

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

// Serial vs OpenMP timings for the matvec kernels and batch detection.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include <omp.h>

#include "qkws/decoder.hpp"
#include "qkws/kernels.hpp"

using namespace qkws;

namespace {

double seconds_per_call(const std::function<void()>& fn, int reps) {
  fn();
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-28s serial %10.3f us  parallel %10.3f us  speedup %5.2fx\n", name, serial * 1e6, parallel * 1e6,
              serial / parallel);
}

Posteriorgram random_post(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::gamma_distribution<float> g(0.3f, 1.0f);
  Posteriorgram p(rows, cols);
  for (std::size_t t = 0; t < rows; ++t) {
    float sum = 0.0f;
    for (std::size_t c = 0; c < cols; ++c) sum += p(t, c) = g(rng) + 1e-6f;
    for (std::size_t c = 0; c < cols; ++c) p(t, c) /= sum;
  }
  return p;
}

}  // namespace

int main() {
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> code(-128, 127);
  std::normal_distribution<float> normal(0.0f, 1.0f);

  for (std::size_t n : {64u, 256u, 1024u}) {
    std::vector<std::int8_t> w(4 * n * n), x(n);
    for (auto& v : w) v = static_cast<std::int8_t>(code(rng));
    for (auto& v : x) v = static_cast<std::int8_t>(code(rng));
    std::vector<std::int32_t> y(4 * n);
    const kernels::MatrixView<std::int8_t> view{w, 4 * n, n};
    const int reps = n >= 1024 ? 50 : 2000;
    const double s = seconds_per_call([&] { kernels::serial::matvec_i8(view, x, y); }, reps);
    const double p = seconds_per_call([&] { kernels::parallel::matvec_i8(view, x, y); }, reps);
    char name[64];
    std::snprintf(name, sizeof name, "matvec_i8 %zux%zu", 4 * n, n);
    report(name, s, p);

    std::vector<float> wf(4 * n * n), xf(n), yf(4 * n);
    for (auto& v : wf) v = normal(rng);
    for (auto& v : xf) v = normal(rng);
    const kernels::MatrixView<float> viewf{wf, 4 * n, n};
    const double sf = seconds_per_call([&] { kernels::serial::matvec_f32(viewf, xf, yf); }, reps);
    const double pf = seconds_per_call([&] { kernels::parallel::matvec_f32(viewf, xf, yf); }, reps);
    std::snprintf(name, sizeof name, "matvec_f32 %zux%zu", 4 * n, n);
    report(name, sf, pf);
  }

  std::vector<Posteriorgram> posts;
  for (int i = 0; i < 32; ++i) posts.push_back(random_post(400, 41, rng));
  std::vector<std::vector<PhoneSeq>> prons;
  std::uniform_int_distribution<int> phone(1, 40), len(3, 8);
  for (int k = 0; k < 20; ++k) {
    PhoneSeq p(static_cast<std::size_t>(len(rng)));
    for (auto& v : p) v = phone(rng);
    prons.push_back({p});
  }
  const KeywordTrie trie(prons, 41);
  DecoderConfig cfg;
  cfg.prune_nll = 4.0;
  const double s = seconds_per_call([&] { serial::detect_batch(posts, trie, cfg); }, 3);
  const double p = seconds_per_call([&] { parallel::detect_batch(posts, trie, cfg); }, 3);
  report("detect_batch 32x400 frames", s, p);
  return 0;
}

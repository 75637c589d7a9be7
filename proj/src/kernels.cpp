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

#include "qkws/kernels.hpp"

#include <atomic>
#include <cassert>

namespace qkws::kernels {

namespace {

std::atomic<bool> g_parallel{true};

inline std::int32_t dot_i8(const std::int8_t* row, const std::int8_t* x, std::size_t n) {
  std::int32_t acc = 0;
  for (std::size_t c = 0; c < n; ++c) acc += static_cast<std::int32_t>(row[c]) * x[c];
  return acc;
}

inline float dot_f32(const float* row, const float* x, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t c = 0; c < n; ++c) acc += row[c] * x[c];
  return acc;
}

}  // namespace

namespace serial {

void matvec_i8(MatrixView<std::int8_t> w, std::span<const std::int8_t> x, std::span<std::int32_t> y) {
  assert(x.size() == w.cols && y.size() == w.rows);
  for (std::size_t r = 0; r < w.rows; ++r) y[r] = dot_i8(w.data.data() + r * w.cols, x.data(), w.cols);
}

void matvec_f32(MatrixView<float> w, std::span<const float> x, std::span<float> y) {
  assert(x.size() == w.cols && y.size() == w.rows);
  for (std::size_t r = 0; r < w.rows; ++r) y[r] = dot_f32(w.data.data() + r * w.cols, x.data(), w.cols);
}

}  // namespace serial

namespace parallel {

void matvec_i8(MatrixView<std::int8_t> w, std::span<const std::int8_t> x, std::span<std::int32_t> y) {
  assert(x.size() == w.cols && y.size() == w.rows);
  const auto rows = static_cast<std::ptrdiff_t>(w.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    y[r] = dot_i8(w.data.data() + r * w.cols, x.data(), w.cols);
  }
}

void matvec_f32(MatrixView<float> w, std::span<const float> x, std::span<float> y) {
  assert(x.size() == w.cols && y.size() == w.rows);
  const auto rows = static_cast<std::ptrdiff_t>(w.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    y[r] = dot_f32(w.data.data() + r * w.cols, x.data(), w.cols);
  }
}

}  // namespace parallel

void matvec_i8(MatrixView<std::int8_t> w, std::span<const std::int8_t> x, std::span<std::int32_t> y) {
  if (g_parallel.load(std::memory_order_relaxed) && w.rows * w.cols >= kParallelMinElements) {
    parallel::matvec_i8(w, x, y);
  } else {
    serial::matvec_i8(w, x, y);
  }
}

void matvec_f32(MatrixView<float> w, std::span<const float> x, std::span<float> y) {
  if (g_parallel.load(std::memory_order_relaxed) && w.rows * w.cols >= kParallelMinElements) {
    parallel::matvec_f32(w, x, y);
  } else {
    serial::matvec_f32(w, x, y);
  }
}

void set_parallel_enabled(bool enabled) noexcept { g_parallel.store(enabled, std::memory_order_relaxed); }
bool parallel_enabled() noexcept { return g_parallel.load(std::memory_order_relaxed); }

}  // namespace qkws::kernels

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

// Dense matrix-vector kernels used by the acoustic model.
//
// Every kernel comes in two flavours: `serial::` is the plain reference loop,
// `parallel::` splits output rows across OpenMP threads. Each output row is
// reduced by a single thread in the same order as the serial loop, so both
// flavours produce bit-identical results.

#include <cstddef>
#include <cstdint>
#include <span>

namespace qkws::kernels {

/// Row-major matrix view.
template <typename T>
struct MatrixView {
  std::span<const T> data;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

namespace serial {
void matvec_i8(MatrixView<std::int8_t> w, std::span<const std::int8_t> x, std::span<std::int32_t> y);
void matvec_f32(MatrixView<float> w, std::span<const float> x, std::span<float> y);
}  // namespace serial

namespace parallel {
void matvec_i8(MatrixView<std::int8_t> w, std::span<const std::int8_t> x, std::span<std::int32_t> y);
void matvec_f32(MatrixView<float> w, std::span<const float> x, std::span<float> y);
}  // namespace parallel

/// Matrices with fewer elements than this stay on the serial path when
/// dispatching through matvec_i8 / matvec_f32.
inline constexpr std::size_t kParallelMinElements = 1 << 15;

/// Dispatching entry points used by the model.
void matvec_i8(MatrixView<std::int8_t> w, std::span<const std::int8_t> x, std::span<std::int32_t> y);
void matvec_f32(MatrixView<float> w, std::span<const float> x, std::span<float> y);

/// Globally enable or disable the OpenMP path (enabled by default).
void set_parallel_enabled(bool enabled) noexcept;
bool parallel_enabled() noexcept;

}  // namespace qkws::kernels

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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace qkws {

inline constexpr int kBlank = 0;

/// Row-major float matrix. Used for posteriorgrams (T x (|P|+1), column 0 is
/// blank) and, through the same exchange format, for feature dumps.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const float> row(std::size_t t) const noexcept { return {data_.data() + t * cols_, cols_}; }
  std::span<float> row(std::size_t t) noexcept { return {data_.data() + t * cols_, cols_}; }
  float operator()(std::size_t t, std::size_t c) const noexcept { return data_[t * cols_ + c]; }
  float& operator()(std::size_t t, std::size_t c) noexcept { return data_[t * cols_ + c]; }

  void append_row(std::span<const float> row);
  const std::vector<float>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

using Posteriorgram = Matrix;

/// Exchange format: "PGRM", u32 rows, u32 cols, rows*cols f32, little-endian.
std::vector<std::uint8_t> encode_matrix(const Matrix& m);
Matrix decode_matrix(std::span<const std::uint8_t> bytes);
void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

/// True when the bytes start with the exchange-format magic.
bool is_matrix_file(std::span<const std::uint8_t> bytes) noexcept;

}  // namespace qkws

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

#include "qkws/posteriorgram.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "qkws/errors.hpp"
#include "qkws/wav.hpp"

namespace qkws {

static_assert(std::endian::native == std::endian::little, "exchange formats assume a little-endian host");

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw StructuralError("matrix data size does not match shape");
}

void Matrix::append_row(std::span<const float> row) {
  if (rows_ == 0 && cols_ == 0) cols_ = row.size();
  if (row.size() != cols_) throw StructuralError("row width " + std::to_string(row.size()) +
                                                 " does not match matrix width " + std::to_string(cols_));
  data_.insert(data_.end(), row.begin(), row.end());
  ++rows_;
}

bool is_matrix_file(std::span<const std::uint8_t> bytes) noexcept {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), "PGRM", 4) == 0;
}

std::vector<std::uint8_t> encode_matrix(const Matrix& m) {
  std::vector<std::uint8_t> out(12 + m.data().size() * 4);
  std::memcpy(out.data(), "PGRM", 4);
  const auto rows = static_cast<std::uint32_t>(m.rows());
  const auto cols = static_cast<std::uint32_t>(m.cols());
  std::memcpy(out.data() + 4, &rows, 4);
  std::memcpy(out.data() + 8, &cols, 4);
  if (!m.data().empty()) std::memcpy(out.data() + 12, m.data().data(), m.data().size() * 4);
  return out;
}

Matrix decode_matrix(std::span<const std::uint8_t> bytes) {
  if (!is_matrix_file(bytes) || bytes.size() < 12) throw FormatError("not a PGRM matrix file");
  std::uint32_t rows = 0, cols = 0;
  std::memcpy(&rows, bytes.data() + 4, 4);
  std::memcpy(&cols, bytes.data() + 8, 4);
  const std::size_t count = static_cast<std::size_t>(rows) * cols;
  if (bytes.size() != 12 + count * 4) throw FormatError("PGRM payload size does not match header");
  std::vector<float> data(count);
  if (count) std::memcpy(data.data(), bytes.data() + 12, count * 4);
  return Matrix(rows, cols, std::move(data));
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  const auto bytes = encode_matrix(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Matrix read_matrix(const std::filesystem::path& path) { return decode_matrix(read_file_bytes(path)); }

}  // namespace qkws

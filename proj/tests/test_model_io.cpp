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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>

#include "qkws/errors.hpp"
#include "qkws/model_io.hpp"

using namespace qkws;

namespace {

AcousticModel small_model(bool quantized) {
  auto m = make_random_model({10, 6, 2, 5}, 42);
  for (int i = 0; i < m.frontend.n_mfcc; ++i) {
    m.norm.mean.push_back(0.5f * i);
    m.norm.inv_std.push_back(2.0f);
  }
  return quantized ? quantize_model(m) : m;
}

// Offset of the first tensor record's exponent byte in a quantized file.
std::size_t find_name(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  for (std::size_t i = 0; i + name.size() <= bytes.size(); ++i) {
    if (std::memcmp(bytes.data() + i, name.data(), name.size()) == 0) return i;
  }
  return std::string::npos;
}

}  // namespace

TEST_CASE("model encode/decode is lossless") {
  for (bool quantized : {false, true}) {
    const auto model = small_model(quantized);
    const auto bytes = encode_model(model);
    const auto back = decode_model(bytes);
    CHECK(back.quantized() == quantized);
    CHECK(back.phones == model.phones);
    CHECK(back.frontend == model.frontend);
    CHECK(back.norm.mean == model.norm.mean);
    CHECK(back.parameter_count() == model.parameter_count());
    CHECK(encode_model(back) == bytes);
  }
}

TEST_CASE("quantized tensors keep codes and exponents") {
  const auto model = small_model(true);
  const auto back = decode_model(encode_model(model));
  const auto& a = std::get<QuantNetwork>(model.network);
  const auto& b = std::get<QuantNetwork>(back.network);
  for (std::size_t l = 0; l < a.lstm.size(); ++l) {
    for (std::size_t g = 0; g < 4; ++g) {
      CHECK(a.lstm[l].gates[g].w_x.codes == b.lstm[l].gates[g].w_x.codes);
      CHECK(a.lstm[l].gates[g].w_h.range == b.lstm[l].gates[g].w_h.range);
      CHECK(a.lstm[l].gates[g].b.codes == b.lstm[l].gates[g].b.codes);
    }
  }
}

TEST_CASE("loader rejects bad magic, version and truncation") {
  auto bytes = encode_model(small_model(true));
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_model(bad), FormatError);
  bad = bytes;
  bad[4] = 99;
  CHECK_THROWS_AS(decode_model(bad), FormatError);
  for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    std::vector<std::uint8_t> t(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    CHECK_THROWS_AS(decode_model(t), FormatError);
  }
  auto extra = bytes;
  extra.push_back(0);
  CHECK_THROWS_AS(decode_model(extra), FormatError);
}

TEST_CASE("loader enforces exponent bounds and shapes") {
  auto bytes = encode_model(small_model(true));
  const std::size_t at = find_name(bytes, "proj.w");
  REQUIRE(at != std::string::npos);
  // name, dtype, rank 2, two u32 dims, then the exponent byte.
  const std::size_t exponent = at + 6 + 1 + 1 + 8;
  auto bad = bytes;
  bad[exponent] = 9;
  CHECK_THROWS_AS(decode_model(bad), StructuralError);

  bad = bytes;
  bad[at + 6 + 2] = 7;  // rows of proj.w
  CHECK_THROWS(decode_model(bad));
}

TEST_CASE("quantized file is about one byte per parameter") {
  const auto model = quantize_model(make_random_model({100, 64, 3, 41}, 1));
  const auto bytes = encode_model(model);
  const double params = static_cast<double>(model.parameter_count());
  CHECK(bytes.size() >= params);
  CHECK((bytes.size() - params) / params < 0.05);
  const auto fbytes = encode_model(make_random_model({100, 64, 3, 41}, 1));
  CHECK(fbytes.size() > 4 * model.parameter_count());
}

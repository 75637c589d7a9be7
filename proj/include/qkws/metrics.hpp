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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qkws {

struct QueryResult {
  std::string query_id;
  std::vector<int> reference;
  std::vector<int> hypothesis;
};

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t matches = 0;
  std::size_t hypothesis_count = 0;
  std::size_t reference_count = 0;
};

/// Matches in a minimum-edit-distance alignment of the two sequences
/// (maximized among minimal alignments).
std::size_t aligned_matches(std::span<const int> reference, std::span<const int> hypothesis);

/// Micro-averaged precision/recall/F1 over all queries.
F1Score f1(std::span<const QueryResult> results);

/// Fraction of queries whose hypothesis equals the reference exactly.
double exact_rate(std::span<const QueryResult> results);

/// One row of a reference file.
struct ReferenceEntry {
  std::string query_id;
  std::string audio_path;
  std::vector<std::string> keywords;
};

/// Parses `query_id<TAB>audio_path<TAB>kw1,kw2,...`. Blank lines and '#'
/// comments are skipped; the keyword field may be empty. Throws ParseError.
std::vector<ReferenceEntry> parse_references(std::string_view text);

}  // namespace qkws

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

#include "qkws/metrics.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

#include "qkws/errors.hpp"

namespace qkws {

std::size_t aligned_matches(std::span<const int> reference, std::span<const int> hypothesis) {
  // cell = (edit cost, -matches); lexicographic minimum.
  using Cell = std::pair<std::size_t, long>;
  const std::size_t n = reference.size(), m = hypothesis.size();
  std::vector<Cell> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = {j, 0};
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = {i, 0};
    for (std::size_t j = 1; j <= m; ++j) {
      const bool same = reference[i - 1] == hypothesis[j - 1];
      Cell diag{prev[j - 1].first + (same ? 0 : 1), prev[j - 1].second - (same ? 1 : 0)};
      Cell del{prev[j].first + 1, prev[j].second};
      Cell ins{cur[j - 1].first + 1, cur[j - 1].second};
      cur[j] = std::min({diag, del, ins});
    }
    std::swap(prev, cur);
  }
  return static_cast<std::size_t>(-prev[m].second);
}

F1Score f1(std::span<const QueryResult> results) {
  F1Score s;
  for (const auto& r : results) {
    s.matches += aligned_matches(r.reference, r.hypothesis);
    s.hypothesis_count += r.hypothesis.size();
    s.reference_count += r.reference.size();
  }
  if (s.hypothesis_count) s.precision = static_cast<double>(s.matches) / static_cast<double>(s.hypothesis_count);
  if (s.reference_count) s.recall = static_cast<double>(s.matches) / static_cast<double>(s.reference_count);
  if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

double exact_rate(std::span<const QueryResult> results) {
  if (results.empty()) return 0.0;
  const auto exact = std::count_if(results.begin(), results.end(),
                                   [](const QueryResult& r) { return r.reference == r.hypothesis; });
  return static_cast<double>(exact) / static_cast<double>(results.size());
}

std::vector<ReferenceEntry> parse_references(std::string_view text) {
  std::vector<ReferenceEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    for (;;) {
      const auto tab = line.find('\t', pos);
      fields.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (fields.size() == 2) fields.emplace_back();
    if (fields.size() != 3) throw ParseError("expected query_id<TAB>audio_path<TAB>keywords", line_no);
    if (fields[0].empty() || fields[1].empty()) throw ParseError("empty query id or audio path", line_no);
    ReferenceEntry e{fields[0], fields[1], {}};
    std::size_t start = 0;
    const std::string& kws = fields[2];
    while (start < kws.size()) {
      auto comma = kws.find(',', start);
      if (comma == std::string::npos) comma = kws.size();
      if (comma == start) throw ParseError("empty keyword in list", line_no);
      e.keywords.push_back(kws.substr(start, comma - start));
      start = comma + 1;
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace qkws

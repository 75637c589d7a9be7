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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qkws/acoustic_model.hpp"
#include "qkws/ctc.hpp"

namespace qkws {

using Pronunciation = std::vector<std::string>;

/// word -> alternative pronunciations, in file order.
struct Lexicon {
  std::map<std::string, std::vector<Pronunciation>> entries;

  const std::vector<Pronunciation>* find(const std::string& word) const;
};

/// One entry per line: word followed by whitespace-separated phones. Repeated
/// words add alternatives; blank lines and lines starting with '#' are skipped.
Lexicon load_lexicon(std::string_view text);

struct Keyword {
  int id = 0;
  std::string name;
  std::vector<Pronunciation> pronunciations;
};

/// Maximum number of pronunciation combinations for a multi-word keyword.
inline constexpr std::size_t kMaxPronunciationCombinations = 16;

/// Splits `text` on whitespace and concatenates the words' pronunciations,
/// expanding alternatives as a cross product (capped). Throws OovError.
Keyword resolve(std::string_view text, const Lexicon& lexicon);

/// Parses {"keywords": [{"name": ..., "phones": [...], "text": ...}]}. Entries
/// without "phones" resolve "text" (or "name") through the lexicon, which
/// must then be provided. Ids follow file order.
std::vector<Keyword> parse_keyword_set(std::string_view json_text, const Lexicon* lexicon);

/// Prefix trie over keyword pronunciations mapped to phone indices. Node 0 is
/// the root; children are sorted by label.
class KeywordTrie {
 public:
  struct Node {
    int label = kBlank;  // phone index; blank for the root
    int parent = -1;
    int depth = 0;
    std::vector<int> children;
    std::vector<int> terminals;  // keyword ids ending here
  };

  /// `pronunciations[k]` lists keyword k's alternatives as phone indices in
  /// [1, num_classes).
  KeywordTrie(const std::vector<std::vector<PhoneSeq>>& pronunciations, std::size_t num_classes,
              std::vector<std::string> names = {});

  /// Maps phone names through the table; throws StructuralError on unknown phones.
  static KeywordTrie build(std::span<const Keyword> keywords, const PhoneTable& phones);

  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  std::size_t num_keywords() const noexcept { return names_.size(); }
  std::size_t num_classes() const noexcept { return num_classes_; }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::string& keyword_name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  int child(int node, int label) const noexcept;
  /// Node reached by spelling `pron` from the root, -1 when absent.
  int find(std::span<const int> pron) const noexcept;

 private:
  std::vector<Node> nodes_;
  std::vector<std::string> names_;
  std::size_t num_classes_;
};

}  // namespace qkws

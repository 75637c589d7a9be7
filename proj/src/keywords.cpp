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

#include "qkws/keywords.hpp"

#include <algorithm>
#include "json.hpp"
#include <sstream>

#include "qkws/errors.hpp"

namespace qkws {

namespace {

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

const std::vector<Pronunciation>* Lexicon::find(const std::string& word) const {
  auto it = entries.find(word);
  return it == entries.end() ? nullptr : &it->second;
}

Lexicon load_lexicon(std::string_view text) {
  Lexicon lex;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = split_ws(line);
    if (tokens.empty() || tokens.front().starts_with('#')) continue;
    if (tokens.size() < 2) throw ParseError("lexicon entry '" + tokens.front() + "' has no phones", line_no);
    std::string word = std::move(tokens.front());
    tokens.erase(tokens.begin());
    lex.entries[word].push_back(std::move(tokens));
  }
  return lex;
}

Keyword resolve(std::string_view text, const Lexicon& lexicon) {
  const auto words = split_ws(text);
  if (words.empty()) throw ConfigError("empty keyword text");
  std::vector<Pronunciation> combos{{}};
  for (const auto& word : words) {
    const auto* prons = lexicon.find(word);
    if (!prons) throw OovError(word);
    std::vector<Pronunciation> next;
    for (const auto& prefix : combos) {
      for (const auto& p : *prons) {
        if (next.size() == kMaxPronunciationCombinations) break;
        Pronunciation joined = prefix;
        joined.insert(joined.end(), p.begin(), p.end());
        next.push_back(std::move(joined));
      }
    }
    combos = std::move(next);
  }
  Keyword kw;
  for (std::size_t i = 0; i < words.size(); ++i) kw.name += (i ? " " : "") + words[i];
  kw.pronunciations = std::move(combos);
  return kw;
}

std::vector<Keyword> parse_keyword_set(std::string_view json_text, const Lexicon* lexicon) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("keyword set is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("keywords") || !doc["keywords"].is_array()) {
    throw ConfigError("keyword set must be an object with a \"keywords\" array");
  }
  std::vector<Keyword> out;
  for (const auto& entry : doc["keywords"]) {
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string()) {
      throw ConfigError("every keyword needs a string \"name\"");
    }
    Keyword kw;
    kw.name = entry["name"].get<std::string>();
    if (entry.contains("phones")) {
      Pronunciation pron;
      for (const auto& p : entry["phones"]) {
        if (!p.is_string()) throw ConfigError("keyword '" + kw.name + "': phones must be strings");
        pron.push_back(p.get<std::string>());
      }
      if (pron.empty()) throw ConfigError("keyword '" + kw.name + "' has an empty pronunciation");
      kw.pronunciations.push_back(std::move(pron));
    } else {
      if (!lexicon) throw ConfigError("keyword '" + kw.name + "' needs a lexicon (no explicit phones)");
      const std::string text = entry.contains("text") ? entry["text"].get<std::string>() : kw.name;
      kw.pronunciations = resolve(text, *lexicon).pronunciations;
    }
    kw.id = static_cast<int>(out.size());
    out.push_back(std::move(kw));
  }
  if (out.empty()) throw ConfigError("keyword set is empty");
  return out;
}

KeywordTrie::KeywordTrie(const std::vector<std::vector<PhoneSeq>>& pronunciations, std::size_t num_classes,
                         std::vector<std::string> names)
    : names_(std::move(names)), num_classes_(num_classes) {
  if (pronunciations.empty()) throw ConfigError("keyword trie needs at least one keyword");
  if (names_.empty()) {
    for (std::size_t k = 0; k < pronunciations.size(); ++k) names_.push_back("kw" + std::to_string(k));
  }
  if (names_.size() != pronunciations.size()) throw StructuralError("keyword names do not match keywords");
  nodes_.emplace_back();
  for (std::size_t k = 0; k < pronunciations.size(); ++k) {
    if (pronunciations[k].empty()) throw ConfigError("keyword '" + names_[k] + "' has no pronunciation");
    for (const auto& pron : pronunciations[k]) {
      if (pron.empty()) throw ConfigError("keyword '" + names_[k] + "' has an empty pronunciation");
      int cur = 0;
      for (int label : pron) {
        if (label <= kBlank || static_cast<std::size_t>(label) >= num_classes_) {
          throw StructuralError("phone index " + std::to_string(label) + " outside the phone table");
        }
        int next = child(cur, label);
        if (next < 0) {
          next = static_cast<int>(nodes_.size());
          Node n;
          n.label = label;
          n.parent = cur;
          n.depth = nodes_[cur].depth + 1;
          nodes_.push_back(std::move(n));
          auto& kids = nodes_[cur].children;
          kids.insert(std::upper_bound(kids.begin(), kids.end(), label,
                                       [&](int l, int c) { return l < nodes_[c].label; }),
                      next);
        }
        cur = next;
      }
      auto& terms = nodes_[cur].terminals;
      if (std::find(terms.begin(), terms.end(), static_cast<int>(k)) == terms.end()) {
        terms.insert(std::upper_bound(terms.begin(), terms.end(), static_cast<int>(k)), static_cast<int>(k));
      }
    }
  }
}

KeywordTrie KeywordTrie::build(std::span<const Keyword> keywords, const PhoneTable& phones) {
  std::vector<std::vector<PhoneSeq>> prons;
  std::vector<std::string> names;
  for (const auto& kw : keywords) {
    if (kw.id != static_cast<int>(prons.size())) throw StructuralError("keyword ids must be 0..K-1 in order");
    auto& alts = prons.emplace_back();
    for (const auto& p : kw.pronunciations) {
      PhoneSeq seq;
      for (const auto& name : p) {
        const int idx = phones.find(name);
        if (idx < 0) throw StructuralError("keyword '" + kw.name + "': phone '" + name + "' not in the model phone table");
        seq.push_back(idx);
      }
      alts.push_back(std::move(seq));
    }
    names.push_back(kw.name);
  }
  return KeywordTrie(prons, phones.num_classes(), std::move(names));
}

int KeywordTrie::child(int node, int label) const noexcept {
  const auto& kids = nodes_[static_cast<std::size_t>(node)].children;
  auto it = std::lower_bound(kids.begin(), kids.end(), label,
                             [&](int c, int l) { return nodes_[static_cast<std::size_t>(c)].label < l; });
  return it != kids.end() && nodes_[static_cast<std::size_t>(*it)].label == label ? *it : -1;
}

int KeywordTrie::find(std::span<const int> pron) const noexcept {
  int cur = 0;
  for (int label : pron) {
    cur = child(cur, label);
    if (cur < 0) return -1;
  }
  return cur;
}

}  // namespace qkws

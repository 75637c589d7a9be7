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

#include <stdexcept>
#include <string>

namespace qkws {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration (bad sample rate, empty audio, bad flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Shapes or tables that do not fit together.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Corrupt or unsupported binary file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Text input that does not parse. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// A keyword word missing from the lexicon.
class OovError : public Error {
 public:
  explicit OovError(const std::string& word)
      : Error("out-of-vocabulary word: '" + word + "'"), word_(word) {}
  const std::string& word() const noexcept { return word_; }

 private:
  std::string word_;
};

}  // namespace qkws

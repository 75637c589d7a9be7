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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace qkws {

/// Mono PCM16 audio.
struct AudioBuffer {
  std::vector<std::int16_t> samples;
  int sample_rate = 16000;
};

/// Parses a RIFF/WAVE file holding PCM16 mono audio. Throws FormatError on
/// anything else (compressed data, other widths, multi-channel).
AudioBuffer parse_wav(std::span<const std::uint8_t> bytes);
AudioBuffer read_wav(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio);
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

/// Reads a whole file; throws FormatError when it cannot be opened.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace qkws

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

#include "qkws/wav.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "qkws/errors.hpp"

namespace qkws {

namespace {

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | static_cast<std::uint32_t>(b[off + 1]) << 8 |
         static_cast<std::uint32_t>(b[off + 2]) << 16 | static_cast<std::uint32_t>(b[off + 3]) << 24;
}

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint16_t>(b[off] | b[off + 1] << 8);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace

AudioBuffer parse_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file");
  }
  AudioBuffer audio;
  bool have_fmt = false;
  std::size_t off = 12;
  while (off + 8 <= bytes.size()) {
    const std::string id(reinterpret_cast<const char*>(bytes.data() + off), 4);
    const std::size_t size = read_u32(bytes, off + 4);
    const std::size_t body = off + 8;
    if (body + size > bytes.size()) throw FormatError("truncated WAV chunk '" + id + "'");
    if (id == "fmt ") {
      if (size < 16) throw FormatError("short fmt chunk");
      const auto format = read_u16(bytes, body);
      const auto channels = read_u16(bytes, body + 2);
      const auto bits = read_u16(bytes, body + 14);
      if (format != 1) throw FormatError("WAV is not PCM");
      if (channels != 1) throw FormatError("WAV must be mono");
      if (bits != 16) throw FormatError("WAV must be 16-bit");
      audio.sample_rate = static_cast<int>(read_u32(bytes, body + 4));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError("WAV data chunk before fmt chunk");
      audio.samples.resize(size / 2);
      for (std::size_t i = 0; i < audio.samples.size(); ++i) {
        audio.samples[i] = static_cast<std::int16_t>(read_u16(bytes, body + 2 * i));
      }
      return audio;
    }
    off = body + size + (size & 1);
  }
  throw FormatError("WAV has no data chunk");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

AudioBuffer read_wav(const std::filesystem::path& path) { return parse_wav(read_file_bytes(path)); }

std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio) {
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (auto s : audio.samples) put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  const auto bytes = encode_wav(audio);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace qkws

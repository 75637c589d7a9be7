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

// Binary model file, little-endian:
//
//   "QKWS"  u32 version  u32 flags (bit 0: quantized)
//   frontend block: u32 sample_rate, window, hop, n_fft, n_mel, n_mfcc,
//                   f32 low_hz, high_hz, log_floor, u32 stack, skip
//   u32 phone count, then NUL-terminated names (blank first)
//   u32 tensor count, then per tensor:
//     u16 name length, name bytes, u8 dtype (0 = f32, 1 = int8), u8 rank,
//     u32 dims[rank], [i8 exponent if int8], data

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "qkws/acoustic_model.hpp"

namespace qkws {

inline constexpr std::uint32_t kModelVersion = 1;

std::vector<std::uint8_t> encode_model(const AcousticModel& model);
/// Throws FormatError for bad magic/version/truncation and StructuralError
/// for inconsistent shapes or exponent bounds.
AcousticModel decode_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const AcousticModel& model);
AcousticModel load_model(const std::filesystem::path& path);

}  // namespace qkws

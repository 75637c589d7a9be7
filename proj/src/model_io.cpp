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

#include "qkws/model_io.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <string>

#include "qkws/errors.hpp"
#include "qkws/wav.hpp"

namespace qkws {

namespace {

enum class DType : std::uint8_t { kF32 = 0, kI8 = 1 };

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out.insert(out.end(), p, p + n);
  }

  void tensor(const std::string& name, const std::vector<std::size_t>& dims, std::span<const float> values) {
    header(name, DType::kF32, dims);
    bytes(values.data(), values.size() * sizeof(float));
    ++count;
  }
  void tensor(const std::string& name, const QuantizedTensor& t) {
    header(name, DType::kI8, t.shape);
    put<std::int8_t>(static_cast<std::int8_t>(t.range.exponent));
    bytes(t.codes.data(), t.codes.size());
    ++count;
  }

  std::vector<std::uint8_t> out;
  std::uint32_t count = 0;

 private:
  void header(const std::string& name, DType dtype, const std::vector<std::size_t>& dims) {
    put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    bytes(name.data(), name.size());
    put<std::uint8_t>(static_cast<std::uint8_t>(dtype));
    put<std::uint8_t>(static_cast<std::uint8_t>(dims.size()));
    for (auto d : dims) put<std::uint32_t>(static_cast<std::uint32_t>(d));
  }
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::string cstring() {
    std::string s;
    for (;;) {
      const char c = static_cast<char>(get<std::uint8_t>());
      if (c == '\0') return s;
      s.push_back(c);
    }
  }
  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError("model file truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct RawTensor {
  DType dtype = DType::kF32;
  std::vector<std::size_t> dims;
  int exponent = 0;
  std::vector<float> f32;
  std::vector<std::int8_t> i8;
};

std::string gate_name(std::size_t layer, std::size_t gate, const char* kind) {
  return "lstm." + std::to_string(layer) + "." + kind + "_" + kGateSuffix[gate];
}

}  // namespace

std::vector<std::uint8_t> encode_model(const AcousticModel& model) {
  model.validate();
  Writer w;
  w.bytes("QKWS", 4);
  w.put<std::uint32_t>(kModelVersion);
  w.put<std::uint32_t>(model.quantized() ? 1u : 0u);
  const auto& fc = model.frontend;
  for (int v : {fc.sample_rate, fc.window, fc.hop, fc.n_fft, fc.n_mel, fc.n_mfcc}) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(v));
  }
  w.put<float>(fc.low_hz);
  w.put<float>(fc.high_hz);
  w.put<float>(fc.log_floor);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(fc.stack));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(fc.skip));

  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.phones.num_classes()));
  for (const auto& name : model.phones.names()) w.bytes(name.c_str(), name.size() + 1);

  Writer t;
  if (!model.norm.empty()) {
    t.tensor("norm.mean", {model.norm.mean.size()}, model.norm.mean);
    t.tensor("norm.inv_std", {model.norm.inv_std.size()}, model.norm.inv_std);
  }
  if (const auto* f = std::get_if<FloatNetwork>(&model.network)) {
    t.tensor("proj.w", {f->projection.w.rows, f->projection.w.cols}, f->projection.w.values);
    t.tensor("proj.b", {f->projection.b.size()}, f->projection.b);
    for (std::size_t l = 0; l < f->lstm.size(); ++l) {
      for (std::size_t g = 0; g < 4; ++g) {
        const auto& gate = f->lstm[l].gates[g];
        t.tensor(gate_name(l, g, "w_x"), {gate.w_x.rows, gate.w_x.cols}, gate.w_x.values);
        t.tensor(gate_name(l, g, "w_h"), {gate.w_h.rows, gate.w_h.cols}, gate.w_h.values);
        t.tensor(gate_name(l, g, "b"), {gate.b.size()}, gate.b);
      }
    }
    t.tensor("out.w", {f->output.w.rows, f->output.w.cols}, f->output.w.values);
    t.tensor("out.b", {f->output.b.size()}, f->output.b);
  } else {
    const auto& q = std::get<QuantNetwork>(model.network);
    t.tensor("proj.w", q.projection.w);
    t.tensor("proj.b", q.projection.b);
    for (std::size_t l = 0; l < q.lstm.size(); ++l) {
      for (std::size_t g = 0; g < 4; ++g) {
        const auto& gate = q.lstm[l].gates[g];
        t.tensor(gate_name(l, g, "w_x"), gate.w_x);
        t.tensor(gate_name(l, g, "w_h"), gate.w_h);
        t.tensor(gate_name(l, g, "b"), gate.b);
      }
    }
    t.tensor("out.w", q.output.w);
    t.tensor("out.b", q.output.b);
  }
  w.put<std::uint32_t>(t.count);
  w.bytes(t.out.data(), t.out.size());
  return std::move(w.out);
}

AcousticModel decode_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "QKWS", 4) != 0) throw FormatError("bad model magic");
  Reader r(bytes.subspan(4));
  const auto version = r.get<std::uint32_t>();
  if (version != kModelVersion) throw FormatError("unsupported model version " + std::to_string(version));
  const auto flags = r.get<std::uint32_t>();
  const bool quantized = (flags & 1u) != 0;

  AcousticModel model;
  auto& fc = model.frontend;
  fc.sample_rate = static_cast<int>(r.get<std::uint32_t>());
  fc.window = static_cast<int>(r.get<std::uint32_t>());
  fc.hop = static_cast<int>(r.get<std::uint32_t>());
  fc.n_fft = static_cast<int>(r.get<std::uint32_t>());
  fc.n_mel = static_cast<int>(r.get<std::uint32_t>());
  fc.n_mfcc = static_cast<int>(r.get<std::uint32_t>());
  fc.low_hz = r.get<float>();
  fc.high_hz = r.get<float>();
  fc.log_floor = r.get<float>();
  fc.stack = static_cast<int>(r.get<std::uint32_t>());
  fc.skip = static_cast<int>(r.get<std::uint32_t>());

  const auto n_classes = r.get<std::uint32_t>();
  if (n_classes < 2) throw StructuralError("phone table needs blank plus at least one phone");
  std::string blank = r.cstring();
  std::vector<std::string> phones;
  for (std::uint32_t i = 1; i < n_classes; ++i) phones.push_back(r.cstring());
  model.phones = PhoneTable(std::move(phones), std::move(blank));

  std::map<std::string, RawTensor> tensors;
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint16_t>();
    const auto name_bytes = r.take(name_len);
    std::string name(name_bytes.begin(), name_bytes.end());
    RawTensor t;
    const auto dtype = r.get<std::uint8_t>();
    if (dtype > 1) throw FormatError("tensor '" + name + "': unknown dtype");
    t.dtype = static_cast<DType>(dtype);
    const auto rank = r.get<std::uint8_t>();
    std::size_t n = 1;
    for (int d = 0; d < rank; ++d) {
      t.dims.push_back(r.get<std::uint32_t>());
      n *= t.dims.back();
    }
    if (t.dtype == DType::kI8) {
      t.exponent = r.get<std::int8_t>();
      if (t.exponent < kMinWeightExponent || t.exponent > kMaxWeightExponent) {
        throw StructuralError("tensor '" + name + "': exponent " + std::to_string(t.exponent) + " out of range");
      }
      const auto data = r.take(n);
      t.i8.assign(reinterpret_cast<const std::int8_t*>(data.data()),
                  reinterpret_cast<const std::int8_t*>(data.data()) + n);
    } else {
      const auto data = r.take(n * sizeof(float));
      t.f32.resize(n);
      if (n) std::memcpy(t.f32.data(), data.data(), n * sizeof(float));
    }
    if (!tensors.emplace(std::move(name), std::move(t)).second) throw FormatError("duplicate tensor name");
  }
  if (!r.done()) throw FormatError("trailing bytes after model tensors");

  auto take = [&](const std::string& name, DType dtype) -> RawTensor {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw StructuralError("missing tensor '" + name + "'");
    if (it->second.dtype != dtype) throw StructuralError("tensor '" + name + "' has the wrong dtype");
    RawTensor t = std::move(it->second);
    tensors.erase(it);
    return t;
  };
  auto fmatrix = [&](const std::string& name) {
    auto t = take(name, DType::kF32);
    if (t.dims.size() != 2) throw StructuralError("tensor '" + name + "' must be a matrix");
    return FloatMatrix{t.dims[0], t.dims[1], std::move(t.f32)};
  };
  auto fvector = [&](const std::string& name) {
    auto t = take(name, DType::kF32);
    if (t.dims.size() != 1) throw StructuralError("tensor '" + name + "' must be a vector");
    return std::move(t.f32);
  };
  auto qtensor = [&](const std::string& name) {
    auto t = take(name, DType::kI8);
    return QuantizedTensor{std::move(t.dims), std::move(t.i8), QuantRange{t.exponent}};
  };

  if (tensors.contains("norm.mean")) {
    model.norm.mean = fvector("norm.mean");
    model.norm.inv_std = fvector("norm.inv_std");
  }
  std::size_t layers = 0;
  while (tensors.contains(gate_name(layers, 0, "w_x"))) ++layers;

  if (quantized) {
    QuantNetwork q;
    q.projection = {qtensor("proj.w"), qtensor("proj.b")};
    for (std::size_t l = 0; l < layers; ++l) {
      QuantLstmLayer layer;
      for (std::size_t g = 0; g < 4; ++g) {
        layer.gates[g] = {qtensor(gate_name(l, g, "w_x")), qtensor(gate_name(l, g, "w_h")),
                          qtensor(gate_name(l, g, "b"))};
        if (layer.gates[g].w_x.shape.size() != 2 || layer.gates[g].w_h.shape.size() != 2) {
          throw StructuralError("LSTM weights must be matrices");
        }
      }
      q.lstm.push_back(std::move(layer));
    }
    q.output = {qtensor("out.w"), qtensor("out.b")};
    for (const auto* t : {&q.projection.w, &q.output.w}) {
      if (t->shape.size() != 2) throw StructuralError("affine weights must be matrices");
    }
    model.network = std::move(q);
  } else {
    FloatNetwork f;
    f.projection = {fmatrix("proj.w"), fvector("proj.b")};
    for (std::size_t l = 0; l < layers; ++l) {
      FloatLstmLayer layer;
      for (std::size_t g = 0; g < 4; ++g) {
        layer.gates[g] = {fmatrix(gate_name(l, g, "w_x")), fmatrix(gate_name(l, g, "w_h")),
                          fvector(gate_name(l, g, "b"))};
      }
      f.lstm.push_back(std::move(layer));
    }
    f.output = {fmatrix("out.w"), fvector("out.b")};
    model.network = std::move(f);
  }
  if (!tensors.empty()) throw StructuralError("unexpected tensor '" + tensors.begin()->first + "'");
  try {
    model.validate();
  } catch (const ConfigError& e) {
    throw StructuralError(std::string("frontend block: ") + e.what());
  }
  return model;
}

void save_model(const std::filesystem::path& path, const AcousticModel& model) {
  const auto bytes = encode_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

AcousticModel load_model(const std::filesystem::path& path) { return decode_model(read_file_bytes(path)); }

}  // namespace qkws

/*
 * Copyright 2026 The rulewalk Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "rulewalk/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "rulewalk/error.hpp"

namespace rulewalk {
namespace {

constexpr char kMagic[8] = {'R', 'W', 'T', 'E', 'N', 'S', 'O', 'R'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    require(out_.good(), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  }
  template <typename T>
  void put(T v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void raw(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }
  void finish() {
    out_.flush();
    require(out_.good(), ErrorCode::kIo, "write failed for " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    require(in_.good(), ErrorCode::kIo, "cannot open " + path.string());
  }
  template <typename T>
  T get() {
    T v;
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    check();
    return to_little(v);
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    require(n < (1u << 24), ErrorCode::kParse, path_.string() + ": implausible string length");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    check();
    return s;
  }
  void raw(char* data, std::size_t n) {
    in_.read(data, static_cast<std::streamsize>(n));
    check();
  }

 private:
  void check() {
    if (!in_) fail(ErrorCode::kParse, path_.string() + ": truncated checkpoint");
  }
  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace

const NamedArray* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const std::string& Checkpoint::meta_at(const std::string& key) const {
  auto it = meta.find(key);
  require(it != meta.end(), ErrorCode::kParse, "checkpoint lacks meta key " + key);
  return it->second;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  Writer w(path);
  w.raw(kMagic, sizeof(kMagic));
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    w.put_string(k);
    w.put_string(v);
  }
  w.put(static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& a : ckpt.arrays) {
    w.put_string(a.name);
    w.put(static_cast<std::uint32_t>(a.value.rows()));
    w.put(static_cast<std::uint32_t>(a.value.cols()));
    w.put(static_cast<std::uint8_t>(a.trainable ? 1 : 0));
    for (double d : a.value.data()) w.put(d);
  }
  w.finish();
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  char magic[8];
  r.raw(magic, sizeof(magic));
  require(std::memcmp(magic, kMagic, sizeof(kMagic)) == 0, ErrorCode::kParse,
          path.string() + ": not a rulewalk checkpoint");
  const auto version = r.get<std::uint32_t>();
  require(version == kCheckpointVersion, ErrorCode::kParse,
          path.string() + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  const auto nmeta = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < nmeta; ++i) {
    std::string k = r.get_string();
    ckpt.meta[k] = r.get_string();
  }
  const auto narrays = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < narrays; ++i) {
    NamedArray a;
    a.name = r.get_string();
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    require(rows < (1u << 28) && cols < (1u << 28) &&
                static_cast<std::uint64_t>(rows) * cols < (1ull << 31),
            ErrorCode::kParse, path.string() + ": implausible shape for " + a.name);
    a.trainable = r.get<std::uint8_t>() != 0;
    a.value = Matrix(static_cast<int>(rows), static_cast<int>(cols));
    for (double& d : a.value.data()) d = r.get<double>();
    ckpt.arrays.push_back(std::move(a));
  }
  return ckpt;
}

Checkpoint to_checkpoint(const ParameterTable& params,
                         std::map<std::string, std::string> meta) {
  Checkpoint ckpt;
  ckpt.meta = std::move(meta);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params.at(i);
    ckpt.arrays.push_back(NamedArray{p.name, p.value, p.trainable});
  }
  return ckpt;
}

void load_parameters(const Checkpoint& ckpt, ParameterTable& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params.at(i);
    const NamedArray* a = ckpt.find(p.name);
    require(a != nullptr, ErrorCode::kParse, "checkpoint lacks parameter " + p.name);
    require(a->value.same_shape(p.value), ErrorCode::kShape,
            "checkpoint shape " + a->value.shape_string() + " for " + p.name +
                " vs expected " + p.value.shape_string());
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params.at(i);
    const NamedArray* a = ckpt.find(p.name);
    p.value = a->value;
  }
}

}  // namespace rulewalk

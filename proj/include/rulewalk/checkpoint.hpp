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

// Named-array container:
//   "RWTENSOR"  u32 version
//   u32 meta count, then (u32 len, bytes) key and value pairs
//   u32 array count, then per array:
//     (u32 len, bytes) name, u32 rows, u32 cols, u8 trainable,
//     rows * cols IEEE-754 doubles
// All integers and doubles are little-endian.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rulewalk/tensor.hpp"

namespace rulewalk {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Matrix value;
  bool trainable = true;
};

struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
  // Meta lookup that throws Error(kParse) when the key is missing.
  const std::string& meta_at(const std::string& key) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

Checkpoint to_checkpoint(const ParameterTable& params,
                         std::map<std::string, std::string> meta = {});
// Copies values into an existing table; trainable flags stay as they are.
// Every table parameter must be present with the same shape.
void load_parameters(const Checkpoint& ckpt, ParameterTable& params);

}  // namespace rulewalk

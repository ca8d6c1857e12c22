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

// Run configuration as flat `key = value` text. Lines starting with '#'
// and blank lines are ignored; unknown keys are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rulewalk/embed.hpp"
#include "rulewalk/eval.hpp"
#include "rulewalk/kg.hpp"
#include "rulewalk/policy.hpp"
#include "rulewalk/rules.hpp"
#include "rulewalk/trainer.hpp"

namespace rulewalk {

struct Config {
  std::filesystem::path data_dir;
  std::filesystem::path out_dir;
  std::uint64_t seed = 1;
  int threads = 1;

  DatasetOptions dataset;
  MinerConfig miner;
  EmbedConfig embed;
  PolicyConfig policy;
  TrainConfig train;

  int beam_width = 100;
  RankMode rank_mode = RankMode::kFiltered;
  int paths_per_query = 1;
  // Split used by evaluate, explain and rule-report.
  std::string eval_split = "test";
  // "kinship" or "cluster": prepare writes a generated dataset into data_dir.
  std::string synthetic;
  std::uint64_t synthetic_seed = 7;
  // Copy stage-1 embeddings into the walker's tables (widths must match).
  bool init_policy_embeddings = false;
  // Reuse artifacts already present in out_dir instead of recomputing.
  bool reuse_embeddings = false;
  bool reuse_rules = false;
  bool reuse_pretrained = false;
};

// Sets one key. Throws Error(kConfig) for unknown keys or bad values.
void set_config_value(Config& config, const std::string& key, const std::string& value);
std::string get_config_value(const Config& config, const std::string& key);
std::vector<std::string> config_keys();

// Applies a config file on top of `config`. All unknown keys are listed in
// the error.
void apply_config_file(Config& config, const std::filesystem::path& path);
Config load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const Config& config);

// Checks ranges and cross-field constraints.
void validate(const Config& config);

// Per-stage seeds derived from Config::seed, plus thread counts copied into
// the stage configs.
MinerConfig miner_config(const Config& config);
EmbedConfig embed_config(const Config& config);
TrainConfig train_config(const Config& config);
PolicyConfig policy_config(const Config& config);
std::uint64_t policy_seed(const Config& config);
std::uint64_t pretrain_seed(const Config& config);
std::uint64_t joint_seed(const Config& config);

}  // namespace rulewalk

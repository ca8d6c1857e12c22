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

#include "rulewalk/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "rulewalk/error.hpp"

namespace rulewalk {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  fail(ErrorCode::kConfig, "bad value '" + value + "' for " + key + " (expected " + want + ")");
}

long long parse_integer(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno == ERANGE) bad_value(key, v, "an integer");
  return x;
}

int parse_int(const std::string& key, const std::string& v) {
  const long long x = parse_integer(key, v);
  if (x < INT32_MIN || x > INT32_MAX) bad_value(key, v, "a 32-bit integer");
  return static_cast<int>(x);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  if (v.empty() || v[0] == '-') bad_value(key, v, "a non-negative integer");
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (*end != '\0' || errno == ERANGE) bad_value(key, v, "a non-negative integer");
  return x;
}

double parse_double(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE) bad_value(key, v, "a number");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "true or false");
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Binding {
  std::function<void(Config&, const std::string&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

template <typename Ref>
Binding int_field(Ref ref) {
  return {[ref](Config& c, const std::string& k, const std::string& v) { ref(c) = parse_int(k, v); },
          [ref](const Config& c) { return std::to_string(ref(const_cast<Config&>(c))); }};
}

template <typename Ref>
Binding i64_field(Ref ref) {
  return {[ref](Config& c, const std::string& k, const std::string& v) {
            ref(c) = static_cast<std::int64_t>(parse_integer(k, v));
          },
          [ref](const Config& c) { return std::to_string(ref(const_cast<Config&>(c))); }};
}

template <typename Ref>
Binding u64_field(Ref ref) {
  return {[ref](Config& c, const std::string& k, const std::string& v) { ref(c) = parse_u64(k, v); },
          [ref](const Config& c) { return std::to_string(ref(const_cast<Config&>(c))); }};
}

template <typename Ref>
Binding double_field(Ref ref) {
  return {[ref](Config& c, const std::string& k, const std::string& v) { ref(c) = parse_double(k, v); },
          [ref](const Config& c) { return fmt_double(ref(const_cast<Config&>(c))); }};
}

template <typename Ref>
Binding bool_field(Ref ref) {
  return {[ref](Config& c, const std::string& k, const std::string& v) { ref(c) = parse_bool(k, v); },
          [ref](const Config& c) { return std::string(ref(const_cast<Config&>(c)) ? "true" : "false"); }};
}

template <typename Ref>
Binding path_field(Ref ref) {
  return {[ref](Config& c, const std::string&, const std::string& v) { ref(c) = v; },
          [ref](const Config& c) { return ref(const_cast<Config&>(c)).string(); }};
}

#define RW_REF(expr) [](Config& c) -> auto& { return expr; }

const std::map<std::string, Binding>& bindings() {
  static const std::map<std::string, Binding> table = [] {
    std::map<std::string, Binding> m;
    m["data"] = path_field(RW_REF(c.data_dir));
    m["out"] = path_field(RW_REF(c.out_dir));
    m["seed"] = u64_field(RW_REF(c.seed));
    m["threads"] = int_field(RW_REF(c.threads));

    m["bandwidth"] = int_field(RW_REF(c.dataset.bandwidth));
    m["pagerank_damping"] = double_field(RW_REF(c.dataset.pagerank_damping));
    m["pagerank_tolerance"] = double_field(RW_REF(c.dataset.pagerank_tolerance));
    m["pagerank_max_iterations"] = int_field(RW_REF(c.dataset.pagerank_max_iterations));
    m["unseen"] = {[](Config& c, const std::string& k, const std::string& v) {
                     if (v == "skip") c.dataset.unseen = UnseenPolicy::kSkipWithWarning;
                     else if (v == "error") c.dataset.unseen = UnseenPolicy::kError;
                     else bad_value(k, v, "skip or error");
                   },
                   [](const Config& c) {
                     return std::string(c.dataset.unseen == UnseenPolicy::kError ? "error" : "skip");
                   }};

    m["rule_samples"] = int_field(RW_REF(c.miner.samples));
    m["max_rule_length"] = int_field(RW_REF(c.miner.max_rule_length));
    m["rule_threshold"] = double_field(RW_REF(c.miner.threshold));
    m["rule_smoothing"] = double_field(RW_REF(c.miner.smoothing));
    m["grounding_cap"] = i64_field(RW_REF(c.miner.grounding_cap));

    m["embed_kind"] = {[](Config& c, const std::string&, const std::string& v) {
                         c.embed.kind = parse_embedding_kind(v);
                       },
                       [](const Config& c) { return to_string(c.embed.kind); }};
    m["embed_dim"] = int_field(RW_REF(c.embed.dim));
    m["embed_negatives"] = int_field(RW_REF(c.embed.negatives));
    m["embed_learning_rate"] = double_field(RW_REF(c.embed.learning_rate));
    m["embed_epochs"] = int_field(RW_REF(c.embed.epochs));
    m["embed_batch_size"] = int_field(RW_REF(c.embed.batch_size));
    m["embed_l2"] = double_field(RW_REF(c.embed.l2));
    m["embed_init_range"] = double_field(RW_REF(c.embed.init_range));
    m["embed_eval_every"] = int_field(RW_REF(c.embed.eval_every));

    m["relation_dim"] = int_field(RW_REF(c.policy.relation_dim));
    m["entity_dim"] = int_field(RW_REF(c.policy.entity_dim));
    m["hidden_dim"] = int_field(RW_REF(c.policy.hidden_dim));
    m["lstm_layers"] = int_field(RW_REF(c.policy.layers));
    m["mlp_dim"] = int_field(RW_REF(c.policy.mlp_dim));
    m["hops"] = int_field(RW_REF(c.policy.hops));
    m["embedding_dropout"] = double_field(RW_REF(c.policy.embedding_dropout));
    m["hidden_dropout"] = double_field(RW_REF(c.policy.hidden_dropout));
    m["relation_dropout"] = double_field(RW_REF(c.policy.relation_action_dropout));
    m["entity_dropout"] = double_field(RW_REF(c.policy.entity_action_dropout));

    m["epochs"] = int_field(RW_REF(c.train.epochs));
    m["pretrain_epochs"] = int_field(RW_REF(c.train.pretrain_epochs));
    m["joint_epochs"] = int_field(RW_REF(c.train.joint_epochs));
    m["batch_size"] = int_field(RW_REF(c.train.batch_size));
    m["rollouts"] = int_field(RW_REF(c.train.rollouts));
    m["learning_rate"] = double_field(RW_REF(c.train.learning_rate));
    m["beta"] = double_field(RW_REF(c.train.beta));
    m["lambda"] = double_field(RW_REF(c.train.lambda));
    m["baseline"] = {[](Config& c, const std::string& k, const std::string& v) {
                       if (v == "ema") c.train.use_baseline = true;
                       else if (v == "none") c.train.use_baseline = false;
                       else bad_value(k, v, "ema or none");
                     },
                     [](const Config& c) { return std::string(c.train.use_baseline ? "ema" : "none"); }};
    m["baseline_decay"] = double_field(RW_REF(c.train.baseline_decay));
    m["grad_clip"] = double_field(RW_REF(c.train.grad_clip));
    m["mask_answer_edge"] = bool_field(RW_REF(c.train.mask_answer_edge));
    m["ablation"] = {[](Config& c, const std::string&, const std::string& v) {
                       c.train.ablation = parse_ablation(v);
                     },
                     [](const Config& c) { return to_string(c.train.ablation); }};
    m["query_relations"] = {[](Config& c, const std::string&, const std::string& v) {
                              c.train.query_relations = split_list(v);
                            },
                            [](const Config& c) {
                              std::string out;
                              for (const auto& r : c.train.query_relations) {
                                if (!out.empty()) out += ",";
                                out += r;
                              }
                              return out;
                            }};
    m["max_queries_per_epoch"] = int_field(RW_REF(c.train.max_queries_per_epoch));
    m["dev_beam_width"] = int_field(RW_REF(c.train.dev_beam_width));
    m["dev_max_queries"] = int_field(RW_REF(c.train.dev_max_queries));

    m["beam_width"] = int_field(RW_REF(c.beam_width));
    m["rank_mode"] = {[](Config& c, const std::string& k, const std::string& v) {
                        if (v == "filtered") c.rank_mode = RankMode::kFiltered;
                        else if (v == "raw") c.rank_mode = RankMode::kRaw;
                        else bad_value(k, v, "filtered or raw");
                      },
                      [](const Config& c) {
                        return std::string(c.rank_mode == RankMode::kRaw ? "raw" : "filtered");
                      }};
    m["paths_per_query"] = int_field(RW_REF(c.paths_per_query));
    m["eval_split"] = {[](Config& c, const std::string& k, const std::string& v) {
                         if (v != "train" && v != "dev" && v != "test") bad_value(k, v, "train, dev or test");
                         c.eval_split = v;
                       },
                       [](const Config& c) { return c.eval_split; }};
    m["synthetic"] = {[](Config& c, const std::string& k, const std::string& v) {
                        if (!v.empty() && v != "kinship" && v != "cluster") {
                          bad_value(k, v, "kinship, cluster or empty");
                        }
                        c.synthetic = v;
                      },
                      [](const Config& c) { return c.synthetic; }};
    m["synthetic_seed"] = u64_field(RW_REF(c.synthetic_seed));
    m["init_policy_embeddings"] = bool_field(RW_REF(c.init_policy_embeddings));
    m["reuse_embeddings"] = bool_field(RW_REF(c.reuse_embeddings));
    m["reuse_rules"] = bool_field(RW_REF(c.reuse_rules));
    m["reuse_pretrained"] = bool_field(RW_REF(c.reuse_pretrained));
    return m;
  }();
  return table;
}

#undef RW_REF

}  // namespace

void set_config_value(Config& config, const std::string& key, const std::string& value) {
  const auto& table = bindings();
  auto it = table.find(key);
  require(it != table.end(), ErrorCode::kConfig, "unknown config key '" + key + "'");
  it->second.set(config, key, trim(value));
}

std::string get_config_value(const Config& config, const std::string& key) {
  const auto& table = bindings();
  auto it = table.find(key);
  require(it != table.end(), ErrorCode::kConfig, "unknown config key '" + key + "'");
  return it->second.get(config);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, b] : bindings()) out.push_back(k);
  return out;
}

void apply_config_file(Config& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot open config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> unknown;
  const auto& table = bindings();
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(path.string(), lineno, "expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!table.count(key)) {
      unknown.push_back(key);
      continue;
    }
    try {
      set_config_value(config, key, value);
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    fail(ErrorCode::kConfig, path.string() + ": unknown config keys: " + list);
  }
}

Config load_config(const std::filesystem::path& path) {
  Config c;
  apply_config_file(c, path);
  return c;
}

void write_config(std::ostream& out, const Config& config) {
  for (const auto& [k, b] : bindings()) out << k << " = " << b.get(config) << '\n';
}

void validate(const Config& c) {
  require(c.threads >= 1, ErrorCode::kConfig, "threads must be >= 1");
  require(c.dataset.bandwidth >= 1, ErrorCode::kConfig, "bandwidth must be >= 1");
  require(c.dataset.pagerank_damping > 0.0 && c.dataset.pagerank_damping < 1.0,
          ErrorCode::kConfig, "pagerank_damping must lie in (0, 1)");
  require(c.miner.samples >= 0 && c.miner.max_rule_length >= 1, ErrorCode::kConfig,
          "rule_samples must be >= 0 and max_rule_length >= 1");
  require(c.miner.smoothing >= 0.0, ErrorCode::kConfig, "rule_smoothing must be >= 0");
  require(c.embed.dim >= 1 && (c.embed.kind != EmbeddingKind::kComplEx || c.embed.dim % 2 == 0),
          ErrorCode::kConfig, "embed_dim must be positive, and even for ComplEx");
  require(c.policy.embedding_dropout >= 0.0 && c.policy.embedding_dropout <= 0.3,
          ErrorCode::kConfig, "embedding_dropout must lie in [0, 0.3]");
  require(c.policy.hidden_dropout >= 0.0 && c.policy.hidden_dropout <= 0.3, ErrorCode::kConfig,
          "hidden_dropout must lie in [0, 0.3]");
  require(c.policy.relation_action_dropout >= 0.0 && c.policy.relation_action_dropout <= 0.95,
          ErrorCode::kConfig, "relation_dropout must lie in [0, 0.95]");
  require(c.policy.entity_action_dropout >= 0.0 && c.policy.entity_action_dropout <= 0.95,
          ErrorCode::kConfig, "entity_dropout must lie in [0, 0.95]");
  require(c.policy.hops >= 1, ErrorCode::kConfig, "hops must be >= 1");
  require(c.beam_width >= 1, ErrorCode::kConfig, "beam_width must be >= 1");
  require(c.paths_per_query >= 1, ErrorCode::kConfig, "paths_per_query must be >= 1");
  if (c.init_policy_embeddings) {
    require(c.policy.relation_dim == c.embed.dim && c.policy.entity_dim == c.embed.dim,
            ErrorCode::kConfig,
            "init_policy_embeddings needs relation_dim == entity_dim == embed_dim");
  }
  validate(train_config(c));
}

MinerConfig miner_config(const Config& c) {
  MinerConfig m = c.miner;
  m.seed = c.seed;
  m.threads = c.threads;
  return m;
}

EmbedConfig embed_config(const Config& c) {
  EmbedConfig e = c.embed;
  e.seed = c.seed + 1;
  return e;
}

PolicyConfig policy_config(const Config& c) {
  PolicyConfig p = c.policy;
  p.single_agent = c.train.ablation == Ablation::kSingleAgent;
  return p;
}

TrainConfig train_config(const Config& c) {
  TrainConfig t = c.train;
  t.threads = c.threads;
  t.seed = c.seed + 3;
  return t;
}

std::uint64_t policy_seed(const Config& c) { return c.seed + 2; }
std::uint64_t pretrain_seed(const Config& c) { return c.seed + 3; }
std::uint64_t joint_seed(const Config& c) { return c.seed + 4; }

}  // namespace rulewalk

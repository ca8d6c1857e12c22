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

// rulewalk-cli: one subcommand per pipeline stage, built on the C API.

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "rulewalk/rulewalk.h"

namespace {

// Thrown to unwind with a status after a failed C call.
struct Failure {
  rw_status status;
};

void check(rw_status s) {
  if (s != RW_OK) throw Failure{s};
}

struct Options {
  std::string config_file;
  std::vector<std::string> sets;
  bool quiet = false;
  // Flag overrides as (config key, value); applied after the config file.
  std::vector<std::pair<std::string, std::string>> flags;
};

// Registers a flag whose value lands in config key `key`.
void keyed(CLI::App* app, Options& opts, const std::string& flag, const std::string& key,
           const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&opts, key](const std::string& v) { opts.flags.emplace_back(key, v); }, help);
}

class Session {
 public:
  explicit Session(const Options& opts) {
    check(rw_config_create(&config_));
    if (!opts.config_file.empty()) check(rw_config_load(config_, opts.config_file.c_str()));
    for (const auto& [k, v] : opts.flags) check(rw_config_set(config_, k.c_str(), v.c_str()));
    for (const auto& kv : opts.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
        throw Failure{RW_ERR_CONFIG};
      }
      check(rw_config_set(config_, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
    }
    quiet_ = opts.quiet;
  }
  ~Session() {
    rw_pipeline_destroy(pipeline_);
    rw_config_destroy(config_);
  }
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  std::string get(const char* key) const {
    size_t needed = 0;
    check(rw_config_get(config_, key, nullptr, 0, &needed));
    std::string out(needed, '\0');
    check(rw_config_get(config_, key, out.data(), out.size(), nullptr));
    out.resize(needed - 1);
    return out;
  }

  rw_pipeline* pipeline() {
    if (!pipeline_) check(rw_pipeline_create(config_, quiet_ ? 0 : 1, &pipeline_));
    return pipeline_;
  }

  std::string artifact(const char* name) {
    size_t needed = 0;
    check(rw_artifact_path(pipeline(), name, nullptr, 0, &needed));
    std::string out(needed, '\0');
    check(rw_artifact_path(pipeline(), name, out.data(), out.size(), nullptr));
    out.resize(needed - 1);
    return out;
  }

  std::string dump() const {
    size_t needed = 0;
    check(rw_config_dump(config_, nullptr, 0, &needed));
    std::string out(needed, '\0');
    check(rw_config_dump(config_, out.data(), out.size(), nullptr));
    out.resize(needed - 1);
    return out;
  }

 private:
  rw_config* config_ = nullptr;
  rw_pipeline* pipeline_ = nullptr;
  bool quiet_ = false;
};

void print_metrics(const char* split, const rw_metrics& m) {
  std::printf("%-6s %8s %8s %8s %8s %8s %10s\n", "split", "queries", "hits@1", "hits@5",
              "hits@10", "mrr", "rule-use%");
  std::printf("%-6s %8llu %8.2f %8.2f %8.2f %8.2f %10.2f\n", split,
              static_cast<unsigned long long>(m.queries), m.hits1, m.hits5, m.hits10, m.mrr,
              m.rule_usage);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rulewalk: rule-guided two-agent walks over knowledge graphs"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opts;
  app.add_option("--config", opts.config_file, "key = value config file")
      ->check(CLI::ExistingFile);
  app.add_option("--set", opts.sets, "override a config key (key=value), repeatable");
  app.add_flag("-q,--quiet", opts.quiet, "suppress progress output");
  keyed(&app, opts, "--data", "data", "dataset directory (train.txt, dev.txt, test.txt)");
  keyed(&app, opts, "--out", "out", "output directory for artifacts");
  keyed(&app, opts, "--seed", "seed", "random seed");
  keyed(&app, opts, "--threads", "threads", "worker threads");

  auto* prepare = app.add_subcommand("prepare", "load the dataset, write vocabulary and PageRank");
  keyed(prepare, opts, "--synthetic", "synthetic", "generate a dataset first: kinship or cluster");
  keyed(prepare, opts, "--synthetic-seed", "synthetic_seed", "seed for the generated dataset");
  auto* pagerank = app.add_subcommand("pagerank", "recompute entity PageRank scores");
  auto* mine = app.add_subcommand("mine-rules", "mine Horn rules into rules.tsv");
  keyed(mine, opts, "--threshold", "rule_threshold", "minimum rule confidence");
  auto* embed = app.add_subcommand("train-embeddings", "train the reward-shaping embeddings");
  auto* pretrain = app.add_subcommand("pretrain", "pretrain the relation agent on rule rewards");
  keyed(pretrain, opts, "--ablation", "ablation", "full, freeze-pretrained, no-pretrain, single-agent");
  auto* train = app.add_subcommand("train", "jointly train both agents");
  keyed(train, opts, "--ablation", "ablation", "full, freeze-pretrained, no-pretrain, single-agent");
  auto* evaluate = app.add_subcommand("evaluate", "beam-search evaluation, writes metrics.tsv");
  keyed(evaluate, opts, "--split", "eval_split", "train, dev or test");
  keyed(evaluate, opts, "--beam-width", "beam_width", "beam width");
  auto* explain = app.add_subcommand("explain", "write reasoning paths to paths.txt");
  keyed(explain, opts, "--split", "eval_split", "train, dev or test");
  keyed(explain, opts, "--paths-per-query", "paths_per_query", "paths written per query");
  keyed(explain, opts, "--beam-width", "beam_width", "beam width");
  auto* report = app.add_subcommand("rule-report", "rank rules by precision on a split");
  keyed(report, opts, "--split", "eval_split", "train, dev or test");
  auto* run = app.add_subcommand("run", "all stages end to end");
  keyed(run, opts, "--ablation", "ablation", "full, freeze-pretrained, no-pretrain, single-agent");
  auto* show = app.add_subcommand("show-config", "print the effective configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    Session s(opts);
    if (*show) {
      std::fputs(s.dump().c_str(), stdout);
    } else if (*prepare) {
      const std::string kind = s.get("synthetic");
      if (!kind.empty()) {
        const std::string data = s.get("data");
        check(rw_generate_dataset(kind.c_str(), data.c_str(),
                                  std::stoull(s.get("synthetic_seed"))));
        std::printf("generated %s dataset in %s\n", kind.c_str(), data.c_str());
      }
      rw_graph_stats st{};
      check(rw_prepare(s.pipeline(), &st));
      std::printf("entities %llu  relations %llu  train %llu  dev %llu  test %llu\n",
                  static_cast<unsigned long long>(st.entities),
                  static_cast<unsigned long long>(st.relations),
                  static_cast<unsigned long long>(st.train),
                  static_cast<unsigned long long>(st.dev),
                  static_cast<unsigned long long>(st.test));
    } else if (*pagerank) {
      check(rw_compute_pagerank(s.pipeline()));
      std::printf("pagerank written to %s\n", s.artifact("pagerank").c_str());
    } else if (*mine) {
      uint64_t n = 0;
      check(rw_mine_rules(s.pipeline(), &n));
      std::printf("%llu rules written to %s\n", static_cast<unsigned long long>(n),
                  s.artifact("rules").c_str());
    } else if (*embed) {
      double mrr = -1.0;
      check(rw_train_embeddings(s.pipeline(), &mrr));
      std::printf("embeddings written to %s (best dev MRR %.2f)\n",
                  s.artifact("embeddings").c_str(), mrr);
    } else if (*pretrain) {
      int epochs = 0;
      check(rw_pretrain(s.pipeline(), &epochs));
      std::printf("pretrained %d epochs, policy written to %s\n", epochs,
                  s.artifact("pretrained").c_str());
    } else if (*train) {
      int epochs = 0;
      check(rw_train(s.pipeline(), &epochs));
      std::printf("trained %d epochs, policy written to %s\n", epochs,
                  s.artifact("policy").c_str());
    } else if (*evaluate) {
      const std::string split = s.get("eval_split");
      rw_metrics m{};
      check(rw_evaluate(s.pipeline(), split.c_str(), &m));
      print_metrics(split.c_str(), m);
    } else if (*explain) {
      const std::string split = s.get("eval_split");
      uint64_t n = 0;
      check(rw_explain(s.pipeline(), split.c_str(), &n));
      std::printf("paths for %llu queries written to %s\n", static_cast<unsigned long long>(n),
                  s.artifact("paths").c_str());
    } else if (*report) {
      const std::string split = s.get("eval_split");
      uint64_t n = 0;
      check(rw_rule_report(s.pipeline(), split.c_str(), &n));
      std::printf("%llu rules ranked in %s\n", static_cast<unsigned long long>(n),
                  s.artifact("rule_report").c_str());
    } else if (*run) {
      rw_metrics dev{}, test{};
      check(rw_run(s.pipeline(), &dev, &test));
      if (dev.queries) print_metrics("dev", dev);
      if (test.queries) print_metrics("test", test);
    }
  } catch (const Failure& f) {
    const char* msg = rw_last_error();
    if (msg[0]) std::fprintf(stderr, "error: %s\n", msg);
    return static_cast<int>(f.status);
  }
  return 0;
}

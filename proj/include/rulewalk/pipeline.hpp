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

// Stage orchestration over an output directory. Each stage reads the
// artifacts of earlier stages from memory when this object produced them and
// from disk otherwise, so stages can run in one process or one per command.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rulewalk/config.hpp"
#include "rulewalk/embed.hpp"
#include "rulewalk/eval.hpp"
#include "rulewalk/kg.hpp"
#include "rulewalk/policy.hpp"
#include "rulewalk/rules.hpp"
#include "rulewalk/trainer.hpp"

namespace rulewalk {

struct ArtifactPaths {
  explicit ArtifactPaths(const std::filesystem::path& out);

  std::filesystem::path dir;
  std::filesystem::path entities;
  std::filesystem::path relations;
  std::filesystem::path pagerank;
  std::filesystem::path rules;
  std::filesystem::path embeddings;
  std::filesystem::path pretrained;
  std::filesystem::path policy;
  std::filesystem::path train_log;
  std::filesystem::path metrics;
  std::filesystem::path paths;
  std::filesystem::path rule_report;
};

struct RunSummary {
  std::size_t rules = 0;
  double embedding_dev_mrr = -1.0;
  std::vector<EpochLog> pretrain_log;
  std::vector<EpochLog> train_log;
  MetricsReport dev;
  MetricsReport test;
};

Split parse_split(const std::string& name);
std::string to_string(Split split);

class Pipeline {
 public:
  // `log` receives progress lines; may be null.
  explicit Pipeline(Config config, std::ostream* log = nullptr);
  ~Pipeline();
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  const Config& config() const { return config_; }
  const ArtifactPaths& paths() const { return paths_; }

  // Loads the dataset once; writes the vocabulary files and the PageRank
  // cache into the output directory.
  const KnowledgeGraph& graph();
  // Recomputes PageRank and overwrites the cached file.
  std::vector<double> recompute_pagerank();

  const EmbeddingModel& train_embeddings();
  // In-memory model or embeddings.bin.
  const EmbeddingModel& embeddings();
  // Best dev MRR of the last embedding training in this process, or -1.
  double embedding_dev_mrr() const { return embedding_dev_mrr_; }

  const RuleIndex& mine_rules();
  // In-memory index or rules.tsv.
  const RuleIndex& rules();

  // Relation-agent pretraining; writes policy_pretrained.bin and restarts
  // train_log.tsv.
  std::vector<EpochLog> pretrain();
  // Joint training; writes policy.bin and appends to train_log.tsv.
  std::vector<EpochLog> train();
  // Trained policy, from memory or policy.bin.
  Policy& policy();

  std::vector<RankedPrediction> predict(Split split);
  // Writes metrics.tsv and paths.txt for the split.
  MetricsReport evaluate(Split split);
  // Writes paths.txt for the split's queries.
  std::vector<RankedPrediction> explain(Split split);
  // Writes rule_report.tsv from the split's queries.
  std::vector<RulePrecision> rule_report(Split split);

  // All stages, honoring the reuse_* flags.
  RunSummary run();

 private:
  void require_artifact(const std::filesystem::path& path, const std::string& what,
                        const std::string& stage) const;
  std::unique_ptr<Policy> fresh_policy();
  void progress(const std::string& line) const;
  void write_train_log(const std::vector<EpochLog>& logs, bool restart) const;

  Config config_;
  ArtifactPaths paths_;
  std::ostream* log_;
  std::optional<KnowledgeGraph> graph_;
  std::optional<EmbeddingModel> embeddings_;
  std::optional<RuleIndex> rules_;
  std::unique_ptr<Policy> policy_;
  bool policy_trained_ = false;
  double embedding_dev_mrr_ = -1.0;
};

}  // namespace rulewalk

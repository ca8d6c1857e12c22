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

#include "rulewalk/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "rulewalk/error.hpp"
#include "rulewalk/pagerank.hpp"

namespace rulewalk {
namespace fs = std::filesystem;

ArtifactPaths::ArtifactPaths(const fs::path& out)
    : dir(out),
      entities(out / "entities.tsv"),
      relations(out / "relations.tsv"),
      pagerank(out / "pagerank.tsv"),
      rules(out / "rules.tsv"),
      embeddings(out / "embeddings.bin"),
      pretrained(out / "policy_pretrained.bin"),
      policy(out / "policy.bin"),
      train_log(out / "train_log.tsv"),
      metrics(out / "metrics.tsv"),
      paths(out / "paths.txt"),
      rule_report(out / "rule_report.tsv") {}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  fail(ErrorCode::kConfig, "unknown split '" + name + "' (expected train, dev or test)");
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "test";
}

Pipeline::Pipeline(Config config, std::ostream* log)
    : config_(std::move(config)), paths_(config_.out_dir), log_(log) {
  validate(config_);
  require(!config_.out_dir.empty(), ErrorCode::kConfig, "output directory (out) is not set");
  std::error_code ec;
  fs::create_directories(config_.out_dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create " + config_.out_dir.string() + ": " + ec.message());
  config_.dataset.pagerank_cache = paths_.pagerank;
}

Pipeline::~Pipeline() = default;

void Pipeline::progress(const std::string& line) const {
  if (log_) *log_ << line << '\n' << std::flush;
}

void Pipeline::require_artifact(const fs::path& path, const std::string& what,
                                const std::string& stage) const {
  require(fs::exists(path), ErrorCode::kPrecondition,
          "missing " + what + " (" + path.string() + "); run '" + stage + "' first");
}

const KnowledgeGraph& Pipeline::graph() {
  if (graph_) return *graph_;
  require(!config_.data_dir.empty(), ErrorCode::kConfig, "data directory (data) is not set");
  graph_.emplace(load_dataset(config_.data_dir, config_.dataset));
  graph_->vocab().write(paths_.entities, paths_.relations);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "graph: %zu entities, %zu relations, %zu/%zu/%zu triples",
                graph_->num_entities(), graph_->vocab().num_data_relations(),
                graph_->split(Split::kTrain).size(), graph_->split(Split::kDev).size(),
                graph_->split(Split::kTest).size());
  progress(buf);
  return *graph_;
}

std::vector<double> Pipeline::recompute_pagerank() {
  std::error_code ec;
  fs::remove(paths_.pagerank, ec);
  policy_.reset();
  policy_trained_ = false;
  graph_.reset();
  const auto scores = graph().pagerank();
  return {scores.begin(), scores.end()};
}


const EmbeddingModel& Pipeline::train_embeddings() {
  const KnowledgeGraph& g = graph();
  progress("stage 1: training " + to_string(config_.embed.kind) + " embeddings");
  EmbedResult result = rulewalk::train_embeddings(g, embed_config(config_), log_);
  embedding_dev_mrr_ = result.best_dev_mrr;
  embeddings_.emplace(std::move(result.model));
  embeddings_->save(paths_.embeddings);
  return *embeddings_;
}

const EmbeddingModel& Pipeline::embeddings() {
  if (embeddings_) return *embeddings_;
  require_artifact(paths_.embeddings, "embeddings", "train-embeddings");
  EmbeddingModel model = EmbeddingModel::load(paths_.embeddings);
  const KnowledgeGraph& g = graph();
  require(model.num_entities() == g.num_entities() &&
              model.num_relations() == g.vocab().num_relations(),
          ErrorCode::kShape, paths_.embeddings.string() + " does not match the dataset");
  embeddings_.emplace(std::move(model));
  return *embeddings_;
}

const RuleIndex& Pipeline::mine_rules() {
  const KnowledgeGraph& g = graph();
  progress("stage 2: mining rules");
  rules_.emplace(mine(g, miner_config(config_)));
  write_rules(paths_.rules, *rules_, g.vocab());
  progress("rules: " + std::to_string(rules_->size()) + " above threshold");
  return *rules_;
}

const RuleIndex& Pipeline::rules() {
  if (rules_) return *rules_;
  require_artifact(paths_.rules, "rule index", "mine-rules");
  rules_.emplace(read_rules(paths_.rules, graph().vocab(), config_.miner.threshold));
  return *rules_;
}

std::unique_ptr<Policy> Pipeline::fresh_policy() {
  auto p = std::make_unique<Policy>(graph(), policy_config(config_), policy_seed(config_));
  if (config_.init_policy_embeddings) p->init_embeddings(embeddings());
  return p;
}

void Pipeline::write_train_log(const std::vector<EpochLog>& logs, bool restart) const {
  std::vector<std::string> kept;
  if (!restart) {
    // Keep earlier pretraining lines; drop joint lines from previous runs.
    std::ifstream in(paths_.train_log);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (header) {
        header = false;
        continue;
      }
      std::istringstream fields(line);
      std::string epoch, stage;
      if (std::getline(fields, epoch, '\t') && std::getline(fields, stage, '\t') && stage == "3") {
        kept.push_back(line);
      }
    }
  }
  std::ofstream out(paths_.train_log);
  require(out.good(), ErrorCode::kIo, "cannot open " + paths_.train_log.string());
  out << epoch_log_header() << '\n';
  for (const auto& line : kept) out << line << '\n';
  for (const auto& l : logs) out << epoch_log_line(l) << '\n';
  require(out.good(), ErrorCode::kIo, "write failed for " + paths_.train_log.string());
}

std::vector<EpochLog> Pipeline::pretrain() {
  const RuleIndex& index = rules();
  const EmbeddingModel& shaping = embeddings();
  policy_ = fresh_policy();
  policy_trained_ = false;
  TrainConfig tc = train_config(config_);
  tc.seed = pretrain_seed(config_);
  Trainer trainer(graph(), *policy_, index, &shaping, tc);
  trainer.on_epoch = [this](const EpochLog& l) { progress("stage 3 " + epoch_log_line(l)); };
  const int epochs = stage_epochs(tc).first;
  progress("stage 3: pretraining the relation agent for " + std::to_string(epochs) + " epochs");
  auto logs = trainer.pretrain(epochs);
  policy_->save(paths_.pretrained);
  write_train_log(logs, true);
  return logs;
}

std::vector<EpochLog> Pipeline::train() {
  const RuleIndex& index = rules();
  const EmbeddingModel& shaping = embeddings();
  const bool skip_pretrain = config_.train.ablation == Ablation::kNoPretrain;
  if (skip_pretrain) {
    policy_ = fresh_policy();
  } else if (!policy_ || policy_trained_) {
    require_artifact(paths_.pretrained, "pretrained policy", "pretrain");
    policy_ = fresh_policy();
    policy_->load(paths_.pretrained);
  }
  policy_trained_ = false;
  TrainConfig tc = train_config(config_);
  tc.seed = joint_seed(config_);
  Trainer trainer(graph(), *policy_, index, &shaping, tc);
  trainer.on_epoch = [this](const EpochLog& l) { progress("stage 4 " + epoch_log_line(l)); };
  const int epochs = stage_epochs(tc).second;
  progress("stage 4: joint training for " + std::to_string(epochs) + " epochs");
  auto logs = trainer.joint_train(epochs);
  policy_->save(paths_.policy);
  policy_trained_ = true;
  write_train_log(logs, skip_pretrain);
  return logs;
}

Policy& Pipeline::policy() {
  if (policy_ && policy_trained_) return *policy_;
  require_artifact(paths_.policy, "trained policy", "train");
  policy_ = std::make_unique<Policy>(graph(), policy_config(config_), policy_seed(config_));
  policy_->load(paths_.policy);
  policy_trained_ = true;
  return *policy_;
}

std::vector<RankedPrediction> Pipeline::predict(Split split) {
  Policy& p = policy();
  const RuleIndex& index = rules();
  const auto queries = queries_from(graph().split(split));
  return beam_search_all(p, queries, config_.beam_width, &index, config_.threads);
}

MetricsReport Pipeline::evaluate(Split split) {
  const auto preds = predict(split);
  const RuleIndex& index = rules();
  const MetricsReport report = rulewalk::evaluate(preds, graph(), config_.rank_mode, &index);
  write_metrics(paths_.metrics, to_string(split), report);
  export_paths(preds, graph().vocab(), paths_.paths, &index, config_.paths_per_query);
  if (log_) print_metrics_table(*log_, to_string(split), report);
  return report;
}

std::vector<RankedPrediction> Pipeline::explain(Split split) {
  auto preds = predict(split);
  export_paths(preds, graph().vocab(), paths_.paths, &rules(), config_.paths_per_query);
  return preds;
}

std::vector<RulePrecision> Pipeline::rule_report(Split split) {
  const RuleIndex& index = rules();
  auto report = rank_rules_by_accuracy(index, graph().split(split), graph());
  write_rule_report(paths_.rule_report, report, graph().vocab());
  return report;
}

RunSummary Pipeline::run() {
  RunSummary summary;
  graph();
  if (config_.reuse_embeddings && fs::exists(paths_.embeddings)) {
    progress("stage 1: reusing " + paths_.embeddings.string());
    embeddings();
  } else {
    train_embeddings();
  }
  summary.embedding_dev_mrr = embedding_dev_mrr_;
  if (config_.reuse_rules && fs::exists(paths_.rules)) {
    progress("stage 2: reusing " + paths_.rules.string());
    rules();
  } else {
    mine_rules();
  }
  summary.rules = rules_->size();
  if (config_.train.ablation != Ablation::kNoPretrain) {
    if (config_.reuse_pretrained && fs::exists(paths_.pretrained)) {
      progress("stage 3: reusing " + paths_.pretrained.string());
      policy_ = fresh_policy();
      policy_->load(paths_.pretrained);
      policy_trained_ = false;
    } else {
      summary.pretrain_log = pretrain();
    }
  }
  summary.train_log = train();
  if (!graph().split(Split::kDev).empty()) summary.dev = evaluate(Split::kDev);
  if (!graph().split(Split::kTest).empty()) summary.test = evaluate(Split::kTest);
  rule_report(graph().split(Split::kTest).empty() ? Split::kDev : Split::kTest);
  return summary;
}

}  // namespace rulewalk

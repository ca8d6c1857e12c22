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

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rulewalk/embed.hpp"
#include "rulewalk/eval.hpp"
#include "rulewalk/kg.hpp"
#include "rulewalk/optim.hpp"
#include "rulewalk/policy.hpp"
#include "rulewalk/reward.hpp"
#include "rulewalk/rules.hpp"

namespace rulewalk {

enum class Ablation { kFull, kFreezePretrained, kNoPretrain, kSingleAgent };

std::string to_string(Ablation a);
Ablation parse_ablation(const std::string& name);

struct TrainConfig {
  // Total walker epochs; split between pretraining and joint training when
  // the per-stage counts are negative.
  int epochs = 50;
  int pretrain_epochs = -1;
  int joint_epochs = -1;
  // Queries per mini-batch; each query contributes `rollouts` walks.
  int batch_size = 256;
  int rollouts = 20;
  double learning_rate = 0.001;
  // Entropy bonus weight.
  double beta = 0.0;
  double lambda = 0.65;
  bool use_baseline = true;
  double baseline_decay = 0.9;
  double grad_clip = 5.0;
  bool mask_answer_edge = true;
  Ablation ablation = Ablation::kFull;
  // Relation names whose train facts become training queries; empty: all.
  std::vector<std::string> query_relations;
  // Cap on training queries per epoch after shuffling; 0: no cap.
  int max_queries_per_epoch = 0;
  int dev_beam_width = 32;
  // Cap on dev queries used for per-epoch model selection; 0: no cap.
  int dev_max_queries = 0;
  int threads = 1;
  std::uint64_t seed = 1;
};

// Resolved (pretrain, joint) epoch counts.
std::pair<int, int> stage_epochs(const TrainConfig& config);
void validate(const TrainConfig& config);

// Policy-gradient loss for one batch:
//   -mean_i[(R_i - baseline) * log_prob_i] - beta * (sum of entropies / count)
// Every trajectory must have been rolled out on `tape`.
Var reinforce_loss(Tape& tape, std::span<const Trajectory> trajectories, double baseline,
                   double beta);

struct EpochLog {
  int epoch = 0;
  int stage = 0;
  double mean_reward = 0.0;
  double loss = 0.0;
  double dev_hits1 = 0.0;
  double dev_mrr = 0.0;
  double rule_usage = 0.0;
};

std::string epoch_log_header();
std::string epoch_log_line(const EpochLog& log);

// Training state shared by the walker stages.
class Trainer {
 public:
  Trainer(const KnowledgeGraph& graph, Policy& policy, const RuleIndex& rules,
          const EmbeddingModel* shaping, const TrainConfig& config);

  // Relation agent only, reward = rule confidence, entities uniform.
  // Leaves every other parameter bit-identical. Returns one log per epoch.
  std::vector<EpochLog> pretrain(int epochs);
  // Both agents with the mixed reward; keeps the best dev-MRR parameters.
  std::vector<EpochLog> joint_train(int epochs);

  // Training queries after relation filtering.
  const std::vector<Query>& queries() const { return queries_; }
  double baseline() const { return baseline_; }

  // Called after each epoch; used for progress output.
  std::function<void(const EpochLog&)> on_epoch;

 private:
  EpochLog run_epoch(int stage, int epoch, Adam& adam);
  void dev_metrics(EpochLog& log) const;

  const KnowledgeGraph* graph_;
  Policy* policy_;
  const RuleIndex* rules_;
  const EmbeddingModel* shaping_;
  TrainConfig config_;
  std::vector<Query> queries_;
  std::vector<Query> dev_queries_;
  Rng rng_;
  double baseline_ = 0.0;
};

// Greedy rollouts (no dropout, no masking) whose relation sequence matches a
// rule for the query relation, in percent of `queries`.
double greedy_rule_following(const Policy& policy, std::span<const Query> queries,
                             const RuleIndex& rules, EntityMode entity_mode, std::uint64_t seed);

}  // namespace rulewalk

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

#include "rulewalk/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rulewalk/error.hpp"

namespace rulewalk {
namespace {

// Restores trainable flags when a stage ends, including by exception.
class TrainableGuard {
 public:
  explicit TrainableGuard(ParameterTable& params) : params_(params) {
    for (std::size_t i = 0; i < params.size(); ++i) saved_.push_back(params.at(i).trainable);
  }
  ~TrainableGuard() {
    for (std::size_t i = 0; i < saved_.size(); ++i) params_.at(i).trainable = saved_[i];
  }
  TrainableGuard(const TrainableGuard&) = delete;
  TrainableGuard& operator=(const TrainableGuard&) = delete;

 private:
  ParameterTable& params_;
  std::vector<bool> saved_;
};

}  // namespace

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kFreezePretrained: return "freeze-pretrained";
    case Ablation::kNoPretrain: return "no-pretrain";
    case Ablation::kSingleAgent: return "single-agent";
  }
  return "full";
}

Ablation parse_ablation(const std::string& name) {
  for (Ablation a : {Ablation::kFull, Ablation::kFreezePretrained, Ablation::kNoPretrain,
                     Ablation::kSingleAgent}) {
    if (to_string(a) == name) return a;
  }
  fail(ErrorCode::kConfig, "unknown ablation '" + name +
                               "' (expected full, freeze-pretrained, no-pretrain or single-agent)");
}

std::pair<int, int> stage_epochs(const TrainConfig& c) {
  int pre = c.pretrain_epochs;
  if (pre < 0) pre = static_cast<int>(std::lround(0.2 * c.epochs));
  int joint = c.joint_epochs;
  if (joint < 0) joint = std::max(0, c.epochs - pre);
  // Skipping pretraining leaves the joint budget unchanged.
  if (c.ablation == Ablation::kNoPretrain) pre = 0;
  return {pre, joint};
}

void validate(const TrainConfig& c) {
  require(c.epochs >= 0, ErrorCode::kConfig, "epochs must be >= 0");
  require(c.batch_size >= 1, ErrorCode::kConfig, "batch_size must be >= 1");
  require(c.rollouts >= 1, ErrorCode::kConfig, "rollouts must be >= 1");
  require(c.learning_rate > 0.0, ErrorCode::kConfig, "learning_rate must be positive");
  require(c.beta >= 0.0, ErrorCode::kConfig, "beta must be >= 0");
  require(c.lambda >= 0.0 && c.lambda <= 1.0, ErrorCode::kConfig, "lambda must lie in [0, 1]");
  require(c.baseline_decay >= 0.0 && c.baseline_decay < 1.0, ErrorCode::kConfig,
          "baseline_decay must lie in [0, 1)");
  require(c.grad_clip >= 0.0, ErrorCode::kConfig, "grad_clip must be >= 0");
  require(c.dev_beam_width >= 1, ErrorCode::kConfig, "beam width must be >= 1");
  require(c.max_queries_per_epoch >= 0 && c.dev_max_queries >= 0, ErrorCode::kConfig,
          "query caps must be >= 0");
}

Var reinforce_loss(Tape& tape, std::span<const Trajectory> trajectories, double baseline,
                   double beta) {
  require(!trajectories.empty(), ErrorCode::kInvalidArgument, "reinforce_loss on an empty batch");
  const double n = static_cast<double>(trajectories.size());
  Var total;
  Var entropy;
  int distributions = 0;
  for (const Trajectory& t : trajectories) {
    require(t.log_prob.valid() && t.log_prob.tape() == &tape, ErrorCode::kState,
            "trajectory was not recorded on this tape");
    Var term = scale(t.log_prob, -(t.reward - baseline) / n);
    total = total.valid() ? add(total, term) : term;
    if (beta > 0.0 && t.entropy.valid()) {
      entropy = entropy.valid() ? add(entropy, t.entropy) : t.entropy;
      distributions += t.distributions;
    }
  }
  if (entropy.valid() && distributions > 0) {
    total = add(total, scale(entropy, -beta / distributions));
  }
  return total;
}

std::string epoch_log_header() {
  return "epoch\tstage\tmean_reward\tloss\tdev_hits1\tdev_mrr\trule_usage_pct";
}

std::string epoch_log_line(const EpochLog& l) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d\t%d\t%.6f\t%.6f\t%.4f\t%.4f\t%.4f", l.epoch, l.stage,
                l.mean_reward, l.loss, l.dev_hits1, l.dev_mrr, l.rule_usage);
  return buf;
}

Trainer::Trainer(const KnowledgeGraph& graph, Policy& policy, const RuleIndex& rules,
                 const EmbeddingModel* shaping, const TrainConfig& config)
    : graph_(&graph), policy_(&policy), rules_(&rules), shaping_(shaping), config_(config),
      rng_(config.seed) {
  validate(config);
  std::vector<RelationId> allowed;
  for (const auto& name : config.query_relations) {
    const auto r = graph.vocab().find_relation(name);
    require(r.has_value() && graph.vocab().is_data(*r), ErrorCode::kConfig,
            "query relation '" + name + "' is not a data relation of the graph");
    allowed.push_back(*r);
  }
  auto keep = [&](RelationId r) {
    return allowed.empty() || std::find(allowed.begin(), allowed.end(), r) != allowed.end();
  };
  for (const Triple& t : graph.split(Split::kTrain)) {
    if (keep(t.relation)) queries_.push_back(Query{t.subject, t.relation, t.object});
  }
  require(!queries_.empty(), ErrorCode::kPrecondition, "no training queries");
  for (const Triple& t : graph.split(Split::kDev)) {
    if (keep(t.relation)) dev_queries_.push_back(Query{t.subject, t.relation, t.object});
  }
  if (config.dev_max_queries > 0 &&
      dev_queries_.size() > static_cast<std::size_t>(config.dev_max_queries)) {
    dev_queries_.resize(static_cast<std::size_t>(config.dev_max_queries));
  }
}

void Trainer::dev_metrics(EpochLog& log) const {
  if (dev_queries_.empty()) return;
  const auto preds =
      beam_search_all(*policy_, dev_queries_, config_.dev_beam_width, rules_, config_.threads);
  const MetricsReport r = evaluate(preds, *graph_, RankMode::kFiltered, rules_);
  log.dev_hits1 = r.hits1;
  log.dev_mrr = r.mrr;
  log.rule_usage = r.rule_usage;
}

EpochLog Trainer::run_epoch(int stage, int epoch, Adam& adam) {
  std::vector<Query> order = queries_;
  std::shuffle(order.begin(), order.end(), rng_);
  if (config_.max_queries_per_epoch > 0 &&
      order.size() > static_cast<std::size_t>(config_.max_queries_per_epoch)) {
    order.resize(static_cast<std::size_t>(config_.max_queries_per_epoch));
  }
  RolloutOptions options;
  options.mode = SampleMode::kSample;
  options.train = true;
  options.mask_answer_edge = config_.mask_answer_edge;
  const bool uniform_entities = stage == 3 && !policy_->config().single_agent;
  options.entity_mode = uniform_entities ? EntityMode::kUniform : EntityMode::kPolicy;
  RewardConfig reward{config_.lambda, SplitSet::kTrain, rules_, shaping_};

  EpochLog log;
  log.epoch = epoch;
  log.stage = stage;
  double reward_sum = 0.0, loss_sum = 0.0;
  std::size_t walks = 0, batches = 0;
  ParameterTable& params = policy_->params();
  const auto batch = static_cast<std::size_t>(config_.batch_size);
  for (std::size_t start = 0; start < order.size(); start += batch) {
    const std::size_t end = std::min(order.size(), start + batch);
    Tape tape(true);
    std::vector<Trajectory> trajectories;
    trajectories.reserve((end - start) * static_cast<std::size_t>(config_.rollouts));
    double batch_reward = 0.0;
    for (std::size_t q = start; q < end; ++q) {
      for (int k = 0; k < config_.rollouts; ++k) {
        Trajectory t = policy_->rollout(tape, order[q], options, rng_);
        t.reward = stage == 3 ? rule_reward(t, *rules_) : total_reward(t, *graph_, reward);
        batch_reward += t.reward;
        trajectories.push_back(std::move(t));
      }
    }
    const double b = config_.use_baseline ? baseline_ : 0.0;
    Var loss = reinforce_loss(tape, trajectories, b, config_.beta);
    params.zero_grad();
    tape.backward(loss);
    if (config_.grad_clip > 0.0) params.clip_grad_norm(config_.grad_clip);
    adam.step(params);

    const double mean = batch_reward / static_cast<double>(trajectories.size());
    if (config_.use_baseline) {
      baseline_ = config_.baseline_decay * baseline_ + (1.0 - config_.baseline_decay) * mean;
    }
    reward_sum += batch_reward;
    walks += trajectories.size();
    loss_sum += loss.scalar();
    ++batches;
  }
  log.mean_reward = walks ? reward_sum / static_cast<double>(walks) : 0.0;
  log.loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
  return log;
}

std::vector<EpochLog> Trainer::pretrain(int epochs) {
  std::vector<EpochLog> logs;
  if (epochs <= 0) return logs;
  if (rules_->empty()) {
    warn("rule index is empty; skipping relation-agent pretraining");
    return logs;
  }
  ParameterTable& params = policy_->params();
  TrainableGuard guard(params);
  params.set_all_trainable(false);
  params.set_trainable(policy_->config().single_agent ? "single." : "rel.", true);
  Adam adam(AdamConfig{config_.learning_rate});
  baseline_ = 0.0;
  for (int e = 1; e <= epochs; ++e) {
    EpochLog log = run_epoch(3, e, adam);
    dev_metrics(log);
    if (on_epoch) on_epoch(log);
    logs.push_back(log);
  }
  return logs;
}

std::vector<EpochLog> Trainer::joint_train(int epochs) {
  std::vector<EpochLog> logs;
  if (epochs <= 0) return logs;
  ParameterTable& params = policy_->params();
  TrainableGuard guard(params);
  params.set_all_trainable(true);
  if (config_.ablation == Ablation::kFreezePretrained) params.set_trainable("rel.", false);
  Adam adam(AdamConfig{config_.learning_rate});
  baseline_ = 0.0;
  double best_mrr = -1.0;
  std::vector<Matrix> best;
  for (int e = 1; e <= epochs; ++e) {
    EpochLog log = run_epoch(4, e, adam);
    dev_metrics(log);
    if (!dev_queries_.empty() && log.dev_mrr > best_mrr) {
      best_mrr = log.dev_mrr;
      best = params.snapshot();
    }
    if (on_epoch) on_epoch(log);
    logs.push_back(log);
  }
  if (!best.empty()) params.restore(best);
  return logs;
}

double greedy_rule_following(const Policy& policy, std::span<const Query> queries,
                             const RuleIndex& rules, EntityMode entity_mode, std::uint64_t seed) {
  if (queries.empty()) return 0.0;
  Rng rng(seed);
  RolloutOptions options;
  options.mode = SampleMode::kGreedy;
  options.entity_mode = entity_mode;
  std::size_t hits = 0;
  for (const Query& q : queries) {
    Tape tape(false);
    const Trajectory t = policy.rollout(tape, q, options, rng);
    if (rules.match(t.relations(), q.relation)) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(queries.size());
}

}  // namespace rulewalk

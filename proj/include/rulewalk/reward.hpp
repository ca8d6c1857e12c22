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

#include <span>

#include "rulewalk/embed.hpp"
#include "rulewalk/kg.hpp"
#include "rulewalk/policy.hpp"
#include "rulewalk/rules.hpp"

namespace rulewalk {

struct RewardConfig {
  // Weight of the rule reward; the hit reward gets 1 - lambda.
  double lambda = 0.65;
  // Facts that count as hits. Dev and test facts must not leak in here
  // during training, so anything wider than kTrain is for diagnostics.
  SplitSet membership = SplitSet::kTrain;
  const RuleIndex* rules = nullptr;
  // Shaping model for misses; without one a miss scores 0.
  const EmbeddingModel* shaping = nullptr;
};

void validate(const RewardConfig& config);

// Confidence of the best rule for `query_relation` matching `path`, else 0.
double rule_reward(std::span<const RelationId> path, RelationId query_relation,
                   const RuleIndex& rules);
double rule_reward(const Trajectory& trajectory, const RuleIndex& rules);

// 1 when (source, relation, terminal) is a known fact in `membership`,
// otherwise the logistic of its embedding score.
double hit_reward(EntityId source, RelationId relation, EntityId terminal,
                  const KnowledgeGraph& graph, const EmbeddingModel* shaping,
                  SplitSet membership = SplitSet::kTrain);
double hit_reward(const Trajectory& trajectory, const KnowledgeGraph& graph,
                  const EmbeddingModel* shaping, SplitSet membership = SplitSet::kTrain);

inline double mix_reward(double lambda, double rule, double hit) {
  return lambda * rule + (1.0 - lambda) * hit;
}

double total_reward(const Trajectory& trajectory, const KnowledgeGraph& graph,
                    const RewardConfig& config);

}  // namespace rulewalk

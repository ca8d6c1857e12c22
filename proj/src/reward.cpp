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

#include "rulewalk/reward.hpp"

#include "rulewalk/error.hpp"

namespace rulewalk {

void validate(const RewardConfig& config) {
  require(config.lambda >= 0.0 && config.lambda <= 1.0, ErrorCode::kConfig,
          "lambda must lie in [0, 1], got " + std::to_string(config.lambda));
}

double rule_reward(std::span<const RelationId> path, RelationId query_relation,
                   const RuleIndex& rules) {
  const Rule* rule = rules.match(path, query_relation);
  return rule ? rule->confidence : 0.0;
}

double rule_reward(const Trajectory& trajectory, const RuleIndex& rules) {
  const auto path = trajectory.relations();
  return rule_reward(path, trajectory.query.relation, rules);
}

double hit_reward(EntityId source, RelationId relation, EntityId terminal,
                  const KnowledgeGraph& graph, const EmbeddingModel* shaping,
                  SplitSet membership) {
  if (graph.contains(source, relation, terminal, membership)) return 1.0;
  return shaping ? shaping->shaping(source, relation, terminal) : 0.0;
}

double hit_reward(const Trajectory& trajectory, const KnowledgeGraph& graph,
                  const EmbeddingModel* shaping, SplitSet membership) {
  return hit_reward(trajectory.query.source, trajectory.query.relation, trajectory.terminal,
                    graph, shaping, membership);
}

double total_reward(const Trajectory& trajectory, const KnowledgeGraph& graph,
                    const RewardConfig& config) {
  validate(config);
  double rule = 0.0;
  if (config.lambda > 0.0 && config.rules) rule = rule_reward(trajectory, *config.rules);
  double hit = 0.0;
  if (config.lambda < 1.0) hit = hit_reward(trajectory, graph, config.shaping, config.membership);
  return mix_reward(config.lambda, rule, hit);
}

}  // namespace rulewalk

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
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rulewalk/kg.hpp"

namespace rulewalk {

// Cyclic Horn rule head(X,Y) <= b1(X,A2), ..., bn(An,Y). Body atoms are ids
// over the reversed graph, so an inverse id stands for a flipped atom.
struct Rule {
  RelationId head = 0;
  std::vector<RelationId> body;
  double confidence = 0.0;
  std::int64_t support = 0;
  std::int64_t body_count = 0;
  // Grounding enumeration stopped at the cap; confidence is an estimate.
  bool approximate = false;
};

struct GroundedPath {
  std::vector<EntityId> entities;     // e_0 .. e_n
  std::vector<RelationId> relations;  // r_1 .. r_n
};

struct MinerConfig {
  int samples = 20000;
  int max_rule_length = 3;
  double threshold = 0.15;
  double smoothing = 5.0;
  std::int64_t grounding_cap = 10000;
  std::uint64_t seed = 1;
  int threads = 1;
};

// Rules grouped by head, each group sorted by descending confidence, then
// shorter bodies, then lexicographic body.
class RuleIndex {
 public:
  RuleIndex() = default;
  // Keeps rules with confidence >= threshold; duplicate (head, body) pairs
  // keep the highest-confidence copy.
  RuleIndex(std::vector<Rule> rules, double threshold, RelationId self_loop);

  // Best rule for `query_relation` whose body equals `path` with trailing
  // self-loops removed, or nullptr.
  const Rule* match(std::span<const RelationId> path,
                    RelationId query_relation) const;

  std::span<const Rule> rules_for(RelationId head) const;
  // All rules, heads ascending.
  std::vector<const Rule*> all() const;
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  double threshold() const { return threshold_; }
  RelationId self_loop() const { return self_loop_; }

 private:
  std::map<RelationId, std::vector<Rule>> by_head_;
  std::map<std::pair<RelationId, std::vector<RelationId>>, std::size_t> lookup_;
  std::size_t count_ = 0;
  double threshold_ = 0.0;
  RelationId self_loop_ = -1;
};

std::vector<GroundedPath> sample_paths(const KnowledgeGraph& graph, int count,
                                       int max_len, std::uint64_t seed);

// One candidate per data relation closing the path's endpoints in train.
// The identity rule r <= r is never produced.
std::vector<Rule> generalize(const GroundedPath& path, const KnowledgeGraph& graph);

// Sorted distinct Y reachable from `x` by walking `body` over train+reverse.
std::vector<EntityId> body_targets(const KnowledgeGraph& graph, EntityId x,
                                   std::span<const RelationId> body);

// Counts distinct (X, Y) body groundings in entity-id order, stopping after
// `grounding_cap`; confidence = support / (body_count + smoothing).
Rule score_rule(Rule rule, const KnowledgeGraph& graph,
                std::int64_t grounding_cap = 10000, double smoothing = 5.0);

RuleIndex mine(const KnowledgeGraph& graph, const MinerConfig& config);

// Text form used in rule files and reports.
std::string format_rule(const Rule& rule, const Vocabulary& vocab);

// `confidence<TAB>support<TAB>body_count<TAB>head(X,Y) <= b1(X,A2), ...`.
void write_rules(const std::filesystem::path& path, const RuleIndex& index,
                 const Vocabulary& vocab);
// Atoms with swapped variables are read as inverse relations. Rules naming
// unknown relations or constants are skipped with a warning.
RuleIndex read_rules(const std::filesystem::path& path,
                     const Vocabulary& vocab, double threshold = 0.0);

struct RulePrecision {
  Rule rule;
  std::int64_t groundings = 0;
  std::int64_t correct = 0;
  double precision = 0.0;
};

// Precision of each rule's predictions from the sources of `eval` queries
// with a matching head; a prediction counts as correct when the triple is
// known in any split. Rules that never fire are omitted.
std::vector<RulePrecision> rank_rules_by_accuracy(const RuleIndex& index,
                                                  std::span<const Triple> eval,
                                                  const KnowledgeGraph& graph);

void write_rule_report(const std::filesystem::path& path,
                       std::span<const RulePrecision> report,
                       const Vocabulary& vocab);

}  // namespace rulewalk

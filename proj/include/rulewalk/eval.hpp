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

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rulewalk/kg.hpp"
#include "rulewalk/policy.hpp"
#include "rulewalk/rules.hpp"

namespace rulewalk {

struct Candidate {
  EntityId entity = 0;
  std::vector<Action> path;
  double log_prob = 0.0;
  bool rule_matched = false;

  std::vector<RelationId> relations() const;
};

// Candidates in descending log-probability, one per entity.
struct RankedPrediction {
  Query query;
  std::vector<Candidate> candidates;
};

// Keeps the beam_width best partial paths by summed log-probability of both
// agents. `rules`, when given, sets Candidate::rule_matched.
RankedPrediction beam_search(const Policy& policy, const Query& query, int beam_width,
                             const RuleIndex* rules = nullptr);
std::vector<RankedPrediction> beam_search_all(const Policy& policy,
                                              std::span<const Query> queries, int beam_width,
                                              const RuleIndex* rules = nullptr, int threads = 1);

// Sorts paths by log-probability (ties: ascending entity id) and keeps the
// best path per entity. Shared by beam search and its tests.
std::vector<Candidate> rank_candidates(std::vector<Candidate> paths);

enum class RankMode { kRaw, kFiltered };

// 1-based rank of the query's answer, 0 when it is not among the candidates.
// Filtered mode skips other answers known in any split.
int answer_rank(const RankedPrediction& prediction, const KnowledgeGraph& graph, RankMode mode);

struct MetricsReport {
  double hits1 = 0.0;
  double hits5 = 0.0;
  double hits10 = 0.0;
  double mrr = 0.0;
  double rule_usage = 0.0;
  std::size_t queries = 0;
};

// Percentages. Predictions without an answer are rejected.
MetricsReport evaluate(std::span<const RankedPrediction> predictions, const KnowledgeGraph& graph,
                       RankMode mode = RankMode::kFiltered, const RuleIndex* rules = nullptr);

// Percentage of predictions whose top path matches a rule for the query
// relation, trailing self-loops ignored.
double rule_usage(std::span<const RankedPrediction> predictions, const RuleIndex& rules);

// One block per prediction: the top `paths_per_query` paths as
//   e_s --r_1--> e_1 ... e_T  [query: r_q]  [logprob: x]  [rule-matched: yes]
// followed by a blank line.
void export_paths(std::span<const RankedPrediction> predictions, const Vocabulary& vocab,
                  const std::filesystem::path& path, const RuleIndex* rules = nullptr,
                  int paths_per_query = 1);
void write_paths(std::ostream& out, std::span<const RankedPrediction> predictions,
                 const Vocabulary& vocab, const RuleIndex* rules, int paths_per_query);

std::string metrics_header();
std::string metrics_line(const std::string& label, const MetricsReport& report);
void print_metrics_table(std::ostream& out, const std::string& label,
                         const MetricsReport& report);
void write_metrics(const std::filesystem::path& path, const std::string& label,
                   const MetricsReport& report);

// Queries (s, r, ?) with answer o for every triple of `triples`.
std::vector<Query> queries_from(std::span<const Triple> triples);

}  // namespace rulewalk

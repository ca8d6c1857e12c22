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

// Walk policy over a KnowledgeGraph.
//
// Two-agent mode: at every hop the relation agent picks a relation among the
// distinct relations leaving the current entity, then the entity agent picks
// a target among that relation's successors. Each agent keeps its own LSTM
// history. Single-agent mode scores (relation, entity) pairs directly.
//
// Parameter names: "emb.*" embedding tables, "rel.*" relation agent,
// "ent.*" entity agent, "single.*" single-agent network.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "rulewalk/autodiff.hpp"
#include "rulewalk/embed.hpp"
#include "rulewalk/kg.hpp"
#include "rulewalk/lstm.hpp"
#include "rulewalk/tensor.hpp"

namespace rulewalk {

struct PolicyConfig {
  int relation_dim = 200;
  int entity_dim = 200;
  int hidden_dim = 200;
  int layers = 3;
  // Width of the ReLU layer between W2/W4 and W1/W3.
  int mlp_dim = 200;
  int hops = 3;
  bool single_agent = false;
  double embedding_dropout = 0.0;
  double hidden_dropout = 0.0;
  double relation_action_dropout = 0.0;
  double entity_action_dropout = 0.0;
};

struct AgentState {
  int step = 0;
  EntityId current = 0;
  Query query;
  LstmStack::State relation_history;
  // Unused in single-agent mode.
  LstmStack::State entity_history;
};

struct StepRecord {
  RelationId relation = 0;
  EntityId entity = 0;
  // Log-probabilities under the undropped distributions. In single-agent
  // mode the pair log-probability is stored as relation_logprob.
  double relation_logprob = 0.0;
  double entity_logprob = 0.0;
  std::vector<RelationId> relation_candidates;
  std::vector<std::uint8_t> relation_mask;
  std::vector<EntityId> entity_candidates;
  std::vector<std::uint8_t> entity_mask;
};

struct Trajectory {
  Query query;
  std::vector<StepRecord> steps;
  EntityId terminal = 0;
  double reward = 0.0;
  // Sum of the chosen log-probabilities of every agent that acted, and the
  // sum of the entropies of the distributions emitted. Present when the
  // rollout ran on a recording tape.
  Var log_prob;
  Var entropy;
  int distributions = 0;

  std::vector<RelationId> relations() const;
  std::vector<EntityId> entities() const;  // e_1 .. e_T
};

enum class SampleMode { kSample, kGreedy };
enum class EntityMode { kPolicy, kUniform };

struct RolloutOptions {
  SampleMode mode = SampleMode::kSample;
  // Enables dropout of activations and actions.
  bool train = false;
  EntityMode entity_mode = EntityMode::kPolicy;
  // Hide the query's own answer edge (and its reverse) from the walker.
  bool mask_answer_edge = false;
};

// Candidate set with probabilities, for inspection and tests.
template <typename Id>
struct Distribution {
  std::vector<Id> candidates;
  std::vector<double> probs;
};

class Policy {
 public:
  Policy(const KnowledgeGraph& graph, const PolicyConfig& config, std::uint64_t seed);

  const PolicyConfig& config() const { return config_; }
  const KnowledgeGraph& graph() const { return *graph_; }
  ParameterTable& params() { return params_; }
  const ParameterTable& params() const { return params_; }

  // Copies the stage-1 embeddings into the policy tables; widths must match.
  void init_embeddings(const EmbeddingModel& model);

  AgentState init_state(Tape& tape, const Query& query) const;

  // Distinct relations leaving `e` in ascending id order (self-loop last).
  std::vector<RelationId> relation_candidates(EntityId e) const;
  // Successors of `e` through `r` in the pruned action space.
  std::vector<EntityId> entity_candidates(EntityId e, RelationId r) const;

  // R_t W1 ReLU(W2 [h^R; r_q]) over `candidates`.
  Var relation_logits(Tape& tape, const AgentState& state,
                      std::span<const RelationId> candidates, bool train = false,
                      Rng* rng = nullptr) const;
  // E_t W3 ReLU(W4 [h^E; r_q; e_s; e_t]) over `candidates`.
  Var entity_logits(Tape& tape, const AgentState& state,
                    std::span<const EntityId> candidates, bool train = false,
                    Rng* rng = nullptr) const;
  // Single-agent scores over (relation, entity) pairs.
  Var pair_logits(Tape& tape, const AgentState& state, std::span<const Action> candidates,
                  bool train = false, Rng* rng = nullptr) const;

  // Query-dependent projection vectors: logits are candidate embeddings
  // times these (relation / entity / pair width x 1).
  Var relation_projection(Tape& tape, const AgentState& state, bool train = false,
                          Rng* rng = nullptr) const;
  Var entity_projection(Tape& tape, const AgentState& state, bool train = false,
                        Rng* rng = nullptr) const;

  Distribution<RelationId> relation_distribution(const AgentState& state, Tape& tape) const;
  // Throws Error(kPrecondition) when `chosen` does not leave the current entity.
  Distribution<EntityId> entity_distribution(const AgentState& state, RelationId chosen,
                                             Tape& tape) const;

  // Feeds the chosen relation and entity into the histories and moves the
  // walker to `entity`.
  AgentState advance(Tape& tape, const AgentState& state, RelationId relation,
                     EntityId entity, bool train = false, Rng* rng = nullptr) const;

  Trajectory rollout(Tape& tape, const Query& query, const RolloutOptions& options,
                     Rng& rng) const;

  void save(const std::filesystem::path& path) const;
  // Loads values saved from a policy with the same configuration and graph.
  void load(const std::filesystem::path& path);

 private:
  Var embed_relation(Tape& tape, RelationId r, bool train, Rng* rng) const;
  Var embed_entity(Tape& tape, EntityId e, bool train, Rng* rng) const;
  bool edge_hidden(const Query& query, EntityId from, RelationId r, EntityId to) const;

  const KnowledgeGraph* graph_;
  PolicyConfig config_;
  ParameterTable params_;
  Parameter* relation_table_ = nullptr;
  Parameter* entity_table_ = nullptr;
  std::unique_ptr<LstmStack> relation_lstm_;
  std::unique_ptr<LstmStack> entity_lstm_;
  Parameter* w1_ = nullptr;
  Parameter* w2_ = nullptr;
  Parameter* w3_ = nullptr;
  Parameter* w4_ = nullptr;
};

// `subject<TAB>query_relation<TAB>r_1<TAB>e_1 ... r_T<TAB>e_T<TAB>reward`.
void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories,
                        const Vocabulary& vocab);

}  // namespace rulewalk

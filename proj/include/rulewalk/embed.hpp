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
#include "rulewalk/tensor.hpp"

namespace rulewalk {

enum class EmbeddingKind { kComplEx, kDistMult };

std::string to_string(EmbeddingKind kind);
EmbeddingKind parse_embedding_kind(const std::string& name);

// Bilinear KG embedding. ComplEx rows store the real half followed by the
// imaginary half, so `dim` counts reals and must be even.
class EmbeddingModel {
 public:
  EmbeddingModel(EmbeddingKind kind, std::size_t num_entities,
                 std::size_t num_relations, int dim);

  EmbeddingKind kind() const { return kind_; }
  int dim() const { return dim_; }
  std::size_t num_entities() const { return static_cast<std::size_t>(entity().value.rows()); }
  std::size_t num_relations() const { return static_cast<std::size_t>(relation().value.rows()); }

  void initialize(double limit, Rng& rng);

  // DistMult: sum_k s_k r_k o_k. ComplEx: Re(sum_k s_k r_k conj(o_k)).
  double score(EntityId s, RelationId r, EntityId o) const;
  // logistic(score); always strictly inside (0, 1) for finite scores.
  double shaping(EntityId s, RelationId r, EntityId o) const;
  // score(s, r, o) for every entity o.
  std::vector<double> score_objects(EntityId s, RelationId r) const;

  // Adds d(score)/d(row) * weight into the gradient rows of s, r and o.
  void accumulate_score_gradient(EntityId s, RelationId r, EntityId o, double weight);

  ParameterTable& params() { return params_; }
  const ParameterTable& params() const { return params_; }
  Parameter& entity() { return *entity_; }
  const Parameter& entity() const { return *entity_; }
  Parameter& relation() { return *relation_; }
  const Parameter& relation() const { return *relation_; }

  void save(const std::filesystem::path& path) const;
  static EmbeddingModel load(const std::filesystem::path& path);

 private:
  void check_ids(EntityId s, RelationId r, EntityId o) const;

  EmbeddingKind kind_;
  int dim_;
  ParameterTable params_;
  Parameter* entity_;
  Parameter* relation_;
};

double logistic(double x);

struct EmbedConfig {
  EmbeddingKind kind = EmbeddingKind::kComplEx;
  int dim = 200;
  int negatives = 10;
  double learning_rate = 0.003;
  int epochs = 100;
  int batch_size = 128;
  double l2 = 1e-4;
  double init_range = 0.1;
  // Dev evaluation period in epochs; 0 disables selection by dev MRR.
  int eval_every = 1;
  std::uint64_t seed = 1;
};

// Mean binary cross-entropy of the positives against `negatives` corrupted
// objects each (neg_objects holds positives.size() * k ids, grouped per
// positive), plus l2 times the mean squared norm of the rows touched.
// Gradients are accumulated into the model's parameter grads.
double embedding_batch_loss(EmbeddingModel& model, std::span<const Triple> positives,
                            std::span<const EntityId> neg_objects, double l2);

struct EmbedEpoch {
  int epoch = 0;
  double loss = 0.0;
  double dev_mrr = -1.0;  // percent; negative when not evaluated
};

struct EmbedResult {
  EmbeddingModel model;
  std::vector<EmbedEpoch> history;
  int best_epoch = 0;
  double best_dev_mrr = -1.0;
};

// Trains on the train facts plus reverse links with uniformly corrupted
// objects, returning the parameters with the best dev filtered MRR.
EmbedResult train_embeddings(const KnowledgeGraph& graph, const EmbedConfig& config,
                             std::ostream* log = nullptr);

// Filtered tail-query MRR in percent over `queries`.
double embedding_filtered_mrr(const EmbeddingModel& model, const KnowledgeGraph& graph,
                              std::span<const Triple> queries);
// Filtered rank (1-based) of the object of `t`.
int embedding_filtered_rank(const EmbeddingModel& model, const KnowledgeGraph& graph,
                            const Triple& t);

}  // namespace rulewalk

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

#include "rulewalk/embed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "rulewalk/checkpoint.hpp"
#include "rulewalk/error.hpp"
#include "rulewalk/optim.hpp"

namespace rulewalk {
namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

std::string to_string(EmbeddingKind kind) {
  return kind == EmbeddingKind::kComplEx ? "complex" : "distmult";
}

EmbeddingKind parse_embedding_kind(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "complex") return EmbeddingKind::kComplEx;
  if (lower == "distmult") return EmbeddingKind::kDistMult;
  fail(ErrorCode::kConfig, "unknown embedding kind '" + name + "' (expected complex or distmult)");
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  // exp underflows to zero below about -745; stay strictly positive.
  const double e = std::exp(std::max(x, -700.0));
  return e / (1.0 + e);
}

EmbeddingModel::EmbeddingModel(EmbeddingKind kind, std::size_t num_entities,
                               std::size_t num_relations, int dim)
    : kind_(kind), dim_(dim) {
  require(dim > 0, ErrorCode::kConfig, "embedding dimension must be positive");
  require(kind != EmbeddingKind::kComplEx || dim % 2 == 0, ErrorCode::kConfig,
          "ComplEx needs an even dimension, got " + std::to_string(dim));
  entity_ = &params_.add("embed.entity", static_cast<int>(num_entities), dim);
  relation_ = &params_.add("embed.relation", static_cast<int>(num_relations), dim);
}

void EmbeddingModel::initialize(double limit, Rng& rng) {
  init_uniform(entity_->value, limit, rng);
  init_uniform(relation_->value, limit, rng);
}

void EmbeddingModel::check_ids(EntityId s, RelationId r, EntityId o) const {
  const auto ne = static_cast<EntityId>(num_entities());
  const auto nr = static_cast<RelationId>(num_relations());
  require(s >= 0 && s < ne && o >= 0 && o < ne, ErrorCode::kLookup,
          "entity id out of range in embedding lookup");
  require(r >= 0 && r < nr, ErrorCode::kLookup, "relation id " + std::to_string(r) +
                                                    " out of range in embedding lookup");
}

double EmbeddingModel::score(EntityId s, RelationId r, EntityId o) const {
  check_ids(s, r, o);
  const double* sv = entity_->value.row_ptr(s);
  const double* rv = relation_->value.row_ptr(r);
  const double* ov = entity_->value.row_ptr(o);
  double total = 0.0;
  if (kind_ == EmbeddingKind::kDistMult) {
    // Subject and object multiply first so swapping them is exact.
    for (int k = 0; k < dim_; ++k) total += (sv[k] * ov[k]) * rv[k];
    return total;
  }
  const int h = dim_ / 2;
  for (int k = 0; k < h; ++k) {
    const double sr = sv[k], si = sv[h + k];
    const double rr = rv[k], ri = rv[h + k];
    const double orr = ov[k], oi = ov[h + k];
    total += rr * (sr * orr + si * oi) + ri * (sr * oi - si * orr);
  }
  return total;
}

double EmbeddingModel::shaping(EntityId s, RelationId r, EntityId o) const {
  // Keep misses strictly below a real hit even for huge scores.
  return std::min(logistic(score(s, r, o)), std::nextafter(1.0, 0.0));
}

std::vector<double> EmbeddingModel::score_objects(EntityId s, RelationId r) const {
  check_ids(s, r, 0);
  const double* sv = entity_->value.row_ptr(s);
  const double* rv = relation_->value.row_ptr(r);
  // Precompute the s*r factor so each object costs one dot product.
  std::vector<double> q(static_cast<std::size_t>(dim_));
  if (kind_ == EmbeddingKind::kDistMult) {
    for (int k = 0; k < dim_; ++k) q[k] = sv[k] * rv[k];
  } else {
    const int h = dim_ / 2;
    for (int k = 0; k < h; ++k) {
      q[k] = rv[k] * sv[k] - rv[h + k] * sv[h + k];
      q[h + k] = rv[k] * sv[h + k] + rv[h + k] * sv[k];
    }
  }
  std::vector<double> out(num_entities());
  for (std::size_t o = 0; o < out.size(); ++o) {
    const double* ov = entity_->value.row_ptr(static_cast<int>(o));
    out[o] = std::inner_product(q.begin(), q.end(), ov, 0.0);
  }
  return out;
}

void EmbeddingModel::accumulate_score_gradient(EntityId s, RelationId r, EntityId o,
                                               double weight) {
  check_ids(s, r, o);
  const double* sv = entity_->value.row_ptr(s);
  const double* rv = relation_->value.row_ptr(r);
  const double* ov = entity_->value.row_ptr(o);
  double* gs = entity_->grad.row_ptr(s);
  double* gr = relation_->grad.row_ptr(r);
  double* go = entity_->grad.row_ptr(o);
  // Read values before writing: s and o may share a row.
  if (kind_ == EmbeddingKind::kDistMult) {
    for (int k = 0; k < dim_; ++k) {
      const double a = sv[k], b = rv[k], c = ov[k];
      gs[k] += weight * b * c;
      gr[k] += weight * a * c;
      go[k] += weight * a * b;
    }
    return;
  }
  const int h = dim_ / 2;
  for (int k = 0; k < h; ++k) {
    const double sr = sv[k], si = sv[h + k];
    const double rr = rv[k], ri = rv[h + k];
    const double orr = ov[k], oi = ov[h + k];
    gs[k] += weight * (rr * orr + ri * oi);
    gs[h + k] += weight * (rr * oi - ri * orr);
    gr[k] += weight * (sr * orr + si * oi);
    gr[h + k] += weight * (sr * oi - si * orr);
    go[k] += weight * (rr * sr - ri * si);
    go[h + k] += weight * (rr * si + ri * sr);
  }
}

void EmbeddingModel::save(const std::filesystem::path& path) const {
  auto ckpt = to_checkpoint(params_, {{"artifact", "embeddings"},
                                      {"kind", to_string(kind_)},
                                      {"dim", std::to_string(dim_)}});
  write_checkpoint(path, ckpt);
}

EmbeddingModel EmbeddingModel::load(const std::filesystem::path& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  require(ckpt.meta_at("artifact") == "embeddings", ErrorCode::kParse,
          path.string() + " does not hold embeddings");
  const EmbeddingKind kind = parse_embedding_kind(ckpt.meta_at("kind"));
  const int dim = std::stoi(ckpt.meta_at("dim"));
  const NamedArray* ent = ckpt.find("embed.entity");
  const NamedArray* rel = ckpt.find("embed.relation");
  require(ent && rel, ErrorCode::kParse, path.string() + " lacks embedding tables");
  EmbeddingModel model(kind, static_cast<std::size_t>(ent->value.rows()),
                       static_cast<std::size_t>(rel->value.rows()), dim);
  load_parameters(ckpt, model.params_);
  return model;
}

double embedding_batch_loss(EmbeddingModel& model, std::span<const Triple> positives,
                            std::span<const EntityId> neg_objects, double l2) {
  require(!positives.empty(), ErrorCode::kInvalidArgument, "empty embedding batch");
  require(neg_objects.size() % positives.size() == 0, ErrorCode::kShape,
          "negatives must come in equal groups per positive");
  const std::size_t k = neg_objects.size() / positives.size();
  const double n = static_cast<double>(positives.size());
  double loss = 0.0;
  std::unordered_set<EntityId> ent_rows;
  std::unordered_set<RelationId> rel_rows;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const Triple& t = positives[i];
    const double sp = model.score(t.subject, t.relation, t.object);
    loss += softplus(-sp) / n;
    model.accumulate_score_gradient(t.subject, t.relation, t.object, (logistic(sp) - 1.0) / n);
    ent_rows.insert(t.subject);
    ent_rows.insert(t.object);
    rel_rows.insert(t.relation);
    for (std::size_t j = 0; j < k; ++j) {
      const EntityId o = neg_objects[i * k + j];
      const double sn = model.score(t.subject, t.relation, o);
      const double w = 1.0 / (n * static_cast<double>(k));
      loss += softplus(sn) * w;
      model.accumulate_score_gradient(t.subject, t.relation, o, logistic(sn) * w);
      ent_rows.insert(o);
    }
  }
  if (l2 > 0.0) {
    const double rows = static_cast<double>(ent_rows.size() + rel_rows.size());
    auto reg = [&](Parameter& p, int row) {
      const double* v = p.value.row_ptr(row);
      double* g = p.grad.row_ptr(row);
      for (int c = 0; c < p.value.cols(); ++c) {
        loss += l2 * v[c] * v[c] / rows;
        g[c] += 2.0 * l2 * v[c] / rows;
      }
    };
    for (EntityId e : ent_rows) reg(model.entity(), e);
    for (RelationId r : rel_rows) reg(model.relation(), r);
  }
  return loss;
}

int embedding_filtered_rank(const EmbeddingModel& model, const KnowledgeGraph& graph,
                            const Triple& t) {
  const std::vector<double> scores = model.score_objects(t.subject, t.relation);
  const double target = scores[static_cast<std::size_t>(t.object)];
  const auto known = graph.known_answers(t.subject, t.relation);
  int rank = 1;
  for (std::size_t o = 0; o < scores.size(); ++o) {
    const auto e = static_cast<EntityId>(o);
    if (e == t.object) continue;
    const bool better = scores[o] > target || (scores[o] == target && e < t.object);
    if (!better) continue;
    if (std::binary_search(known.begin(), known.end(), e)) continue;
    ++rank;
  }
  return rank;
}

double embedding_filtered_mrr(const EmbeddingModel& model, const KnowledgeGraph& graph,
                              std::span<const Triple> queries) {
  if (queries.empty()) return 0.0;
  double total = 0.0;
  for (const Triple& t : queries) total += 1.0 / embedding_filtered_rank(model, graph, t);
  return 100.0 * total / static_cast<double>(queries.size());
}

EmbedResult train_embeddings(const KnowledgeGraph& graph, const EmbedConfig& config,
                             std::ostream* log) {
  require(config.negatives >= 1, ErrorCode::kConfig, "embedding negatives must be >= 1");
  require(config.batch_size >= 1, ErrorCode::kConfig, "embedding batch size must be >= 1");
  require(config.epochs >= 0, ErrorCode::kConfig, "embedding epochs must be >= 0");
  const auto train = graph.train_with_reverse();
  require(!train.empty(), ErrorCode::kPrecondition, "embedding training needs train facts");

  Rng rng(config.seed);
  EmbedResult result{EmbeddingModel(config.kind, graph.num_entities(),
                                    graph.vocab().num_relations(), config.dim),
                     {}, 0, -1.0};
  EmbeddingModel& model = result.model;
  model.initialize(config.init_range, rng);
  Adam adam(AdamConfig{config.learning_rate});

  const auto dev = graph.split(Split::kDev);
  const bool select = config.eval_every > 0 && !dev.empty();
  std::vector<Matrix> best = model.params().snapshot();

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::uniform_int_distribution<EntityId> pick_entity(
      0, static_cast<EntityId>(graph.num_entities()) - 1);
  std::vector<Triple> batch;
  std::vector<EntityId> negs;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      negs.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(train[order[i]]);
        for (int j = 0; j < config.negatives; ++j) negs.push_back(pick_entity(rng));
      }
      model.params().zero_grad();
      epoch_loss += embedding_batch_loss(model, batch, negs, config.l2);
      adam.step(model.params());
      ++batches;
    }
    EmbedEpoch rec{epoch, epoch_loss / std::max(batches, 1), -1.0};
    if (select && (epoch % config.eval_every == 0 || epoch == config.epochs)) {
      rec.dev_mrr = embedding_filtered_mrr(model, graph, dev);
      if (rec.dev_mrr > result.best_dev_mrr) {
        result.best_dev_mrr = rec.dev_mrr;
        result.best_epoch = epoch;
        best = model.params().snapshot();
      }
    }
    if (log) {
      *log << "embed epoch " << epoch << "\tloss " << rec.loss;
      if (rec.dev_mrr >= 0.0) *log << "\tdev_mrr " << rec.dev_mrr;
      *log << '\n';
    }
    result.history.push_back(rec);
  }
  if (select && result.best_epoch > 0) {
    model.params().restore(best);
  } else {
    result.best_epoch = config.epochs;
  }
  return result;
}

}  // namespace rulewalk

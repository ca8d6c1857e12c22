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

#include "rulewalk/policy.hpp"

#include <algorithm>
#include <ostream>

#include "rulewalk/checkpoint.hpp"
#include "rulewalk/error.hpp"

namespace rulewalk {
namespace {

constexpr double kEmbeddingInit = 0.08;

// Applies action dropout to a validity mask. At least one valid entry
// survives whenever the input has one.
std::vector<std::uint8_t> drop_actions(std::span<const std::uint8_t> mask, double rate,
                                       Rng& rng) {
  std::vector<std::uint8_t> keep(mask.begin(), mask.end());
  if (rate <= 0.0) return keep;
  std::bernoulli_distribution survive(1.0 - rate);
  bool any = false;
  for (auto& k : keep) {
    if (k) {
      k = survive(rng) ? 1 : 0;
      any = any || k;
    }
  }
  if (!any) {
    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) valid.push_back(i);
    }
    if (!valid.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
      keep[valid[pick(rng)]] = 1;
    }
  }
  return keep;
}

std::size_t argmax_masked(std::span<const double> logits, std::span<const std::uint8_t> mask) {
  std::size_t best = logits.size();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    if (best == logits.size() || logits[i] > logits[best]) best = i;
  }
  require(best < logits.size(), ErrorCode::kState, "no valid action to choose from");
  return best;
}

std::size_t sample_masked(std::span<const double> logits, std::span<const std::uint8_t> mask,
                          Rng& rng) {
  const std::vector<double> p = softmax_values(logits, mask);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double acc = 0.0;
  std::size_t last = p.size();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!mask[i]) continue;
    acc += p[i];
    last = i;
    if (x < acc) return i;
  }
  return last;
}

std::size_t choose(std::span<const double> logits, std::span<const std::uint8_t> mask,
                   double action_dropout, const RolloutOptions& options, Rng& rng) {
  const auto keep =
      options.train ? drop_actions(mask, action_dropout, rng)
                    : std::vector<std::uint8_t>(mask.begin(), mask.end());
  return options.mode == SampleMode::kGreedy ? argmax_masked(logits, keep)
                                             : sample_masked(logits, keep, rng);
}

Var accumulate(Var total, Var term) { return total.valid() ? add(total, term) : term; }

}  // namespace

std::vector<RelationId> Trajectory::relations() const {
  std::vector<RelationId> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.relation);
  return out;
}

std::vector<EntityId> Trajectory::entities() const {
  std::vector<EntityId> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.entity);
  return out;
}

Policy::Policy(const KnowledgeGraph& graph, const PolicyConfig& config, std::uint64_t seed)
    : graph_(&graph), config_(config) {
  require(config.relation_dim > 0 && config.entity_dim > 0 && config.hidden_dim > 0 &&
              config.mlp_dim > 0 && config.layers > 0,
          ErrorCode::kConfig, "policy dimensions must be positive");
  require(config.hops >= 1, ErrorCode::kConfig, "hops must be >= 1");
  for (double rate : {config.embedding_dropout, config.hidden_dropout,
                      config.relation_action_dropout, config.entity_action_dropout}) {
    require(rate >= 0.0 && rate <= 0.95, ErrorCode::kConfig,
            "dropout rates must lie in [0, 0.95]");
  }
  Rng rng(seed);
  const int dr = config.relation_dim, de = config.entity_dim;
  const int h = config.hidden_dim, m = config.mlp_dim;
  relation_table_ = &params_.add("emb.relation",
                                 static_cast<int>(graph.vocab().num_relations()), dr);
  init_uniform(relation_table_->value, kEmbeddingInit, rng);
  entity_table_ = &params_.add("emb.entity", static_cast<int>(graph.num_entities()), de);
  init_uniform(entity_table_->value, kEmbeddingInit, rng);
  if (config.single_agent) {
    relation_lstm_ =
        std::make_unique<LstmStack>(params_, "single.lstm", config.layers, dr + de, h, rng);
    w2_ = &params_.add("single.w2", m, h + dr);
    w1_ = &params_.add("single.w1", dr + de, m);
    init_xavier(w2_->value, rng);
    init_xavier(w1_->value, rng);
    return;
  }
  relation_lstm_ = std::make_unique<LstmStack>(params_, "rel.lstm", config.layers, dr, h, rng);
  w2_ = &params_.add("rel.w2", m, h + dr);
  w1_ = &params_.add("rel.w1", dr, m);
  init_xavier(w2_->value, rng);
  init_xavier(w1_->value, rng);
  entity_lstm_ = std::make_unique<LstmStack>(params_, "ent.lstm", config.layers, de, h, rng);
  w4_ = &params_.add("ent.w4", m, h + dr + 2 * de);
  w3_ = &params_.add("ent.w3", de, m);
  init_xavier(w4_->value, rng);
  init_xavier(w3_->value, rng);
}

void Policy::init_embeddings(const EmbeddingModel& model) {
  require(model.dim() == config_.relation_dim && model.dim() == config_.entity_dim,
          ErrorCode::kConfig,
          "embedding width " + std::to_string(model.dim()) + " differs from the policy's");
  require(model.entity().value.same_shape(entity_table_->value) &&
              model.relation().value.same_shape(relation_table_->value),
          ErrorCode::kShape, "embedding tables do not match the graph");
  entity_table_->value = model.entity().value;
  relation_table_->value = model.relation().value;
}

Var Policy::embed_relation(Tape& tape, RelationId r, bool train, Rng* rng) const {
  Var v = lookup(tape.param(*relation_table_), r);
  if (train && config_.embedding_dropout > 0.0) {
    require(rng != nullptr, ErrorCode::kInvalidArgument, "dropout needs an rng");
    v = dropout(v, config_.embedding_dropout, true, *rng);
  }
  return v;
}

Var Policy::embed_entity(Tape& tape, EntityId e, bool train, Rng* rng) const {
  Var v = lookup(tape.param(*entity_table_), e);
  if (train && config_.embedding_dropout > 0.0) {
    require(rng != nullptr, ErrorCode::kInvalidArgument, "dropout needs an rng");
    v = dropout(v, config_.embedding_dropout, true, *rng);
  }
  return v;
}

AgentState Policy::init_state(Tape& tape, const Query& query) const {
  const Vocabulary& vocab = graph_->vocab();
  require(query.source >= 0 && static_cast<std::size_t>(query.source) < graph_->num_entities(),
          ErrorCode::kLookup, "query source out of range");
  require(vocab.is_data(query.relation) || vocab.is_inverse(query.relation),
          ErrorCode::kLookup, "query relation must be a data or inverse relation");
  AgentState s;
  s.step = 0;
  s.current = query.source;
  s.query = query;
  Var start = embed_relation(tape, vocab.start_relation(), false, nullptr);
  if (config_.single_agent) {
    Var input = concat({start, embed_entity(tape, query.source, false, nullptr)});
    s.relation_history = relation_lstm_->step(tape, relation_lstm_->zero_state(tape), input);
    return s;
  }
  s.relation_history = relation_lstm_->step(tape, relation_lstm_->zero_state(tape), start);
  s.entity_history = entity_lstm_->step(tape, entity_lstm_->zero_state(tape),
                                        embed_entity(tape, query.source, false, nullptr));
  return s;
}

std::vector<RelationId> Policy::relation_candidates(EntityId e) const {
  std::vector<RelationId> out;
  for (const Action& a : graph_->actions_from(e)) {
    if (std::find(out.begin(), out.end(), a.relation) == out.end()) out.push_back(a.relation);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<EntityId> Policy::entity_candidates(EntityId e, RelationId r) const {
  std::vector<EntityId> out;
  for (const Action& a : graph_->actions_from(e)) {
    if (a.relation == r) out.push_back(a.entity);
  }
  return out;
}

bool Policy::edge_hidden(const Query& query, EntityId from, RelationId r, EntityId to) const {
  if (!query.answer) return false;
  const EntityId ans = *query.answer;
  if (from == query.source && r == query.relation && to == ans) return true;
  return from == ans && r == graph_->vocab().inverse(query.relation) && to == query.source;
}

Var Policy::relation_projection(Tape& tape, const AgentState& state, bool train,
                                Rng* rng) const {
  Var x = concat({state.relation_history.top(),
                  embed_relation(tape, state.query.relation, train, rng)});
  Var hidden = relu(matmul(tape.param(*w2_), x));
  if (train && config_.hidden_dropout > 0.0) hidden = dropout(hidden, config_.hidden_dropout, true, *rng);
  return matmul(tape.param(*w1_), hidden);
}

Var Policy::entity_projection(Tape& tape, const AgentState& state, bool train,
                              Rng* rng) const {
  require(!config_.single_agent, ErrorCode::kState, "single-agent policy has no entity agent");
  Var x = concat({state.entity_history.top(),
                  embed_relation(tape, state.query.relation, train, rng),
                  embed_entity(tape, state.query.source, train, rng),
                  embed_entity(tape, state.current, train, rng)});
  Var hidden = relu(matmul(tape.param(*w4_), x));
  if (train && config_.hidden_dropout > 0.0) hidden = dropout(hidden, config_.hidden_dropout, true, *rng);
  return matmul(tape.param(*w3_), hidden);
}

Var Policy::relation_logits(Tape& tape, const AgentState& state,
                            std::span<const RelationId> candidates, bool train,
                            Rng* rng) const {
  require(!config_.single_agent, ErrorCode::kState, "single-agent policy scores pairs");
  require(!candidates.empty(), ErrorCode::kInvalidArgument, "no relation candidates");
  std::vector<int> ids(candidates.begin(), candidates.end());
  return matmul(gather_rows(tape.param(*relation_table_), ids),
                relation_projection(tape, state, train, rng));
}

Var Policy::entity_logits(Tape& tape, const AgentState& state,
                          std::span<const EntityId> candidates, bool train, Rng* rng) const {
  require(!candidates.empty(), ErrorCode::kInvalidArgument, "no entity candidates");
  std::vector<int> ids(candidates.begin(), candidates.end());
  return matmul(gather_rows(tape.param(*entity_table_), ids),
                entity_projection(tape, state, train, rng));
}

Var Policy::pair_logits(Tape& tape, const AgentState& state, std::span<const Action> candidates,
                        bool train, Rng* rng) const {
  require(config_.single_agent, ErrorCode::kState, "two-agent policy scores relations and entities");
  require(!candidates.empty(), ErrorCode::kInvalidArgument, "no action candidates");
  Var v = relation_projection(tape, state, train, rng);
  std::vector<int> rel_ids, ent_ids;
  for (const Action& a : candidates) {
    rel_ids.push_back(a.relation);
    ent_ids.push_back(a.entity);
  }
  // [R E] v, split into the relation and entity halves of v.
  Var rel_part = matmul(gather_rows(tape.param(*relation_table_), rel_ids),
                        slice_rows(v, 0, config_.relation_dim));
  Var ent_part = matmul(gather_rows(tape.param(*entity_table_), ent_ids),
                        slice_rows(v, config_.relation_dim, config_.entity_dim));
  return add(rel_part, ent_part);
}

Distribution<RelationId> Policy::relation_distribution(const AgentState& state,
                                                       Tape& tape) const {
  Distribution<RelationId> d;
  d.candidates = relation_candidates(state.current);
  d.probs = softmax_values(relation_logits(tape, state, d.candidates).value().data());
  return d;
}

Distribution<EntityId> Policy::entity_distribution(const AgentState& state, RelationId chosen,
                                                   Tape& tape) const {
  Distribution<EntityId> d;
  d.candidates = entity_candidates(state.current, chosen);
  require(!d.candidates.empty(), ErrorCode::kPrecondition,
          "relation " + graph_->vocab().relation_name(chosen) + " does not leave entity " +
              graph_->vocab().entity_name(state.current));
  d.probs = softmax_values(entity_logits(tape, state, d.candidates).value().data());
  return d;
}

AgentState Policy::advance(Tape& tape, const AgentState& state, RelationId relation,
                           EntityId entity, bool train, Rng* rng) const {
  AgentState next = state;
  next.step = state.step + 1;
  next.current = entity;
  Var r = embed_relation(tape, relation, train, rng);
  Var e = embed_entity(tape, entity, train, rng);
  if (config_.single_agent) {
    next.relation_history = relation_lstm_->step(tape, state.relation_history, concat({r, e}),
                                                  config_.hidden_dropout, train, rng);
    return next;
  }
  next.relation_history =
      relation_lstm_->step(tape, state.relation_history, r, config_.hidden_dropout, train, rng);
  next.entity_history =
      entity_lstm_->step(tape, state.entity_history, e, config_.hidden_dropout, train, rng);
  return next;
}

Trajectory Policy::rollout(Tape& tape, const Query& query, const RolloutOptions& options,
                           Rng& rng) const {
  Trajectory traj;
  traj.query = query;
  AgentState state = init_state(tape, query);
  Rng* drop_rng = options.train ? &rng : nullptr;
  const Query mask_query = options.mask_answer_edge ? query : Query{query.source, query.relation, {}};

  for (int t = 0; t < config_.hops; ++t) {
    StepRecord rec;
    const EntityId here = state.current;
    if (config_.single_agent) {
      const auto actions = graph_->actions_from(here);
      std::vector<std::uint8_t> mask(actions.size());
      for (std::size_t i = 0; i < actions.size(); ++i) {
        mask[i] = edge_hidden(mask_query, here, actions[i].relation, actions[i].entity) ? 0 : 1;
      }
      Var logits = pair_logits(tape, state, actions, options.train, drop_rng);
      const std::size_t idx = choose(logits.value().data(), mask,
                                     std::max(config_.relation_action_dropout,
                                              config_.entity_action_dropout),
                                     options, rng);
      Var lp = pick(masked_log_softmax(logits, mask), static_cast<int>(idx));
      traj.log_prob = accumulate(traj.log_prob, lp);
      traj.entropy = accumulate(traj.entropy, masked_entropy(logits, mask));
      ++traj.distributions;
      rec.relation = actions[idx].relation;
      rec.entity = actions[idx].entity;
      rec.relation_logprob = lp.scalar();
      for (const Action& a : actions) {
        rec.relation_candidates.push_back(a.relation);
        rec.entity_candidates.push_back(a.entity);
      }
      rec.relation_mask = mask;
      rec.entity_mask = mask;
    } else {
      rec.relation_candidates = relation_candidates(here);
      rec.relation_mask.assign(rec.relation_candidates.size(), 0);
      for (std::size_t i = 0; i < rec.relation_candidates.size(); ++i) {
        for (EntityId e : entity_candidates(here, rec.relation_candidates[i])) {
          if (!edge_hidden(mask_query, here, rec.relation_candidates[i], e)) {
            rec.relation_mask[i] = 1;
            break;
          }
        }
      }
      Var rlogits = relation_logits(tape, state, rec.relation_candidates, options.train, drop_rng);
      const std::size_t ri = choose(rlogits.value().data(), rec.relation_mask,
                                    config_.relation_action_dropout, options, rng);
      rec.relation = rec.relation_candidates[ri];
      Var rlp = pick(masked_log_softmax(rlogits, rec.relation_mask), static_cast<int>(ri));
      traj.log_prob = accumulate(traj.log_prob, rlp);
      traj.entropy = accumulate(traj.entropy, masked_entropy(rlogits, rec.relation_mask));
      ++traj.distributions;
      rec.relation_logprob = rlp.scalar();

      rec.entity_candidates = entity_candidates(here, rec.relation);
      rec.entity_mask.resize(rec.entity_candidates.size());
      for (std::size_t i = 0; i < rec.entity_candidates.size(); ++i) {
        rec.entity_mask[i] =
            edge_hidden(mask_query, here, rec.relation, rec.entity_candidates[i]) ? 0 : 1;
      }
      if (options.entity_mode == EntityMode::kUniform) {
        std::vector<std::size_t> valid;
        for (std::size_t i = 0; i < rec.entity_mask.size(); ++i) {
          if (rec.entity_mask[i]) valid.push_back(i);
        }
        std::uniform_int_distribution<std::size_t> pick_one(0, valid.size() - 1);
        rec.entity = rec.entity_candidates[valid[pick_one(rng)]];
      } else {
        Var elogits = entity_logits(tape, state, rec.entity_candidates, options.train, drop_rng);
        const std::size_t ei = choose(elogits.value().data(), rec.entity_mask,
                                      config_.entity_action_dropout, options, rng);
        rec.entity = rec.entity_candidates[ei];
        Var elp = pick(masked_log_softmax(elogits, rec.entity_mask), static_cast<int>(ei));
        traj.log_prob = accumulate(traj.log_prob, elp);
        traj.entropy = accumulate(traj.entropy, masked_entropy(elogits, rec.entity_mask));
        ++traj.distributions;
        rec.entity_logprob = elp.scalar();
      }
    }
    state = advance(tape, state, rec.relation, rec.entity, options.train, drop_rng);
    traj.steps.push_back(std::move(rec));
  }
  traj.terminal = state.current;
  return traj;
}

void Policy::save(const std::filesystem::path& path) const {
  std::map<std::string, std::string> meta{
      {"artifact", "policy"},
      {"relation_dim", std::to_string(config_.relation_dim)},
      {"entity_dim", std::to_string(config_.entity_dim)},
      {"hidden_dim", std::to_string(config_.hidden_dim)},
      {"layers", std::to_string(config_.layers)},
      {"mlp_dim", std::to_string(config_.mlp_dim)},
      {"single_agent", config_.single_agent ? "1" : "0"},
      {"num_entities", std::to_string(graph_->num_entities())},
      {"num_relations", std::to_string(graph_->vocab().num_relations())},
  };
  write_checkpoint(path, to_checkpoint(params_, std::move(meta)));
}

void Policy::load(const std::filesystem::path& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  require(ckpt.meta_at("artifact") == "policy", ErrorCode::kParse,
          path.string() + " does not hold a policy");
  require(ckpt.meta_at("single_agent") == (config_.single_agent ? "1" : "0"), ErrorCode::kConfig,
          path.string() + ": agent mode differs from the configuration");
  load_parameters(ckpt, params_);
}

void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories,
                        const Vocabulary& vocab) {
  for (const Trajectory& t : trajectories) {
    out << vocab.entity_name(t.query.source) << '\t' << vocab.relation_name(t.query.relation);
    for (const StepRecord& s : t.steps) {
      out << '\t' << vocab.relation_name(s.relation) << '\t' << vocab.entity_name(s.entity);
    }
    out << '\t' << t.reward << '\n';
  }
}

}  // namespace rulewalk

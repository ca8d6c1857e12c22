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

#include "rulewalk/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "rulewalk/error.hpp"
#include "rulewalk/parallel.hpp"

namespace rulewalk {
namespace {

struct BeamEntry {
  AgentState state;
  double score = 0.0;
  std::vector<Action> path;
};

struct Expansion {
  std::size_t parent = 0;
  Action action;
  double score = 0.0;
};

std::vector<double> log_softmax(std::span<const double> logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : logits) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

double dot(const double* a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) s += a[i] * b[i];
  return s;
}

void expand_two_agent(const Policy& policy, Tape& tape, const BeamEntry& entry,
                      std::size_t parent, std::vector<Expansion>& out) {
  const EntityId here = entry.state.current;
  const auto rels = policy.relation_candidates(here);
  const auto rel_lp = log_softmax(policy.relation_logits(tape, entry.state, rels).value().data());
  const Matrix proj = policy.entity_projection(tape, entry.state).value();
  const Matrix& table = policy.params().get("emb.entity").value;
  for (std::size_t i = 0; i < rels.size(); ++i) {
    const auto ents = policy.entity_candidates(here, rels[i]);
    std::vector<double> logits(ents.size());
    for (std::size_t j = 0; j < ents.size(); ++j) logits[j] = dot(table.row_ptr(ents[j]), proj.data());
    const auto ent_lp = log_softmax(logits);
    for (std::size_t j = 0; j < ents.size(); ++j) {
      out.push_back({parent, Action{rels[i], ents[j]}, entry.score + rel_lp[i] + ent_lp[j]});
    }
  }
}

void expand_single_agent(const Policy& policy, Tape& tape, const BeamEntry& entry,
                         std::size_t parent, std::vector<Expansion>& out) {
  const auto actions = policy.graph().actions_from(entry.state.current);
  const auto lp = log_softmax(policy.pair_logits(tape, entry.state, actions).value().data());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    out.push_back({parent, actions[i], entry.score + lp[i]});
  }
}

std::string format_logprob(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::vector<RelationId> Candidate::relations() const {
  std::vector<RelationId> out;
  out.reserve(path.size());
  for (const Action& a : path) out.push_back(a.relation);
  return out;
}

std::vector<Candidate> rank_candidates(std::vector<Candidate> paths) {
  std::stable_sort(paths.begin(), paths.end(), [](const Candidate& a, const Candidate& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.entity < b.entity;
  });
  std::vector<Candidate> out;
  std::unordered_set<EntityId> seen;
  for (auto& c : paths) {
    if (seen.insert(c.entity).second) out.push_back(std::move(c));
  }
  return out;
}

RankedPrediction beam_search(const Policy& policy, const Query& query, int beam_width,
                             const RuleIndex* rules) {
  require(beam_width >= 1, ErrorCode::kConfig, "beam width must be >= 1");
  Tape tape(false);
  std::vector<BeamEntry> beam;
  beam.push_back(BeamEntry{policy.init_state(tape, query), 0.0, {}});
  std::vector<Expansion> expansions;
  for (int t = 0; t < policy.config().hops; ++t) {
    expansions.clear();
    for (std::size_t i = 0; i < beam.size(); ++i) {
      if (policy.config().single_agent) {
        expand_single_agent(policy, tape, beam[i], i, expansions);
      } else {
        expand_two_agent(policy, tape, beam[i], i, expansions);
      }
    }
    // Generation order is (parent, relation, entity); stable sort keeps it
    // as the tie-break.
    std::stable_sort(expansions.begin(), expansions.end(),
                     [](const Expansion& a, const Expansion& b) { return a.score > b.score; });
    if (expansions.size() > static_cast<std::size_t>(beam_width)) {
      expansions.resize(static_cast<std::size_t>(beam_width));
    }
    std::vector<BeamEntry> next;
    next.reserve(expansions.size());
    for (const Expansion& x : expansions) {
      const BeamEntry& parent = beam[x.parent];
      BeamEntry child{policy.advance(tape, parent.state, x.action.relation, x.action.entity),
                      x.score, parent.path};
      child.path.push_back(x.action);
      next.push_back(std::move(child));
    }
    beam = std::move(next);
  }
  std::vector<Candidate> paths;
  paths.reserve(beam.size());
  for (auto& e : beam) {
    Candidate c;
    c.entity = e.state.current;
    c.path = std::move(e.path);
    c.log_prob = e.score;
    paths.push_back(std::move(c));
  }
  RankedPrediction pred{query, rank_candidates(std::move(paths))};
  if (rules) {
    for (auto& c : pred.candidates) {
      const auto rels = c.relations();
      c.rule_matched = rules->match(rels, query.relation) != nullptr;
    }
  }
  return pred;
}

std::vector<RankedPrediction> beam_search_all(const Policy& policy,
                                              std::span<const Query> queries, int beam_width,
                                              const RuleIndex* rules, int threads) {
  require(beam_width >= 1, ErrorCode::kConfig, "beam width must be >= 1");
  std::vector<RankedPrediction> out(queries.size());
  parallel_for(queries.size(), threads,
               [&](std::size_t i) { out[i] = beam_search(policy, queries[i], beam_width, rules); });
  return out;
}

int answer_rank(const RankedPrediction& prediction, const KnowledgeGraph& graph, RankMode mode) {
  require(prediction.query.answer.has_value(), ErrorCode::kInvalidArgument,
          "ranking needs a query with a known answer");
  const EntityId answer = *prediction.query.answer;
  const auto known = graph.known_answers(prediction.query.source, prediction.query.relation);
  int rank = 0;
  for (const Candidate& c : prediction.candidates) {
    if (c.entity == answer) return rank + 1;
    if (mode == RankMode::kFiltered && std::binary_search(known.begin(), known.end(), c.entity)) {
      continue;
    }
    ++rank;
  }
  return 0;
}

MetricsReport evaluate(std::span<const RankedPrediction> predictions, const KnowledgeGraph& graph,
                       RankMode mode, const RuleIndex* rules) {
  MetricsReport report;
  report.queries = predictions.size();
  if (predictions.empty()) return report;
  double h1 = 0, h5 = 0, h10 = 0, rr = 0;
  for (const auto& p : predictions) {
    const int rank = answer_rank(p, graph, mode);
    if (rank == 0) continue;
    h1 += rank <= 1;
    h5 += rank <= 5;
    h10 += rank <= 10;
    rr += 1.0 / rank;
  }
  const double n = static_cast<double>(predictions.size());
  report.hits1 = 100.0 * h1 / n;
  report.hits5 = 100.0 * h5 / n;
  report.hits10 = 100.0 * h10 / n;
  report.mrr = 100.0 * rr / n;
  if (rules) report.rule_usage = rule_usage(predictions, *rules);
  return report;
}

double rule_usage(std::span<const RankedPrediction> predictions, const RuleIndex& rules) {
  if (predictions.empty() || rules.empty()) return 0.0;
  std::size_t used = 0;
  for (const auto& p : predictions) {
    if (p.candidates.empty()) continue;
    const auto rels = p.candidates.front().relations();
    if (rules.match(rels, p.query.relation)) ++used;
  }
  return 100.0 * static_cast<double>(used) / static_cast<double>(predictions.size());
}

void write_paths(std::ostream& out, std::span<const RankedPrediction> predictions,
                 const Vocabulary& vocab, const RuleIndex* rules, int paths_per_query) {
  for (const auto& p : predictions) {
    const std::size_t n = std::min(p.candidates.size(), static_cast<std::size_t>(std::max(paths_per_query, 1)));
    for (std::size_t i = 0; i < n; ++i) {
      const Candidate& c = p.candidates[i];
      out << vocab.entity_name(p.query.source);
      for (const Action& a : c.path) {
        out << " --" << vocab.relation_name(a.relation) << "--> " << vocab.entity_name(a.entity);
      }
      bool matched = c.rule_matched;
      if (rules) matched = rules->match(c.relations(), p.query.relation) != nullptr;
      out << "  [query: " << vocab.relation_name(p.query.relation) << "]  [logprob: "
          << format_logprob(c.log_prob) << "]  [rule-matched: " << (matched ? "yes" : "no")
          << "]\n";
    }
    out << '\n';
  }
}

void export_paths(std::span<const RankedPrediction> predictions, const Vocabulary& vocab,
                  const std::filesystem::path& path, const RuleIndex* rules,
                  int paths_per_query) {
  require(!predictions.empty(), ErrorCode::kPrecondition, "no predictions to export");
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  write_paths(out, predictions, vocab, rules, paths_per_query);
  out.flush();
  require(out.good(), ErrorCode::kIo, "write failed for " + path.string());
}

std::string metrics_header() { return "split\tqueries\thits1\thits5\thits10\tmrr\trule_usage_pct"; }

std::string metrics_line(const std::string& label, const MetricsReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s\t%zu\t%.4f\t%.4f\t%.4f\t%.4f\t%.4f", label.c_str(),
                r.queries, r.hits1, r.hits5, r.hits10, r.mrr, r.rule_usage);
  return buf;
}

void print_metrics_table(std::ostream& out, const std::string& label, const MetricsReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "+------------+----------+\n"
                "| split      | %-8s |\n"
                "| queries    | %8zu |\n"
                "| Hits@1     | %8.2f |\n"
                "| Hits@5     | %8.2f |\n"
                "| Hits@10    | %8.2f |\n"
                "| MRR        | %8.2f |\n"
                "| rule usage | %8.2f |\n"
                "+------------+----------+\n",
                label.c_str(), r.queries, r.hits1, r.hits5, r.hits10, r.mrr, r.rule_usage);
  out << buf;
}

void write_metrics(const std::filesystem::path& path, const std::string& label,
                   const MetricsReport& report) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << metrics_header() << '\n' << metrics_line(label, report) << '\n';
  require(out.good(), ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<Query> queries_from(std::span<const Triple> triples) {
  std::vector<Query> out;
  out.reserve(triples.size());
  for (const Triple& t : triples) out.push_back(Query{t.subject, t.relation, t.object});
  return out;
}

}  // namespace rulewalk

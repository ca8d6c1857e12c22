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

#include "rulewalk/rules.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "rulewalk/error.hpp"
#include "rulewalk/parallel.hpp"

namespace rulewalk {
namespace {

bool rule_order(const Rule& a, const Rule& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.body.size() != b.body.size()) return a.body.size() < b.body.size();
  return a.body < b.body;
}

std::string variable(std::size_t position, std::size_t body_len) {
  if (position == 0) return "X";
  if (position == body_len) return "Y";
  return "A" + std::to_string(position + 1);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

struct Atom {
  std::string relation;
  std::string first;
  std::string second;
};

// Parses "rel(A,B)" atoms separated by ", ". Returns false on malformed text.
bool parse_atoms(std::string_view text, std::vector<Atom>& atoms) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == ',')) ++pos;
    if (pos >= text.size()) break;
    const auto open = text.find('(', pos);
    if (open == std::string_view::npos) return false;
    const auto close = text.find(')', open);
    if (close == std::string_view::npos) return false;
    const auto args = text.substr(open + 1, close - open - 1);
    const auto comma = args.find(',');
    if (comma == std::string_view::npos) return false;
    atoms.push_back({trim(text.substr(pos, open - pos)), trim(args.substr(0, comma)),
                     trim(args.substr(comma + 1))});
    pos = close + 1;
  }
  return !atoms.empty();
}

}  // namespace

RuleIndex::RuleIndex(std::vector<Rule> rules, double threshold,
                     RelationId self_loop)
    : threshold_(threshold), self_loop_(self_loop) {
  std::map<std::pair<RelationId, std::vector<RelationId>>, Rule> best;
  for (auto& rule : rules) {
    if (rule.body.empty() || rule.confidence < threshold) continue;
    auto key = std::make_pair(rule.head, rule.body);
    auto it = best.find(key);
    if (it == best.end()) {
      best.emplace(std::move(key), std::move(rule));
    } else if (rule.confidence > it->second.confidence) {
      it->second = std::move(rule);
    }
  }
  for (auto& [key, rule] : best) by_head_[key.first].push_back(std::move(rule));
  for (auto& [head, list] : by_head_) {
    std::stable_sort(list.begin(), list.end(), rule_order);
    for (std::size_t i = 0; i < list.size(); ++i) {
      lookup_.emplace(std::make_pair(head, list[i].body), i);
    }
    count_ += list.size();
  }
}

const Rule* RuleIndex::match(std::span<const RelationId> path,
                             RelationId query_relation) const {
  std::size_t len = path.size();
  while (len > 0 && path[len - 1] == self_loop_) --len;
  if (len == 0) return nullptr;
  const auto it = lookup_.find(
      std::make_pair(query_relation, std::vector<RelationId>(path.begin(), path.begin() + len)));
  if (it == lookup_.end()) return nullptr;
  return &by_head_.at(query_relation)[it->second];
}

std::span<const Rule> RuleIndex::rules_for(RelationId head) const {
  if (auto it = by_head_.find(head); it != by_head_.end()) return it->second;
  return {};
}

std::vector<const Rule*> RuleIndex::all() const {
  std::vector<const Rule*> out;
  out.reserve(count_);
  for (const auto& [head, list] : by_head_) {
    for (const auto& rule : list) out.push_back(&rule);
  }
  return out;
}

std::vector<GroundedPath> sample_paths(const KnowledgeGraph& graph, int count,
                                       int max_len, std::uint64_t seed) {
  require(count > 0, ErrorCode::kConfig, "sample count must be positive");
  require(max_len > 0, ErrorCode::kConfig, "max rule length must be positive");
  std::vector<EntityId> starts;
  for (std::size_t e = 0; e < graph.num_entities(); ++e) {
    if (!graph.neighbors(static_cast<EntityId>(e)).empty()) {
      starts.push_back(static_cast<EntityId>(e));
    }
  }
  std::vector<GroundedPath> paths;
  if (starts.empty()) return paths;
  paths.reserve(static_cast<std::size_t>(count));

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_start(0, starts.size() - 1);
  std::uniform_int_distribution<int> pick_len(1, max_len);
  for (int i = 0; i < count; ++i) {
    GroundedPath path;
    path.entities.push_back(starts[pick_start(rng)]);
    const int target = pick_len(rng);
    for (int step = 0; step < target; ++step) {
      const auto next = graph.neighbors(path.entities.back());
      if (next.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, next.size() - 1);
      const Action& a = next[pick(rng)];
      path.relations.push_back(a.relation);
      path.entities.push_back(a.entity);
    }
    paths.push_back(std::move(path));
  }
  return paths;
}

std::vector<Rule> generalize(const GroundedPath& path, const KnowledgeGraph& graph) {
  std::vector<Rule> out;
  if (path.relations.empty()) return out;
  const EntityId first = path.entities.front();
  const EntityId last = path.entities.back();
  const auto& vocab = graph.vocab();
  for (const Action& a : graph.neighbors(first)) {
    if (a.entity != last || !vocab.is_data(a.relation)) continue;
    if (path.relations.size() == 1 && path.relations[0] == a.relation) continue;
    Rule rule;
    rule.head = a.relation;
    rule.body = path.relations;
    out.push_back(std::move(rule));
  }
  return out;
}

std::vector<EntityId> body_targets(const KnowledgeGraph& graph, EntityId x,
                                   std::span<const RelationId> body) {
  std::vector<EntityId> frontier{x};
  std::vector<EntityId> next;
  for (const RelationId r : body) {
    next.clear();
    for (const EntityId e : frontier) {
      for (const Action& a : graph.neighbors(e, r)) next.push_back(a.entity);
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    frontier.swap(next);
    if (frontier.empty()) break;
  }
  return frontier;
}

Rule score_rule(Rule rule, const KnowledgeGraph& graph,
                std::int64_t grounding_cap, double smoothing) {
  require(!rule.body.empty(), ErrorCode::kInvalidArgument, "rule body is empty");
  require(grounding_cap > 0, ErrorCode::kConfig, "grounding cap must be positive");
  rule.support = 0;
  rule.body_count = 0;
  rule.approximate = false;
  bool stop = false;
  for (std::size_t x = 0; x < graph.num_entities() && !stop; ++x) {
    const auto source = static_cast<EntityId>(x);
    if (graph.neighbors(source, rule.body.front()).empty()) continue;
    for (const EntityId y : body_targets(graph, source, rule.body)) {
      if (rule.body_count == grounding_cap) {
        rule.approximate = true;
        stop = true;
        break;
      }
      ++rule.body_count;
      if (graph.contains(source, rule.head, y, SplitSet::kTrain)) ++rule.support;
    }
  }
  rule.confidence = rule.body_count == 0
                        ? 0.0
                        : static_cast<double>(rule.support) /
                              (static_cast<double>(rule.body_count) + smoothing);
  return rule;
}

RuleIndex mine(const KnowledgeGraph& graph, const MinerConfig& config) {
  require(config.smoothing >= 0.0, ErrorCode::kConfig, "smoothing must be non-negative");
  const auto paths =
      sample_paths(graph, config.samples, config.max_rule_length, config.seed);
  std::set<std::pair<RelationId, std::vector<RelationId>>> seen;
  std::vector<Rule> candidates;
  for (const auto& path : paths) {
    for (auto& rule : generalize(path, graph)) {
      if (seen.emplace(rule.head, rule.body).second) candidates.push_back(std::move(rule));
    }
  }
  std::vector<Rule> scored(candidates.size());
  parallel_for(candidates.size(), config.threads, [&](std::size_t i) {
    scored[i] = score_rule(candidates[i], graph, config.grounding_cap, config.smoothing);
  });
  return RuleIndex(std::move(scored), config.threshold, graph.vocab().self_loop());
}

std::string format_rule(const Rule& rule, const Vocabulary& vocab) {
  std::string out = vocab.relation_name(rule.head) + "(X,Y) <= ";
  const std::size_t n = rule.body.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out += ", ";
    const RelationId r = rule.body[i];
    const std::string a = variable(i, n);
    const std::string b = variable(i + 1, n);
    if (vocab.is_inverse(r)) {
      out += vocab.relation_name(vocab.inverse(r)) + "(" + b + "," + a + ")";
    } else {
      out += vocab.relation_name(r) + "(" + a + "," + b + ")";
    }
  }
  return out;
}

void write_rules(const std::filesystem::path& path, const RuleIndex& index,
                 const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  char buf[128];
  for (const Rule* rule : index.all()) {
    std::snprintf(buf, sizeof buf, "%.17g\t%lld\t%lld\t", rule->confidence,
                  static_cast<long long>(rule->support),
                  static_cast<long long>(rule->body_count));
    out << buf << format_rule(*rule, vocab) << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

RuleIndex read_rules(const std::filesystem::path& path, const Vocabulary& vocab,
                     double threshold) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<Rule> rules;
  std::size_t skipped = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double confidence = 0.0;
    long long support = 0;
    long long body_count = 0;
    int consumed = 0;
    if (std::sscanf(line.c_str(), "%lf\t%lld\t%lld\t%n", &confidence, &support,
                    &body_count, &consumed) != 3 ||
        consumed == 0) {
      throw ParseError(path.string(), lineno,
                       "expected confidence<TAB>support<TAB>body_count<TAB>rule");
    }
    const std::string_view text = std::string_view(line).substr(static_cast<std::size_t>(consumed));
    const auto arrow = text.find("<=");
    std::vector<Atom> head_atoms;
    std::vector<Atom> body_atoms;
    if (arrow == std::string_view::npos || !parse_atoms(text.substr(0, arrow), head_atoms) ||
        head_atoms.size() != 1 || !parse_atoms(text.substr(arrow + 2), body_atoms)) {
      throw ParseError(path.string(), lineno, "malformed rule text");
    }
    Rule rule;
    rule.confidence = confidence;
    rule.support = support;
    rule.body_count = body_count;
    bool ok = head_atoms[0].first == "X" && head_atoms[0].second == "Y";
    const auto head = vocab.find_relation(head_atoms[0].relation);
    ok = ok && head && vocab.is_data(*head);
    if (ok) rule.head = *head;
    // Walk the variable chain X -> ... -> Y; a reversed atom is an inverse hop.
    std::string current = "X";
    for (std::size_t i = 0; ok && i < body_atoms.size(); ++i) {
      const Atom& atom = body_atoms[i];
      const auto rel = vocab.find_relation(atom.relation);
      if (!rel || !(vocab.is_data(*rel) || vocab.is_inverse(*rel))) {
        ok = false;
        break;
      }
      const bool last = i + 1 == body_atoms.size();
      auto is_var = [](const std::string& v) {
        return !v.empty() && (v == "X" || v == "Y" || v[0] == 'A');
      };
      if (atom.first == current && is_var(atom.second)) {
        rule.body.push_back(*rel);
        current = atom.second;
      } else if (atom.second == current && is_var(atom.first)) {
        rule.body.push_back(vocab.inverse(*rel));
        current = atom.first;
      } else {
        ok = false;
        break;
      }
      if (last ? current != "Y" : (current == "X" || current == "Y")) ok = false;
    }
    if (!ok) {
      ++skipped;
      continue;
    }
    rules.push_back(std::move(rule));
  }
  if (skipped > 0) {
    warn(path.string() + ": skipped " + std::to_string(skipped) +
         " rule(s) that are not cyclic relation chains over known relations");
  }
  return RuleIndex(std::move(rules), threshold, vocab.self_loop());
}

std::vector<RulePrecision> rank_rules_by_accuracy(const RuleIndex& index,
                                                  std::span<const Triple> eval,
                                                  const KnowledgeGraph& graph) {
  std::map<RelationId, std::set<EntityId>> sources;
  for (const auto& t : eval) sources[t.relation].insert(t.subject);

  std::vector<RulePrecision> report;
  for (const Rule* rule : index.all()) {
    auto it = sources.find(rule->head);
    if (it == sources.end()) continue;
    RulePrecision entry;
    entry.rule = *rule;
    for (const EntityId s : it->second) {
      for (const EntityId y : body_targets(graph, s, rule->body)) {
        ++entry.groundings;
        if (graph.contains(s, rule->head, y, SplitSet::kAll)) ++entry.correct;
      }
    }
    if (entry.groundings == 0) continue;
    entry.precision =
        static_cast<double>(entry.correct) / static_cast<double>(entry.groundings);
    report.push_back(std::move(entry));
  }
  std::stable_sort(report.begin(), report.end(),
                   [](const RulePrecision& a, const RulePrecision& b) {
                     if (a.precision != b.precision) return a.precision > b.precision;
                     return a.rule.confidence > b.rule.confidence;
                   });
  return report;
}

void write_rule_report(const std::filesystem::path& path,
                       std::span<const RulePrecision> report,
                       const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << "precision\tcorrect\tgroundings\tconfidence\trule\n";
  char buf[160];
  for (const auto& entry : report) {
    std::snprintf(buf, sizeof buf, "%.6f\t%lld\t%lld\t%.6f\t", entry.precision,
                  static_cast<long long>(entry.correct),
                  static_cast<long long>(entry.groundings), entry.rule.confidence);
    out << buf << format_rule(entry.rule, vocab) << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

}  // namespace rulewalk

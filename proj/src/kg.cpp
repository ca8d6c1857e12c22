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

#include "rulewalk/kg.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>

#include "rulewalk/error.hpp"
#include "rulewalk/pagerank.hpp"

namespace rulewalk {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool is_reserved_name(std::string_view name) {
  return name == Vocabulary::kStartName || name == Vocabulary::kSelfLoopName ||
         name == Vocabulary::kPadName;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  return out;
}

std::vector<std::string> read_name_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::string> names;
  std::vector<bool> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2) {
      throw ParseError(path.string(), lineno, "expected name<TAB>id");
    }
    std::size_t id = 0;
    try {
      id = std::stoul(std::string(fields[1]));
    } catch (const std::exception&) {
      throw ParseError(path.string(), lineno, "bad id '" + std::string(fields[1]) + "'");
    }
    if (id >= names.size()) {
      names.resize(id + 1);
      seen.resize(id + 1, false);
    }
    if (seen[id]) throw ParseError(path.string(), lineno, "duplicate id");
    names[id] = std::string(fields[0]);
    seen[id] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      fail(ErrorCode::kParse, path.string() + ": id " + std::to_string(i) + " missing");
    }
  }
  return names;
}

}  // namespace

EntityId Vocabulary::add_entity(std::string_view name) {
  const std::string key(name);
  if (auto it = entity_ids_.find(key); it != entity_ids_.end()) return it->second;
  require(!frozen_, ErrorCode::kState, "vocabulary is frozen; cannot add entity " + key);
  const auto id = static_cast<EntityId>(entity_names_.size());
  entity_names_.push_back(key);
  entity_ids_.emplace(key, id);
  return id;
}

RelationId Vocabulary::add_relation(std::string_view name) {
  const std::string key(name);
  if (auto it = relation_ids_.find(key); it != relation_ids_.end()) return it->second;
  require(!frozen_, ErrorCode::kState, "vocabulary is frozen; cannot add relation " + key);
  require(!is_reserved_name(key), ErrorCode::kInvalidArgument,
          "relation name " + key + " is reserved");
  const auto id = data_count();
  relation_names_.push_back(key);
  relation_ids_.emplace(key, id);
  return id;
}

std::optional<EntityId> Vocabulary::find_entity(std::string_view name) const {
  if (auto it = entity_ids_.find(std::string(name)); it != entity_ids_.end()) {
    return it->second;
  }
  return std::nullopt;
}

std::optional<RelationId> Vocabulary::find_relation(std::string_view name) const {
  if (auto it = relation_ids_.find(std::string(name)); it != relation_ids_.end()) {
    return it->second;
  }
  if (name == kStartName) return start_relation();
  if (name == kSelfLoopName) return self_loop();
  if (name == kPadName) return pad_relation();
  if (name.size() > kInverseSuffix.size() && name.ends_with(kInverseSuffix)) {
    const auto base = name.substr(0, name.size() - kInverseSuffix.size());
    if (auto it = relation_ids_.find(std::string(base)); it != relation_ids_.end()) {
      return inverse(it->second);
    }
  }
  return std::nullopt;
}

const std::string& Vocabulary::entity_name(EntityId id) const {
  require(id >= 0 && static_cast<std::size_t>(id) < entity_names_.size(),
          ErrorCode::kLookup, "unknown entity id " + std::to_string(id));
  return entity_names_[static_cast<std::size_t>(id)];
}

std::string Vocabulary::relation_name(RelationId id) const {
  if (is_data(id)) return relation_names_[static_cast<std::size_t>(id)];
  if (is_inverse(id)) {
    return relation_names_[static_cast<std::size_t>(id - data_count())] +
           std::string(kInverseSuffix);
  }
  if (id == start_relation()) return std::string(kStartName);
  if (id == self_loop()) return std::string(kSelfLoopName);
  if (id == pad_relation()) return std::string(kPadName);
  fail(ErrorCode::kLookup, "unknown relation id " + std::to_string(id));
}

RelationId Vocabulary::inverse(RelationId r) const {
  if (is_data(r)) return r + data_count();
  if (is_inverse(r)) return r - data_count();
  if (r == self_loop()) return r;
  fail(ErrorCode::kLookup, "relation id " + std::to_string(r) + " has no inverse");
}

void Vocabulary::write(const std::filesystem::path& entity_file,
                       const std::filesystem::path& relation_file) const {
  auto ents = open_out(entity_file);
  for (std::size_t i = 0; i < entity_names_.size(); ++i) {
    ents << entity_names_[i] << '\t' << i << '\n';
  }
  auto rels = open_out(relation_file);
  for (std::size_t i = 0; i < relation_names_.size(); ++i) {
    rels << relation_names_[i] << '\t' << i << '\n';
  }
  if (!ents || !rels) fail(ErrorCode::kIo, "failed writing vocabulary");
}

Vocabulary Vocabulary::read(const std::filesystem::path& entity_file,
                            const std::filesystem::path& relation_file) {
  Vocabulary vocab;
  for (const auto& name : read_name_file(entity_file)) {
    if (vocab.find_entity(name)) {
      fail(ErrorCode::kParse, entity_file.string() + ": duplicate name " + name);
    }
    vocab.add_entity(name);
  }
  for (const auto& name : read_name_file(relation_file)) {
    if (vocab.relation_ids_.count(name)) {
      fail(ErrorCode::kParse, relation_file.string() + ": duplicate name " + name);
    }
    vocab.add_relation(name);
  }
  return vocab;
}

std::vector<Triple> load_triples(const std::filesystem::path& path,
                                 Vocabulary& vocab, const LoadOptions& options,
                                 LoadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  LoadStats local;
  std::vector<Triple> triples;
  std::set<Triple> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(path.string(), lineno,
                       "expected 3 tab-separated fields, got " +
                           std::to_string(fields.size()));
    }
    Triple t;
    if (options.extend_vocabulary) {
      t.subject = vocab.add_entity(fields[0]);
      t.relation = vocab.add_relation(fields[1]);
      t.object = vocab.add_entity(fields[2]);
    } else {
      const auto s = vocab.find_entity(fields[0]);
      const auto r = vocab.find_relation(fields[1]);
      const auto o = vocab.find_entity(fields[2]);
      if (!s || !o || !r || !vocab.is_data(*r)) {
        if (options.unseen == UnseenPolicy::kError) {
          throw ParseError(path.string(), lineno,
                           "unseen entity or relation in '" + line + "'");
        }
        ++local.skipped_unseen;
        continue;
      }
      t = Triple{*s, *r, *o};
    }
    if (!seen.insert(t).second) {
      ++local.skipped_duplicate;
      continue;
    }
    triples.push_back(t);
  }
  if (local.skipped_unseen > 0) {
    warn(path.string() + ": skipped " + std::to_string(local.skipped_unseen) +
         " triple(s) with unseen entities or relations");
  }
  if (stats) *stats = local;
  return triples;
}

void write_triples(const std::filesystem::path& path,
                   std::span<const Triple> triples, const Vocabulary& vocab) {
  auto out = open_out(path);
  for (const auto& t : triples) {
    out << vocab.entity_name(t.subject) << '\t' << vocab.relation_name(t.relation)
        << '\t' << vocab.entity_name(t.object) << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

std::vector<Triple> add_reverse_links(std::span<const Triple> triples,
                                      const Vocabulary& vocab) {
  std::vector<Triple> out;
  out.reserve(triples.size() * 2);
  std::set<Triple> present(triples.begin(), triples.end());
  std::set<Triple> emitted;
  for (const auto& t : triples) {
    if (emitted.insert(t).second) out.push_back(t);
    const Triple rev{t.object, vocab.inverse(t.relation), t.subject};
    if (present.count(rev) == 0 && emitted.insert(rev).second) out.push_back(rev);
  }
  return out;
}

Adjacency build_adjacency(std::span<const Triple> triples,
                          std::span<const double> pagerank, int bandwidth,
                          std::size_t num_entities, RelationId self_loop) {
  require(bandwidth > 0, ErrorCode::kConfig, "bandwidth must be positive");
  require(pagerank.size() == num_entities, ErrorCode::kPrecondition,
          "pagerank covers " + std::to_string(pagerank.size()) + " of " +
              std::to_string(num_entities) + " entities");
  Adjacency adj(num_entities);
  for (const auto& t : triples) {
    adj[static_cast<std::size_t>(t.subject)].push_back({t.relation, t.object});
  }
  const auto cap = static_cast<std::size_t>(bandwidth);
  for (std::size_t e = 0; e < num_entities; ++e) {
    auto& list = adj[e];
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    if (list.size() > cap) {
      std::partial_sort(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(cap),
                        list.end(), [&](const Action& a, const Action& b) {
                          const double pa = pagerank[static_cast<std::size_t>(a.entity)];
                          const double pb = pagerank[static_cast<std::size_t>(b.entity)];
                          if (pa != pb) return pa > pb;
                          return a < b;
                        });
      list.resize(cap);
      std::sort(list.begin(), list.end());
    }
    list.push_back({self_loop, static_cast<EntityId>(e)});
  }
  return adj;
}

KnowledgeGraph::KnowledgeGraph(Vocabulary vocab, SplitTriples splits,
                               int bandwidth, std::vector<double> pagerank)
    : vocab_(std::move(vocab)),
      splits_(std::move(splits)),
      pagerank_(std::move(pagerank)),
      bandwidth_(bandwidth) {
  require(bandwidth > 0, ErrorCode::kConfig, "bandwidth must be positive");
  vocab_.freeze();
  const std::size_t ne = vocab_.num_entities();
  const std::size_t nr = vocab_.num_relations();
  require(ne > 0, ErrorCode::kPrecondition, "graph has no entities");
  const long double space = static_cast<long double>(ne) * ne * nr;
  require(space < static_cast<long double>(std::numeric_limits<std::uint64_t>::max()),
          ErrorCode::kInvalidArgument, "graph too large for triple keys");

  for (const auto* list : {&splits_.train, &splits_.dev, &splits_.test}) {
    for (const auto& t : *list) {
      check_entity(t.subject);
      check_entity(t.object);
      require(vocab_.is_data(t.relation), ErrorCode::kLookup,
              "triple relation " + std::to_string(t.relation) + " is not a data relation");
    }
  }

  train_rev_ = add_reverse_links(splits_.train, vocab_);
  if (pagerank_.empty()) {
    pagerank_ = compute_pagerank(ne, train_rev_).scores;
  }
  actions_ = build_adjacency(train_rev_, pagerank_, bandwidth_, ne, vocab_.self_loop());
  neighbors_.assign(ne, {});
  for (const auto& t : train_rev_) {
    neighbors_[static_cast<std::size_t>(t.subject)].push_back({t.relation, t.object});
  }
  for (auto& list : neighbors_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }

  for (const auto& t : train_rev_) train_set_.insert(key(t.subject, t.relation, t.object));
  for (const auto& t : splits_.dev) dev_set_.insert(key(t.subject, t.relation, t.object));
  for (const auto& t : splits_.test) test_set_.insert(key(t.subject, t.relation, t.object));

  for (const auto* list : {&train_rev_, &splits_.dev, &splits_.test}) {
    for (const auto& t : *list) {
      answers_[key(t.subject, t.relation, 0)].push_back(t.object);
    }
  }
  for (auto& [k, objs] : answers_) {
    std::sort(objs.begin(), objs.end());
    objs.erase(std::unique(objs.begin(), objs.end()), objs.end());
  }
}

std::span<const Triple> KnowledgeGraph::split(Split which) const {
  switch (which) {
    case Split::kTrain: return splits_.train;
    case Split::kDev: return splits_.dev;
    case Split::kTest: return splits_.test;
  }
  return {};
}

void KnowledgeGraph::check_entity(EntityId e) const {
  require(e >= 0 && static_cast<std::size_t>(e) < vocab_.num_entities(),
          ErrorCode::kLookup, "unknown entity id " + std::to_string(e));
}

std::span<const Action> KnowledgeGraph::actions_from(EntityId entity) const {
  check_entity(entity);
  return actions_[static_cast<std::size_t>(entity)];
}

std::span<const Action> KnowledgeGraph::neighbors(EntityId entity) const {
  check_entity(entity);
  return neighbors_[static_cast<std::size_t>(entity)];
}

std::span<const Action> KnowledgeGraph::neighbors(EntityId entity,
                                                  RelationId relation) const {
  const auto all = neighbors(entity);
  const auto lo = std::lower_bound(
      all.begin(), all.end(), Action{relation, std::numeric_limits<EntityId>::min()});
  const auto hi = std::upper_bound(
      lo, all.end(), Action{relation, std::numeric_limits<EntityId>::max()});
  return {lo, hi};
}

std::uint64_t KnowledgeGraph::key(EntityId s, RelationId r, EntityId o) const {
  const auto ne = static_cast<std::uint64_t>(vocab_.num_entities());
  const auto nr = static_cast<std::uint64_t>(vocab_.num_relations());
  return (static_cast<std::uint64_t>(s) * nr + static_cast<std::uint64_t>(r)) * ne +
         static_cast<std::uint64_t>(o);
}

bool KnowledgeGraph::contains(EntityId s, RelationId r, EntityId o,
                              SplitSet scope) const {
  const auto ne = static_cast<EntityId>(vocab_.num_entities());
  const auto nr = static_cast<RelationId>(vocab_.num_relations());
  if (s < 0 || s >= ne || o < 0 || o >= ne || r < 0 || r >= nr) return false;
  const auto k = key(s, r, o);
  if (train_set_.count(k)) return true;
  if (scope == SplitSet::kTrain) return false;
  if (dev_set_.count(k)) return true;
  if (scope == SplitSet::kTrainDev) return false;
  return test_set_.count(k) > 0;
}

std::span<const EntityId> KnowledgeGraph::known_answers(EntityId s,
                                                        RelationId r) const {
  if (auto it = answers_.find(key(s, r, 0)); it != answers_.end()) return it->second;
  return {};
}

KnowledgeGraph load_dataset(const std::filesystem::path& dir,
                            const DatasetOptions& options) {
  Vocabulary vocab;
  SplitTriples splits;
  splits.train = load_triples(dir / "train.txt", vocab);
  require(!splits.train.empty(), ErrorCode::kPrecondition,
          (dir / "train.txt").string() + " holds no triples");
  vocab.freeze();
  const LoadOptions eval_opts{false, options.unseen};
  if (std::filesystem::exists(dir / "dev.txt")) {
    splits.dev = load_triples(dir / "dev.txt", vocab, eval_opts);
  }
  if (std::filesystem::exists(dir / "test.txt")) {
    splits.test = load_triples(dir / "test.txt", vocab, eval_opts);
  }

  std::vector<double> pagerank;
  const auto& cache = options.pagerank_cache;
  if (!cache.empty() && std::filesystem::exists(cache)) {
    pagerank = read_pagerank(cache, vocab.num_entities());
  } else {
    const auto edges = add_reverse_links(splits.train, vocab);
    PageRankConfig pr;
    pr.damping = options.pagerank_damping;
    pr.tolerance = options.pagerank_tolerance;
    pr.max_iterations = options.pagerank_max_iterations;
    pagerank = compute_pagerank(vocab.num_entities(), edges, pr).scores;
    if (!cache.empty()) write_pagerank(cache, pagerank);
  }
  return KnowledgeGraph(std::move(vocab), std::move(splits), options.bandwidth,
                        std::move(pagerank));
}

}  // namespace rulewalk

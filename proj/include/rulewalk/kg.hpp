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

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace rulewalk {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

struct Triple {
  EntityId subject = 0;
  RelationId relation = 0;
  EntityId object = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

// One outgoing edge as seen by a walker standing on some entity.
struct Action {
  RelationId relation = 0;
  EntityId entity = 0;

  friend auto operator<=>(const Action&, const Action&) = default;
};

// A tail query (source, relation, ?). `answer` is absent at pure inference.
struct Query {
  EntityId source = 0;
  RelationId relation = 0;
  std::optional<EntityId> answer;
};

// Name <-> dense id maps for entities and relations.
//
// Relation id space, with n data relations:
//   [0, n)      data relations, first-appearance order
//   [n, 2n)     inverse relations, inv(r) = n + r
//   2n          START (seeds the relation history)
//   2n + 1      SELF_LOOP
//   2n + 2      PAD
// Derived ids depend on n, so the relation set is frozen once a graph is
// built on top of the vocabulary.
class Vocabulary {
 public:
  static constexpr std::string_view kInverseSuffix = "_inv";
  static constexpr std::string_view kStartName = "<START>";
  static constexpr std::string_view kSelfLoopName = "<SELF_LOOP>";
  static constexpr std::string_view kPadName = "<PAD>";

  EntityId add_entity(std::string_view name);
  RelationId add_relation(std::string_view name);

  std::optional<EntityId> find_entity(std::string_view name) const;
  // Resolves data names, "<name>_inv" inverse names and the reserved names.
  std::optional<RelationId> find_relation(std::string_view name) const;

  const std::string& entity_name(EntityId id) const;
  std::string relation_name(RelationId id) const;

  std::size_t num_entities() const { return entity_names_.size(); }
  std::size_t num_data_relations() const { return relation_names_.size(); }
  // Size of the whole relation id space, reserved ids included.
  std::size_t num_relations() const { return 2 * relation_names_.size() + 3; }

  RelationId start_relation() const { return data_count() * 2; }
  RelationId self_loop() const { return data_count() * 2 + 1; }
  RelationId pad_relation() const { return data_count() * 2 + 2; }

  bool is_data(RelationId r) const { return r >= 0 && r < data_count(); }
  bool is_inverse(RelationId r) const {
    return r >= data_count() && r < 2 * data_count();
  }
  // inv(inv(r)) == r for data and inverse ids; SELF_LOOP is its own inverse.
  RelationId inverse(RelationId r) const;

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  // Writes `name<TAB>id` lines for entities and data relations.
  void write(const std::filesystem::path& entity_file,
             const std::filesystem::path& relation_file) const;
  static Vocabulary read(const std::filesystem::path& entity_file,
                         const std::filesystem::path& relation_file);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.entity_names_ == b.entity_names_ &&
           a.relation_names_ == b.relation_names_;
  }

 private:
  RelationId data_count() const {
    return static_cast<RelationId>(relation_names_.size());
  }

  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
  bool frozen_ = false;
};

enum class UnseenPolicy { kSkipWithWarning, kError };

struct LoadOptions {
  // Train files may introduce new names; evaluation files may not.
  bool extend_vocabulary = true;
  UnseenPolicy unseen = UnseenPolicy::kSkipWithWarning;
};

struct LoadStats {
  std::size_t skipped_unseen = 0;
  std::size_t skipped_duplicate = 0;
};

// Reads `subject<TAB>relation<TAB>object` lines. Blank lines are ignored.
std::vector<Triple> load_triples(const std::filesystem::path& path,
                                 Vocabulary& vocab,
                                 const LoadOptions& options = {},
                                 LoadStats* stats = nullptr);

void write_triples(const std::filesystem::path& path,
                   std::span<const Triple> triples, const Vocabulary& vocab);

// Each input triple followed by (object, inv(relation), subject); pairs whose
// reverse is already present are not duplicated.
std::vector<Triple> add_reverse_links(std::span<const Triple> triples,
                                      const Vocabulary& vocab);

using Adjacency = std::vector<std::vector<Action>>;

// Per entity: up to `bandwidth` distinct outgoing pairs with the highest
// neighbor PageRank (ties by ascending (relation, entity)), stored sorted by
// (relation, entity), then the (SELF_LOOP, entity) pair.
Adjacency build_adjacency(std::span<const Triple> triples,
                          std::span<const double> pagerank, int bandwidth,
                          std::size_t num_entities, RelationId self_loop);

enum class Split { kTrain, kDev, kTest };
// Membership scopes. kTrain includes reverse links of train facts.
enum class SplitSet { kTrain, kTrainDev, kAll };

struct SplitTriples {
  std::vector<Triple> train;
  std::vector<Triple> dev;
  std::vector<Triple> test;
};

// Immutable indexed graph built from train facts plus their reverse links.
class KnowledgeGraph {
 public:
  // An empty `pagerank` triggers computation with default settings.
  KnowledgeGraph(Vocabulary vocab, SplitTriples splits, int bandwidth,
                 std::vector<double> pagerank = {});

  const Vocabulary& vocab() const { return vocab_; }
  std::size_t num_entities() const { return vocab_.num_entities(); }
  int bandwidth() const { return bandwidth_; }

  std::span<const Triple> split(Split which) const;
  std::span<const Triple> train_with_reverse() const { return train_rev_; }
  std::span<const double> pagerank() const { return pagerank_; }

  // Pruned action space including the trailing self-loop pair.
  std::span<const Action> actions_from(EntityId entity) const;
  // Unpruned train+reverse neighbors, sorted, without the self-loop.
  std::span<const Action> neighbors(EntityId entity) const;
  std::span<const Action> neighbors(EntityId entity, RelationId relation) const;

  bool contains(EntityId s, RelationId r, EntityId o, SplitSet scope) const;
  bool contains(const Triple& t, SplitSet scope) const {
    return contains(t.subject, t.relation, t.object, scope);
  }
  // Sorted objects o with (s, r, o) in any split.
  std::span<const EntityId> known_answers(EntityId s, RelationId r) const;

 private:
  std::uint64_t key(EntityId s, RelationId r, EntityId o) const;
  void check_entity(EntityId e) const;

  Vocabulary vocab_;
  SplitTriples splits_;
  std::vector<Triple> train_rev_;
  std::vector<double> pagerank_;
  int bandwidth_;
  Adjacency actions_;
  Adjacency neighbors_;
  std::unordered_set<std::uint64_t> train_set_;
  std::unordered_set<std::uint64_t> dev_set_;
  std::unordered_set<std::uint64_t> test_set_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> answers_;
};

struct DatasetOptions {
  int bandwidth = 500;
  UnseenPolicy unseen = UnseenPolicy::kSkipWithWarning;
  // Reused when present, written after computation otherwise. Empty: no cache.
  std::filesystem::path pagerank_cache;
  double pagerank_damping = 0.85;
  double pagerank_tolerance = 1e-10;
  int pagerank_max_iterations = 200;
};

// Loads <dir>/train.txt, dev.txt and test.txt (dev/test optional).
KnowledgeGraph load_dataset(const std::filesystem::path& dir,
                            const DatasetOptions& options = {});

}  // namespace rulewalk

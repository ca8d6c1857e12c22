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

#include <fstream>

#include "doctest.h"
#include "rulewalk/error.hpp"
#include "rulewalk/rules.hpp"
#include "test_util.hpp"

using namespace rulewalk;
using namespace rulewalk::testing;

namespace {

// Independent closure over the raw train triples: facts plus flipped copies.
std::set<Triple> closure(const KnowledgeGraph& g) {
  std::set<Triple> out;
  const auto n = static_cast<RelationId>(g.vocab().num_data_relations());
  for (const Triple& t : g.split(Split::kTrain)) {
    out.insert(t);
    out.insert(Triple{t.object, t.relation + n, t.subject});
  }
  return out;
}

// Enumerates every entity tuple (X, A2, ..., Y) and counts distinct (X, Y)
// pairs satisfying the body, and those also satisfying the head.
std::pair<std::int64_t, std::int64_t> brute_force(const KnowledgeGraph& g, const Rule& rule) {
  const auto facts = closure(g);
  const int ne = static_cast<int>(g.num_entities());
  const std::size_t len = rule.body.size();
  std::set<std::pair<int, int>> pairs;
  std::vector<int> vars(len + 1, 0);
  while (true) {
    bool ok = true;
    for (std::size_t i = 0; i < len && ok; ++i) {
      ok = facts.count(Triple{vars[i], rule.body[i], vars[i + 1]}) > 0;
    }
    if (ok) pairs.insert({vars.front(), vars.back()});
    std::size_t k = 0;
    while (k <= len && ++vars[k] == ne) vars[k++] = 0;
    if (k > len) break;
  }
  std::int64_t support = 0;
  for (const auto& [x, y] : pairs) {
    for (const Triple& t : g.split(Split::kTrain)) {
      if (t.subject == x && t.relation == rule.head && t.object == y) {
        ++support;
        break;
      }
    }
  }
  return {support, static_cast<std::int64_t>(pairs.size())};
}

}  // namespace

TEST_CASE("mined confidences equal brute-force grounding counts") {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const KnowledgeGraph g = build_graph(random_dataset(9, 3, 35, seed));
    MinerConfig mc;
    mc.samples = 400;
    mc.max_rule_length = 3;
    mc.threshold = 0.0;
    mc.seed = seed;
    const RuleIndex index = mine(g, mc);
    REQUIRE(!index.empty());
    for (const Rule* rule : index.all()) {
      CHECK_FALSE(rule->approximate);
      const auto [support, body] = brute_force(g, *rule);
      CHECK(rule->support == support);
      CHECK(rule->body_count == body);
      const double expected = static_cast<double>(support) / (static_cast<double>(body) + 5.0);
      CHECK(rule->confidence == expected);
      ++checked;
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("score_rule follows the smoothed confidence and the cap") {
  NamedDataset d;
  d.train = {{"a", "p", "b"}, {"b", "p", "c"}, {"a", "g", "c"}, {"c", "p", "d"}};
  const KnowledgeGraph g = build_graph(d);
  const auto& v = g.vocab();
  Rule rule;
  rule.head = *v.find_relation("g");
  rule.body = {*v.find_relation("p"), *v.find_relation("p")};
  const Rule scored = score_rule(rule, g);
  CHECK(scored.body_count == 2);
  CHECK(scored.support == 1);
  CHECK(scored.confidence == 1.0 / 7.0);
  const Rule capped = score_rule(rule, g, 1);
  CHECK(capped.approximate);
  CHECK(capped.body_count == 1);
  CHECK(score_rule(rule, g, 10000, 0.0).confidence == 0.5);
  rule.body.clear();
  CHECK_THROWS_AS(score_rule(rule, g), Error);
}

TEST_CASE("generalize never emits the identity rule") {
  NamedDataset d;
  d.train = {{"a", "p", "b"}, {"a", "q", "b"}};
  const KnowledgeGraph g = build_graph(d);
  const auto& v = g.vocab();
  GroundedPath path{{*v.find_entity("a"), *v.find_entity("b")}, {*v.find_relation("p")}};
  const auto rules = generalize(path, g);
  REQUIRE(rules.size() == 1);
  CHECK(rules[0].head == *v.find_relation("q"));
}

TEST_CASE("planted kinship rule is recovered above 0.9") {
  const KnowledgeGraph g = build_graph(make_kinship(KinshipConfig{}));
  MinerConfig mc;
  mc.samples = 5000;
  mc.max_rule_length = 2;
  const RuleIndex index = mine(g, mc);
  const auto& v = g.vocab();
  const RelationId parent = *v.find_relation("parentOf");
  const RelationId grand = *v.find_relation("grandparentOf");
  const std::vector<RelationId> body{parent, parent};
  const Rule* rule = index.match(body, grand);
  REQUIRE(rule != nullptr);
  CHECK(rule->confidence > 0.9);
  for (const Rule* r : index.all()) CHECK(r->confidence >= 0.15);
}

TEST_CASE("rule index ordering, matching and self-loop trimming") {
  std::vector<Rule> rules;
  rules.push_back(Rule{0, {1, 2}, 0.5, 5, 5, false});
  rules.push_back(Rule{0, {1}, 0.5, 5, 5, false});
  rules.push_back(Rule{0, {2}, 0.9, 9, 5, false});
  rules.push_back(Rule{0, {2}, 0.3, 3, 5, false});
  rules.push_back(Rule{0, {3}, 0.1, 1, 5, false});
  const RelationId self_loop = 7;
  const RuleIndex index(rules, 0.15, self_loop);
  CHECK(index.size() == 3);
  const auto group = index.rules_for(0);
  REQUIRE(group.size() == 3);
  CHECK(group[0].body == std::vector<RelationId>{2});
  CHECK(group[0].confidence == 0.9);
  CHECK(group[1].body == std::vector<RelationId>{1});
  CHECK(group[2].body == std::vector<RelationId>{1, 2});
  const std::vector<RelationId> padded{1, self_loop, self_loop};
  REQUIRE(index.match(padded, 0) != nullptr);
  CHECK(index.match(padded, 0)->body == std::vector<RelationId>{1});
  const std::vector<RelationId> inner{self_loop, 1};
  CHECK(index.match(inner, 0) == nullptr);
  CHECK(index.match(padded, 4) == nullptr);
}

TEST_CASE("rule files round-trip with inverse atoms") {
  TempDir dir("rules");
  const KnowledgeGraph g = build_graph(random_dataset(8, 3, 30, 4));
  MinerConfig mc;
  mc.samples = 300;
  mc.threshold = 0.0;
  const RuleIndex index = mine(g, mc);
  write_rules(dir / "rules.tsv", index, g.vocab());
  const RuleIndex back = read_rules(dir / "rules.tsv", g.vocab());
  const auto a = index.all(), b = back.all();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]->head == b[i]->head);
    CHECK(a[i]->body == b[i]->body);
    CHECK(a[i]->confidence == b[i]->confidence);
    CHECK(a[i]->support == b[i]->support);
  }
  const RuleIndex filtered = read_rules(dir / "rules.tsv", g.vocab(), 0.3);
  for (const Rule* r : filtered.all()) CHECK(r->confidence >= 0.3);

  std::ofstream(dir / "odd.tsv") << "0.5\t1\t1\tmissing(X,Y) <= r0(X,Y)\n"
                                 << "0.5\t1\t1\tr0(X,Y) <= r1(Y,X)\n";
  const RuleIndex odd = read_rules(dir / "odd.tsv", g.vocab());
  REQUIRE(odd.size() == 1);
  const auto& v = g.vocab();
  CHECK(odd.all()[0]->body == std::vector<RelationId>{v.inverse(*v.find_relation("r1"))});
  std::ofstream(dir / "bad.tsv") << "not a rule\n";
  CHECK_THROWS_AS(read_rules(dir / "bad.tsv", g.vocab()), ParseError);
}

TEST_CASE("rule report precision counts predictions known in any split") {
  NamedDataset d;
  d.train = {{"a", "p", "b"}, {"b", "p", "c"}, {"b", "p", "d"}, {"x", "p", "y"}, {"y", "p", "z"},
             {"x", "g", "z"}};
  d.test = {{"a", "g", "c"}};
  const KnowledgeGraph g = build_graph(d);
  const auto& v = g.vocab();
  const RelationId p = *v.find_relation("p"), gr = *v.find_relation("g");
  const RuleIndex index({Rule{gr, {p, p}, 0.5, 1, 1, false}}, 0.0, v.self_loop());
  const auto report = rank_rules_by_accuracy(index, g.split(Split::kTest), g);
  REQUIRE(report.size() == 1);
  CHECK(report[0].groundings == 2);
  CHECK(report[0].correct == 1);
  CHECK(report[0].precision == 0.5);
}

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

#include "doctest.h"
#include "rulewalk/error.hpp"
#include "rulewalk/reward.hpp"
#include "test_util.hpp"

using namespace rulewalk;
using namespace rulewalk::testing;

namespace {

// a -p-> b -p-> c, a -g-> c in train; a -g-> d held out in dev.
struct World {
  KnowledgeGraph graph;
  EntityId a, b, c, d;
  RelationId p, g;
  RuleIndex rules;
  EmbeddingModel shaping;

  World()
      : graph(build_graph([] {
          NamedDataset n;
          n.train = {{"a", "p", "b"}, {"b", "p", "c"}, {"a", "g", "c"}, {"c", "p", "d"}};
          n.dev = {{"a", "g", "d"}};
          return n;
        }())),
        shaping(EmbeddingKind::kComplEx, graph.num_entities(), graph.vocab().num_relations(), 4) {
    const auto& v = graph.vocab();
    a = *v.find_entity("a");
    b = *v.find_entity("b");
    c = *v.find_entity("c");
    d = *v.find_entity("d");
    p = *v.find_relation("p");
    g = *v.find_relation("g");
    rules = RuleIndex({Rule{g, {p, p}, 0.6, 3, 5, false}, Rule{g, {p}, 0.2, 1, 5, false}}, 0.0,
                      v.self_loop());
    Rng rng(4);
    shaping.initialize(0.5, rng);
  }

  Trajectory walk(EntityId terminal, std::vector<RelationId> rels) const {
    Trajectory t;
    t.query = Query{a, g, std::nullopt};
    for (RelationId r : rels) t.steps.push_back(StepRecord{r, terminal});
    t.terminal = terminal;
    return t;
  }
};

}  // namespace

TEST_CASE("rule reward is the best matching confidence") {
  const World w;
  const RelationId loop = w.graph.vocab().self_loop();
  CHECK(rule_reward(std::vector<RelationId>{w.p, w.p}, w.g, w.rules) == 0.6);
  CHECK(rule_reward(std::vector<RelationId>{w.p, loop}, w.g, w.rules) == 0.2);
  CHECK(rule_reward(std::vector<RelationId>{loop, w.p}, w.g, w.rules) == 0.0);
  CHECK(rule_reward(std::vector<RelationId>{w.g, w.g}, w.g, w.rules) == 0.0);
  CHECK(rule_reward(std::vector<RelationId>{w.p, w.p}, w.p, w.rules) == 0.0);
}

TEST_CASE("hit reward is one exactly for train facts") {
  const World w;
  const int ne = static_cast<int>(w.graph.num_entities());
  const auto nr = static_cast<RelationId>(w.graph.vocab().num_data_relations());
  for (EntityId s = 0; s < ne; ++s) {
    for (RelationId r = 0; r < nr; ++r) {
      for (EntityId o = 0; o < ne; ++o) {
        const bool fact = w.graph.contains(s, r, o, SplitSet::kTrain);
        const double plain = hit_reward(s, r, o, w.graph, nullptr);
        CHECK(plain == (fact ? 1.0 : 0.0));
        const double shaped = hit_reward(s, r, o, w.graph, &w.shaping);
        if (fact) {
          CHECK(shaped == 1.0);
        } else {
          CHECK(shaped > 0.0);
          CHECK(shaped < 1.0);
          CHECK(shaped == w.shaping.shaping(s, r, o));
        }
      }
    }
  }
  // Held-out facts only count when the caller widens the scope.
  CHECK(hit_reward(w.a, w.g, w.d, w.graph, nullptr) == 0.0);
  CHECK(hit_reward(w.a, w.g, w.d, w.graph, nullptr, SplitSet::kTrainDev) == 1.0);
}

TEST_CASE("total reward is affine in lambda with the right endpoints") {
  const World w;
  const Trajectory miss = w.walk(w.d, {w.p, w.p});
  const Trajectory hit = w.walk(w.c, {w.p, w.p});
  for (const Trajectory* t : {&miss, &hit}) {
    RewardConfig cfg;
    cfg.rules = &w.rules;
    cfg.shaping = &w.shaping;
    const double r = rule_reward(*t, w.rules);
    const double h = hit_reward(*t, w.graph, &w.shaping);
    cfg.lambda = 0.0;
    CHECK(total_reward(*t, w.graph, cfg) == h);
    cfg.lambda = 1.0;
    CHECK(total_reward(*t, w.graph, cfg) == r);
    for (double lambda : {0.1, 0.35, 0.65, 0.9}) {
      cfg.lambda = lambda;
      CHECK(total_reward(*t, w.graph, cfg) ==
            doctest::Approx(lambda * r + (1.0 - lambda) * h).epsilon(1e-15));
    }
    cfg.lambda = 1.5;
    CHECK_THROWS_AS(total_reward(*t, w.graph, cfg), Error);
  }
  CHECK(hit_reward(hit, w.graph, nullptr) == 1.0);
  CHECK(rule_reward(hit, w.rules) == 0.6);
}

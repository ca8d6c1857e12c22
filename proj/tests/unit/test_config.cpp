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
#include <sstream>

#include "doctest.h"
#include "rulewalk/config.hpp"
#include "rulewalk/error.hpp"
#include "test_util.hpp"

using namespace rulewalk;
using namespace rulewalk::testing;

TEST_CASE("every key round-trips through write and load") {
  TempDir dir("config");
  Config c;
  set_config_value(c, "seed", "11");
  set_config_value(c, "hops", "2");
  set_config_value(c, "embed_kind", "distmult");
  set_config_value(c, "query_relations", "a,b");
  set_config_value(c, "rank_mode", "raw");
  set_config_value(c, "ablation", "freeze-pretrained");
  set_config_value(c, "reuse_rules", "true");
  set_config_value(c, "lambda", "0.4");
  {
    std::ofstream out(dir / "c.conf");
    write_config(out, c);
  }
  const Config back = load_config(dir / "c.conf");
  for (const std::string& key : config_keys()) {
    CHECK_MESSAGE(get_config_value(back, key) == get_config_value(c, key), key);
  }
  CHECK(back.train.query_relations == std::vector<std::string>{"a", "b"});
  CHECK(back.rank_mode == RankMode::kRaw);
  CHECK(back.train.ablation == Ablation::kFreezePretrained);
  CHECK(policy_seed(back) != pretrain_seed(back));
  CHECK(pretrain_seed(back) != joint_seed(back));
}

TEST_CASE("unknown keys are all named in one error") {
  TempDir dir("config");
  std::ofstream(dir / "bad.conf") << "# comment\n\nseed = 3\nbogus = 1\nhops = 2\nalso_bad = x\n";
  Config c;
  try {
    apply_config_file(c, dir / "bad.conf");
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
    const std::string msg = e.what();
    CHECK(msg.find("bogus") != std::string::npos);
    CHECK(msg.find("also_bad") != std::string::npos);
  }
  CHECK_THROWS_AS(set_config_value(c, "nope", "1"), Error);
  CHECK_THROWS_AS(set_config_value(c, "hops", "two"), Error);
  CHECK_THROWS_AS(set_config_value(c, "rank_mode", "sideways"), Error);
  std::ofstream(dir / "noeq.conf") << "seed 3\n";
  CHECK_THROWS_AS(apply_config_file(c, dir / "noeq.conf"), Error);
  CHECK_THROWS_AS(load_config(dir / "missing.conf"), Error);
}

TEST_CASE("validation enforces ranges") {
  Config c;
  c.out_dir = "/tmp/x";
  CHECK_NOTHROW(validate(c));
  Config a = c;
  a.policy.hidden_dropout = 0.5;
  CHECK_THROWS_AS(validate(a), Error);
  Config b = c;
  b.policy.relation_action_dropout = 0.96;
  CHECK_THROWS_AS(validate(b), Error);
  Config d = c;
  d.train.lambda = 2.0;
  CHECK_THROWS_AS(validate(d), Error);
  Config e = c;
  e.beam_width = 0;
  CHECK_THROWS_AS(validate(e), Error);
  Config s = c;
  s.train.ablation = Ablation::kSingleAgent;
  CHECK(policy_config(s).single_agent);
  CHECK_FALSE(policy_config(c).single_agent);
}

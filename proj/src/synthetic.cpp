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

#include "rulewalk/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "rulewalk/error.hpp"
#include "rulewalk/tensor.hpp"

namespace rulewalk {
namespace {

std::string person(int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "person_%05d", id);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::vector<NamedTriple>& triples) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  for (const auto& t : triples) out << t[0] << '\t' << t[1] << '\t' << t[2] << '\n';
  require(out.good(), ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace

NamedDataset make_kinship(const KinshipConfig& c) {
  require(c.families >= 1 && c.generations >= 3, ErrorCode::kConfig,
          "kinship needs at least one family and three generations");
  require(c.min_children >= 1 && c.max_children >= c.min_children, ErrorCode::kConfig,
          "kinship child counts must satisfy 1 <= min <= max");
  require(c.dev_fraction >= 0.0 && c.test_fraction >= 0.0 &&
              c.dev_fraction + c.test_fraction < 1.0,
          ErrorCode::kConfig, "held-out fractions must sum to less than 1");
  Rng rng(c.seed);
  std::uniform_int_distribution<int> children(c.min_children, c.max_children);

  std::vector<std::pair<int, int>> parent_edges;
  std::vector<int> parent_of_person;
  int next_id = 0;
  for (int f = 0; f < c.families; ++f) {
    std::vector<int> generation{next_id++};
    parent_of_person.push_back(-1);
    for (int g = 1; g < c.generations; ++g) {
      std::vector<int> next;
      for (int p : generation) {
        const int k = children(rng);
        for (int i = 0; i < k; ++i) {
          const int child = next_id++;
          parent_of_person.push_back(p);
          parent_edges.emplace_back(p, child);
          next.push_back(child);
        }
      }
      generation = std::move(next);
    }
  }

  std::vector<std::pair<int, int>> grand_edges;
  for (const auto& [p, child] : parent_edges) {
    const int gp = parent_of_person[static_cast<std::size_t>(p)];
    if (gp >= 0) grand_edges.emplace_back(gp, child);
  }
  std::sort(grand_edges.begin(), grand_edges.end());

  NamedDataset data;
  for (const auto& [p, child] : parent_edges) {
    data.train.push_back({person(p), "parentOf", person(child)});
  }
  std::vector<std::size_t> order(grand_edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_dev = static_cast<std::size_t>(c.dev_fraction * static_cast<double>(order.size()));
  const auto n_test = static_cast<std::size_t>(c.test_fraction * static_cast<double>(order.size()));
  std::vector<int> bucket(order.size(), 0);
  for (std::size_t i = 0; i < n_dev; ++i) bucket[order[i]] = 1;
  for (std::size_t i = n_dev; i < n_dev + n_test; ++i) bucket[order[i]] = 2;
  for (std::size_t i = 0; i < grand_edges.size(); ++i) {
    NamedTriple t{person(grand_edges[i].first), "grandparentOf", person(grand_edges[i].second)};
    (bucket[i] == 0 ? data.train : bucket[i] == 1 ? data.dev : data.test).push_back(t);
  }

  const int people = next_id;
  const auto friends = static_cast<int>(c.friend_ratio * people);
  std::uniform_int_distribution<int> anyone(0, people - 1);
  std::set<std::pair<int, int>> seen;
  while (static_cast<int>(seen.size()) < friends) {
    const int a = anyone(rng), b = anyone(rng);
    if (a == b || !seen.insert({a, b}).second) continue;
    data.train.push_back({person(a), "friendOf", person(b)});
  }
  return data;
}

NamedDataset make_cluster_graph() {
  NamedDataset data;
  const std::array<std::string, 2> hubs{"hub_a", "hub_b"};
  for (int h = 0; h < 2; ++h) {
    std::vector<std::string> members;
    for (int i = 0; i < 4; ++i) {
      members.push_back(std::string("member_") + static_cast<char>('a' + h) + std::to_string(i));
    }
    for (int i = 0; i < 4; ++i) {
      NamedTriple t{members[static_cast<std::size_t>(i)], "inGroup", hubs[static_cast<std::size_t>(h)]};
      (i == 3 ? data.dev : data.train).push_back(t);
    }
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        if (i == j) continue;
        NamedTriple t{members[static_cast<std::size_t>(i)], "peerOf", members[static_cast<std::size_t>(j)]};
        (i == 0 && j == 1 ? data.test : data.train).push_back(t);
      }
    }
  }
  return data;
}

void write_dataset(const std::filesystem::path& dir, const NamedDataset& data) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "train.txt", data.train);
  write_file(dir / "dev.txt", data.dev);
  write_file(dir / "test.txt", data.test);
}

KnowledgeGraph build_graph(const NamedDataset& data, int bandwidth) {
  Vocabulary vocab;
  for (const auto& t : data.train) {
    vocab.add_entity(t[0]);
    vocab.add_relation(t[1]);
    vocab.add_entity(t[2]);
  }
  vocab.freeze();
  std::set<Triple> seen;
  auto convert = [&](const std::vector<NamedTriple>& in) {
    std::vector<Triple> out;
    seen.clear();
    for (const auto& t : in) {
      const auto s = vocab.find_entity(t[0]);
      const auto r = vocab.find_relation(t[1]);
      const auto o = vocab.find_entity(t[2]);
      if (!s || !r || !o || !vocab.is_data(*r)) continue;
      const Triple triple{*s, *r, *o};
      if (seen.insert(triple).second) out.push_back(triple);
    }
    return out;
  };
  SplitTriples splits;
  splits.train = convert(data.train);
  splits.dev = convert(data.dev);
  splits.test = convert(data.test);
  return KnowledgeGraph(std::move(vocab), std::move(splits), bandwidth);
}

}  // namespace rulewalk

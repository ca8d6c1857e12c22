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

// Small generated knowledge graphs for tests, demos and benchmarks.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rulewalk/kg.hpp"

namespace rulewalk {

using NamedTriple = std::array<std::string, 3>;

struct NamedDataset {
  std::vector<NamedTriple> train;
  std::vector<NamedTriple> dev;
  std::vector<NamedTriple> test;
};

// Family trees. Every person above the last generation has between
// min_children and max_children children. All parentOf and friendOf facts
// are in train; grandparentOf facts are split so that the rule
// grandparentOf(X,Y) <= parentOf(X,A), parentOf(A,Y) holds on every pair.
struct KinshipConfig {
  int families = 40;
  int generations = 5;
  int min_children = 1;
  int max_children = 3;
  // Random friendOf edges per person.
  double friend_ratio = 0.5;
  double dev_fraction = 0.03;
  double test_fraction = 0.03;
  std::uint64_t seed = 7;
};

NamedDataset make_kinship(const KinshipConfig& config);

// Ten entities: two hubs with four members each. Members of one hub are
// peers of each other; one membership per hub is held out for dev and one
// peer pair per hub for test.
NamedDataset make_cluster_graph();

void write_dataset(const std::filesystem::path& dir, const NamedDataset& data);

// Builds the vocabulary from train (then dev/test, skipping unseen names)
// and returns the indexed graph.
KnowledgeGraph build_graph(const NamedDataset& data, int bandwidth = 500);

}  // namespace rulewalk

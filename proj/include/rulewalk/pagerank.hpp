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

#include <filesystem>
#include <span>
#include <vector>

#include "rulewalk/kg.hpp"

namespace rulewalk {

struct PageRankConfig {
  double damping = 0.85;
  int max_iterations = 200;
  // Stop once the L1 change between iterates drops to this value.
  double tolerance = 1e-10;
};

struct PageRankResult {
  std::vector<double> scores;
  int iterations = 0;
  double last_delta = 0.0;
};

// Power iteration on the directed graph given by `edges`, with parallel
// (subject, object) edges collapsed. Dangling mass is spread uniformly.
PageRankResult compute_pagerank(std::size_t num_nodes,
                                std::span<const Triple> edges,
                                const PageRankConfig& config = {});

// `entity-id<TAB>score` per line.
void write_pagerank(const std::filesystem::path& path,
                    std::span<const double> scores);
std::vector<double> read_pagerank(const std::filesystem::path& path,
                                  std::size_t expected_entities);

}  // namespace rulewalk

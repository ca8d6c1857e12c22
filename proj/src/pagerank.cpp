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

#include "rulewalk/pagerank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "rulewalk/error.hpp"

namespace rulewalk {

PageRankResult compute_pagerank(std::size_t num_nodes,
                                std::span<const Triple> edges,
                                const PageRankConfig& config) {
  require(num_nodes > 0, ErrorCode::kPrecondition, "pagerank on an empty graph");
  require(config.damping > 0.0 && config.damping < 1.0, ErrorCode::kConfig,
          "pagerank damping must lie in (0, 1)");
  require(config.max_iterations > 0, ErrorCode::kConfig,
          "pagerank max_iterations must be positive");
  require(config.tolerance >= 0.0, ErrorCode::kConfig,
          "pagerank tolerance must be non-negative");

  std::vector<std::vector<std::size_t>> out(num_nodes);
  for (const auto& e : edges) {
    require(e.subject >= 0 && static_cast<std::size_t>(e.subject) < num_nodes &&
                e.object >= 0 && static_cast<std::size_t>(e.object) < num_nodes,
            ErrorCode::kLookup, "pagerank edge endpoint out of range");
    out[static_cast<std::size_t>(e.subject)].push_back(
        static_cast<std::size_t>(e.object));
  }
  for (auto& targets : out) {
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  }

  const double n = static_cast<double>(num_nodes);
  const double d = config.damping;
  PageRankResult result;
  result.scores.assign(num_nodes, 1.0 / n);
  std::vector<double> next(num_nodes);

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    double dangling = 0.0;
    for (std::size_t u = 0; u < num_nodes; ++u) {
      if (out[u].empty()) dangling += result.scores[u];
    }
    std::fill(next.begin(), next.end(), (1.0 - d) / n + d * dangling / n);
    for (std::size_t u = 0; u < num_nodes; ++u) {
      if (out[u].empty()) continue;
      const double share = d * result.scores[u] / static_cast<double>(out[u].size());
      for (const std::size_t v : out[u]) next[v] += share;
    }
    const double total = std::accumulate(next.begin(), next.end(), 0.0);
    double delta = 0.0;
    for (std::size_t v = 0; v < num_nodes; ++v) {
      next[v] /= total;
      delta += std::abs(next[v] - result.scores[v]);
    }
    result.scores.swap(next);
    result.iterations = iter + 1;
    result.last_delta = delta;
    if (delta <= config.tolerance) break;
  }
  return result;
}

void write_pagerank(const std::filesystem::path& path,
                    std::span<const double> scores) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  char buf[64];
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu\t%.17g\n", i, scores[i]);
    out << buf;
  }
  if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

std::vector<double> read_pagerank(const std::filesystem::path& path,
                                  std::size_t expected_entities) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<double> scores(expected_entities, -1.0);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t id = 0;
    double score = 0.0;
    if (std::sscanf(line.c_str(), "%zu\t%lf", &id, &score) != 2) {
      throw ParseError(path.string(), lineno, "expected entity-id<TAB>score");
    }
    if (id >= expected_entities) {
      throw ParseError(path.string(), lineno, "entity id out of range");
    }
    scores[id] = score;
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < 0.0) {
      fail(ErrorCode::kPrecondition,
           path.string() + " has no score for entity " + std::to_string(i) +
               "; delete the cache to recompute");
    }
  }
  return scores;
}

}  // namespace rulewalk

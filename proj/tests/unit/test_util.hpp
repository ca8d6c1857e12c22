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

// Shared fixtures for the unit tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rulewalk/autodiff.hpp"
#include "rulewalk/kg.hpp"
#include "rulewalk/synthetic.hpp"
#include "rulewalk/tensor.hpp"

namespace rulewalk::testing {

inline std::string ent(int i) { return "e" + std::to_string(i); }
inline std::string rel(int i) { return "r" + std::to_string(i); }

// Random train triples over `entities` x `relations`, no duplicates. Every
// relation and entity name appears at least once when count allows.
inline NamedDataset random_dataset(int entities, int relations, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> pick_e(0, entities - 1), pick_r(0, relations - 1);
  std::set<std::tuple<int, int, int>> seen;
  NamedDataset d;
  auto add = [&](int s, int r, int o) {
    if (seen.insert({s, r, o}).second) d.train.push_back({ent(s), rel(r), ent(o)});
  };
  for (int r = 0; r < relations; ++r) add(r % entities, r, (r + 1) % entities);
  for (int e = 0; e < entities; ++e) add(e, e % relations, (e + 1) % entities);
  int guard = 0;
  while (static_cast<int>(d.train.size()) < count && ++guard < 100000) {
    add(pick_e(rng), pick_r(rng), pick_e(rng));
  }
  return d;
}

// Temporary directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("rulewalk_" + tag + "_" + std::to_string(rng() % 1000000000ULL));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Below the floor, central differences at h = 1e-5 on an O(1) loss are
// dominated by roundoff (about 1e-10 absolute), so the error is measured
// against the floor instead.
inline double rel_error(double a, double b) {
  const double scale = std::max({std::fabs(a), std::fabs(b), 1e-5});
  return std::fabs(a - b) / scale;
}

// Compares backward() against central differences for every trainable
// element of `params`. `loss` must build a 1 x 1 value on the given tape and
// be deterministic. Returns the largest relative error.
inline double gradient_check(ParameterTable& params, const std::function<Var(Tape&)>& loss,
                             double h = 1e-5) {
  params.zero_grad();
  {
    Tape tape(true);
    Var l = loss(tape);
    tape.backward(l);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params.at(i);
    if (!p.trainable) continue;
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double saved = p.value[k];
      p.value[k] = saved + h;
      double up, down;
      {
        Tape t(false);
        up = loss(t).scalar();
      }
      p.value[k] = saved - h;
      {
        Tape t(false);
        down = loss(t).scalar();
      }
      p.value[k] = saved;
      const double numeric = (up - down) / (2.0 * h);
      worst = std::max(worst, rel_error(p.grad[k], numeric));
    }
  }
  return worst;
}

inline Matrix random_matrix(int rows, int cols, Rng& rng, double limit = 1.0) {
  Matrix m(rows, cols);
  init_uniform(m, limit, rng);
  return m;
}

}  // namespace rulewalk::testing

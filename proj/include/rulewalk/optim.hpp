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

#include <cstdint>
#include <vector>

#include "rulewalk/tensor.hpp"

namespace rulewalk {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction over every trainable parameter of a table.
// Moments are allocated lazily on the first step and keyed by table index,
// so parameters must not be added to the table after that.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Throws Error(kNumeric) naming the parameter if any trainable gradient
  // is not finite; no parameter is modified in that case.
  void step(ParameterTable& params);

  std::int64_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

 private:
  AdamConfig config_;
  std::int64_t step_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace rulewalk

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

#include "rulewalk/optim.hpp"

#include <cmath>

#include "rulewalk/error.hpp"

namespace rulewalk {

void Adam::step(ParameterTable& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params.at(i);
    if (p.trainable && !p.grad.all_finite()) {
      fail(ErrorCode::kNumeric, "non-finite gradient in parameter " + p.name);
    }
  }
  if (m_.size() != params.size()) {
    require(m_.empty(), ErrorCode::kState, "parameter table changed after the first Adam step");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Matrix& v = params.at(i).value;
      m_.emplace_back(v.rows(), v.cols());
      v_.emplace_back(v.rows(), v.cols());
    }
  }
  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params.at(i);
    if (!p.trainable) continue;
    Matrix& m = m_[i];
    Matrix& v = v_[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      m[k] = b1 * m[k] + (1.0 - b1) * g;
      v[k] = b2 * v[k] + (1.0 - b2) * g * g;
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p.value[k] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

}  // namespace rulewalk

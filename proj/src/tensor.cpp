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

#include "rulewalk/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "rulewalk/error.hpp"

namespace rulewalk {

Matrix::Matrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols),
      data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
  require(rows >= 0 && cols >= 0, ErrorCode::kShape, "negative matrix dimension");
}

Matrix Matrix::column(std::vector<double> values) {
  Matrix m;
  m.rows_ = static_cast<int>(values.size());
  m.cols_ = 1;
  m.data_ = std::move(values);
  return m;
}

std::string Matrix::shape_string() const {
  return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Parameter& ParameterTable::add(const std::string& name, int rows, int cols) {
  require(!has(name), ErrorCode::kInvalidArgument, "duplicate parameter " + name);
  index_.emplace(name, params_.size());
  params_.push_back(Parameter{name, Matrix(rows, cols), Matrix(rows, cols), true});
  return params_.back();
}

Parameter& ParameterTable::get(const std::string& name) {
  auto it = index_.find(name);
  require(it != index_.end(), ErrorCode::kLookup, "no parameter named " + name);
  return params_[it->second];
}

const Parameter& ParameterTable::get(const std::string& name) const {
  auto it = index_.find(name);
  require(it != index_.end(), ErrorCode::kLookup, "no parameter named " + name);
  return params_[it->second];
}

void ParameterTable::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

void ParameterTable::set_trainable(const std::string& prefix, bool trainable) {
  for (auto& p : params_) {
    if (p.name.starts_with(prefix)) p.trainable = trainable;
  }
}

void ParameterTable::set_all_trainable(bool trainable) {
  for (auto& p : params_) p.trainable = trainable;
}

double ParameterTable::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_) {
    if (!p.trainable) continue;
    for (double g : p.grad.data()) sq += g * g;
  }
  return std::sqrt(sq);
}

double ParameterTable::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& p : params_) {
      if (!p.trainable) continue;
      for (double& g : p.grad.data()) g *= scale;
    }
  }
  return norm;
}

std::vector<Matrix> ParameterTable::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParameterTable::restore(const std::vector<Matrix>& values) {
  require(values.size() == params_.size(), ErrorCode::kShape,
          "snapshot holds a different number of parameters");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(values[i].same_shape(params_[i].value), ErrorCode::kShape,
            "snapshot shape mismatch for " + params_[i].name);
    params_[i].value = values[i];
  }
}

std::uint64_t ParameterTable::checksum(
    const std::function<bool(const Parameter&)>& filter) const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& p : params_) {
    if (!filter(p)) continue;
    mix(p.name.data(), p.name.size());
    mix(p.value.data().data(), p.value.size() * sizeof(double));
  }
  return h;
}

void init_uniform(Matrix& m, double limit, Rng& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : m.data()) v = dist(rng);
}

void init_xavier(Matrix& m, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  init_uniform(m, limit, rng);
}

}  // namespace rulewalk

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
#include <deque>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace rulewalk {

using Rng = std::mt19937_64;

// Dense row-major matrix of doubles. Column vectors are n x 1.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0);
  static Matrix column(std::vector<double> values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;

  double& operator()(int r, int c) {
    return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) +
                 static_cast<std::size_t>(c)];
  }
  double operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) +
                 static_cast<std::size_t>(c)];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const double* row_ptr(int r) const {
    return data_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_);
  }
  double* row_ptr(int r) {
    return data_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_);
  }

  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;
};

// Named parameters with stable addresses. Not copyable; use snapshot() and
// restore() to keep copies of the values.
class ParameterTable {
 public:
  ParameterTable() = default;
  ParameterTable(const ParameterTable&) = delete;
  ParameterTable& operator=(const ParameterTable&) = delete;
  // Moves keep Parameter addresses stable.
  ParameterTable(ParameterTable&&) = default;
  ParameterTable& operator=(ParameterTable&&) = default;

  Parameter& add(const std::string& name, int rows, int cols);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t size() const { return params_.size(); }
  Parameter& at(std::size_t i) { return params_[i]; }
  const Parameter& at(std::size_t i) const { return params_[i]; }

  void zero_grad();
  // Applies to every parameter whose name starts with `prefix`.
  void set_trainable(const std::string& prefix, bool trainable);
  void set_all_trainable(bool trainable);

  double grad_norm() const;  // trainable parameters only
  // Scales trainable gradients so that their global norm is <= max_norm.
  // Returns the norm before clipping.
  double clip_grad_norm(double max_norm);

  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);
  // FNV-1a over names and the raw bytes of matching parameters' values.
  std::uint64_t checksum(const std::function<bool(const Parameter&)>& filter) const;

 private:
  std::deque<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

void init_uniform(Matrix& m, double limit, Rng& rng);
// Glorot/Xavier uniform with fan_in = cols, fan_out = rows.
void init_xavier(Matrix& m, Rng& rng);

}  // namespace rulewalk

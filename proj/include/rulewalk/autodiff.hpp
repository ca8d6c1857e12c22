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

// Define-by-run reverse-mode differentiation over dense double matrices.
//
// A Tape records every operation applied to its Vars. Parameters enter the
// tape by reference: their values are read in place and, when trainable,
// backward() accumulates straight into Parameter::grad. A tape built with
// record_gradients = false only evaluates values.

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "rulewalk/tensor.hpp"

namespace rulewalk {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Matrix& value() const;
  // Convenience for 1 x 1 results.
  double scalar() const;

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Matrix value);
  Var param(Parameter& p);

  // Seeds d(loss)/d(loss) = 1 and propagates to every recorded input.
  // A second call without new operations in between is a state error.
  void backward(Var loss);

  const Matrix& value(int id) const;
  // Gradient flowing into node `id` during backward().
  const Matrix& node_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  // Gradient accumulated for a node by the last backward(); zero if none.
  Matrix grad(Var v) const;

  // Receives the tape and the id of the node being differentiated.
  using Backward = std::function<void(Tape&, int)>;
  // Low-level node construction for op implementations.
  Var push(Matrix value, std::initializer_list<Var> parents, Backward backward);
  Var push(Matrix value, std::span<const Var> parents, Backward backward);
  // Gradient buffer of a node, or nullptr when it does not need one.
  Matrix* grad_buffer(int id);

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    Matrix* external_grad = nullptr;
    bool needs_grad = false;
    bool touched = false;
    Backward backward;
  };

  bool record_;
  bool backward_done_ = false;
  std::vector<Node> nodes_;
};

// Binary ops require equal shapes unless stated otherwise; violations throw
// Error(kShape) naming both shapes.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double value);
// Vertical concatenation; all parts share the column count.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
Var slice_rows(Var a, int begin, int count);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var sum(Var a);
// Flat element `index` as a 1 x 1 value.
Var pick(Var a, int index);
// Rows of `table` stacked into an ids.size() x cols matrix.
Var gather_rows(Var table, std::span<const int> ids);
// Row `id` of `table` as a cols x 1 column vector.
Var lookup(Var table, int id);

// Mask entries: nonzero = valid. An empty mask means all valid. Masked
// positions get probability exactly 0 and log-probability kMaskedLogProb.
inline constexpr double kMaskedLogProb = -1e30;
Var masked_softmax(Var logits, std::span<const std::uint8_t> mask = {});
Var masked_log_softmax(Var logits, std::span<const std::uint8_t> mask = {});
// -sum p log p over valid positions of softmax(logits), as 1 x 1.
Var masked_entropy(Var logits, std::span<const std::uint8_t> mask = {});

// Inverted dropout. Identity when !train or rate == 0. rate must lie in
// [0, 0.95].
Var dropout(Var a, double rate, bool train, Rng& rng);

// Plain-value helpers shared with code that does not need a tape.
std::vector<double> softmax_values(std::span<const double> logits,
                                   std::span<const std::uint8_t> mask = {});

}  // namespace rulewalk

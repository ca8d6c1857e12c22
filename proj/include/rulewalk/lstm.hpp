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

#include <string>
#include <vector>

#include "rulewalk/autodiff.hpp"
#include "rulewalk/tensor.hpp"

namespace rulewalk {

// Stacked LSTM built from tape ops. Layer l owns
//   <prefix>.l<l>.w  4H x (in_l + H), gate blocks ordered i, f, o, u
//   <prefix>.l<l>.b  4H x 1, forget block initialised to 1
class LstmStack {
 public:
  struct State {
    std::vector<Var> h;
    std::vector<Var> c;
    // Output of the top layer.
    Var top() const { return h.back(); }
  };

  LstmStack(ParameterTable& params, const std::string& prefix, int layers,
            int input_dim, int hidden_dim, Rng& rng);

  int layers() const { return layers_; }
  int input_dim() const { return input_dim_; }
  int hidden_dim() const { return hidden_dim_; }
  const std::string& prefix() const { return prefix_; }

  State zero_state(Tape& tape) const;
  // One time step. Hidden dropout is applied to the input of every layer
  // above the first.
  State step(Tape& tape, const State& prev, Var input, double hidden_dropout = 0.0,
             bool train = false, Rng* rng = nullptr) const;

 private:
  ParameterTable* params_;
  std::string prefix_;
  int layers_;
  int input_dim_;
  int hidden_dim_;
  std::vector<Parameter*> weights_;
  std::vector<Parameter*> biases_;
};

// A single cell update on plain tape values, exposed for tests.
void lstm_cell(Var w, Var b, Var x, Var h_prev, Var c_prev, int hidden_dim, Var& h,
               Var& c);

}  // namespace rulewalk

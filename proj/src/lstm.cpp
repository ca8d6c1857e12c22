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

#include "rulewalk/lstm.hpp"

#include "rulewalk/error.hpp"

namespace rulewalk {

void lstm_cell(Var w, Var b, Var x, Var h_prev, Var c_prev, int hidden_dim, Var& h,
               Var& c) {
  Var z = add(matmul(w, concat({x, h_prev})), b);
  Var in_gate = sigmoid(slice_rows(z, 0, hidden_dim));
  Var forget_gate = sigmoid(slice_rows(z, hidden_dim, hidden_dim));
  Var out_gate = sigmoid(slice_rows(z, 2 * hidden_dim, hidden_dim));
  Var candidate = tanh(slice_rows(z, 3 * hidden_dim, hidden_dim));
  c = add(mul(forget_gate, c_prev), mul(in_gate, candidate));
  h = mul(out_gate, tanh(c));
}

LstmStack::LstmStack(ParameterTable& params, const std::string& prefix, int layers,
                     int input_dim, int hidden_dim, Rng& rng)
    : params_(&params), prefix_(prefix), layers_(layers), input_dim_(input_dim),
      hidden_dim_(hidden_dim) {
  require(layers >= 1 && input_dim >= 1 && hidden_dim >= 1, ErrorCode::kConfig,
          prefix + ": LSTM dimensions must be positive");
  for (int l = 0; l < layers; ++l) {
    const int in = l == 0 ? input_dim : hidden_dim;
    const std::string base = prefix + ".l" + std::to_string(l);
    Parameter& w = params.add(base + ".w", 4 * hidden_dim, in + hidden_dim);
    init_xavier(w.value, rng);
    Parameter& b = params.add(base + ".b", 4 * hidden_dim, 1);
    for (int k = hidden_dim; k < 2 * hidden_dim; ++k) b.value[static_cast<std::size_t>(k)] = 1.0;
    weights_.push_back(&w);
    biases_.push_back(&b);
  }
}

LstmStack::State LstmStack::zero_state(Tape& tape) const {
  State s;
  for (int l = 0; l < layers_; ++l) {
    s.h.push_back(tape.constant(Matrix(hidden_dim_, 1)));
    s.c.push_back(tape.constant(Matrix(hidden_dim_, 1)));
  }
  return s;
}

LstmStack::State LstmStack::step(Tape& tape, const State& prev, Var input,
                                 double hidden_dropout, bool train, Rng* rng) const {
  require(static_cast<int>(prev.h.size()) == layers_ && static_cast<int>(prev.c.size()) == layers_,
          ErrorCode::kShape, prefix_ + ": state has the wrong layer count");
  require(input.value().rows() == input_dim_ && input.value().cols() == 1, ErrorCode::kShape,
          prefix_ + ": input " + input.value().shape_string() + " vs expected [" +
              std::to_string(input_dim_) + "x1]");
  State next;
  Var x = input;
  for (int l = 0; l < layers_; ++l) {
    if (l > 0 && train && hidden_dropout > 0.0) {
      require(rng != nullptr, ErrorCode::kInvalidArgument, "dropout needs an rng");
      x = dropout(x, hidden_dropout, train, *rng);
    }
    Var h, c;
    lstm_cell(tape.param(*weights_[static_cast<std::size_t>(l)]),
              tape.param(*biases_[static_cast<std::size_t>(l)]), x, prev.h[static_cast<std::size_t>(l)],
              prev.c[static_cast<std::size_t>(l)], hidden_dim_, h, c);
    next.h.push_back(h);
    next.c.push_back(c);
    x = h;
  }
  return next;
}

}  // namespace rulewalk

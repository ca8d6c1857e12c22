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

#include <map>

#include "doctest.h"
#include "rulewalk/autodiff.hpp"
#include "rulewalk/error.hpp"
#include "test_util.hpp"

using namespace rulewalk;
using namespace rulewalk::testing;

namespace {

constexpr double kTol = 1e-6;

// Parameters a (3x2), b (2x3), c (3x2), v (4x1) with random values, and a
// fixed random weighting that turns any output into a scalar.
struct Fixture {
  ParameterTable params;
  Parameter* a;
  Parameter* b;
  Parameter* c;
  Parameter* v;
  Rng rng{5};

  Fixture() {
    a = &params.add("a", 3, 2);
    b = &params.add("b", 2, 3);
    c = &params.add("c", 3, 2);
    v = &params.add("v", 4, 1);
    for (Parameter* p : {a, b, c, v}) init_uniform(p->value, 1.5, rng);
  }

  // sum(out .* W) with W drawn once per shape.
  Var reduce(Tape& t, Var out) {
    const Matrix& val = out.value();
    const std::string key = std::to_string(val.rows()) + "x" + std::to_string(val.cols());
    auto it = weights.find(key);
    if (it == weights.end()) {
      it = weights.emplace(key, random_matrix(val.rows(), val.cols(), rng)).first;
    }
    return sum(mul(out, t.constant(it->second)));
  }

  double check(const std::function<Var(Tape&)>& build) {
    return gradient_check(params, [&](Tape& t) { return reduce(t, build(t)); });
  }

  std::map<std::string, Matrix> weights;
};

}  // namespace

TEST_CASE("elementwise and linear ops match finite differences") {
  Fixture f;
  CHECK(f.check([&](Tape& t) { return matmul(t.param(*f.a), t.param(*f.b)); }) < kTol);
  CHECK(f.check([&](Tape& t) { return add(t.param(*f.a), t.param(*f.c)); }) < kTol);
  CHECK(f.check([&](Tape& t) { return sub(t.param(*f.a), t.param(*f.c)); }) < kTol);
  CHECK(f.check([&](Tape& t) { return mul(t.param(*f.a), t.param(*f.c)); }) < kTol);
  CHECK(f.check([&](Tape& t) { return mul(t.param(*f.a), t.param(*f.a)); }) < kTol);
  CHECK(f.check([&](Tape& t) { return scale(t.param(*f.a), -2.5); }) < kTol);
  CHECK(f.check([&](Tape& t) { return add_scalar(t.param(*f.a), 0.7); }) < kTol);
  CHECK(f.check([&](Tape& t) { return relu(t.param(*f.a)); }) < kTol);
  CHECK(f.check([&](Tape& t) { return sigmoid(t.param(*f.a)); }) < kTol);
  CHECK(f.check([&](Tape& t) { return rulewalk::tanh(t.param(*f.a)); }) < kTol);
  CHECK(f.check([&](Tape& t) { return sum(t.param(*f.b)); }) < kTol);
  CHECK(f.check([&](Tape& t) { return pick(t.param(*f.b), 4); }) < kTol);
}

TEST_CASE("structural ops match finite differences") {
  Fixture f;
  CHECK(f.check([&](Tape& t) { return concat({t.param(*f.a), t.param(*f.c), t.param(*f.a)}); }) < kTol);
  CHECK(f.check([&](Tape& t) { return slice_rows(t.param(*f.v), 1, 2); }) < kTol);
  const std::vector<int> ids{2, 0, 2};
  CHECK(f.check([&](Tape& t) { return gather_rows(t.param(*f.a), ids); }) < kTol);
  CHECK(f.check([&](Tape& t) { return lookup(t.param(*f.b), 1); }) < kTol);
  CHECK(f.check([&](Tape& t) {
          return matmul(gather_rows(t.param(*f.a), ids), lookup(t.param(*f.c), 0));
        }) < kTol);
}

TEST_CASE("masked softmax family matches finite differences") {
  Fixture f;
  const std::vector<std::uint8_t> mask{1, 0, 1, 1};
  CHECK(f.check([&](Tape& t) { return masked_softmax(t.param(*f.v)); }) < kTol);
  CHECK(f.check([&](Tape& t) { return masked_softmax(t.param(*f.v), mask); }) < kTol);
  CHECK(f.check([&](Tape& t) { return masked_entropy(t.param(*f.v), mask); }) < kTol);
  CHECK(f.check([&](Tape& t) { return masked_entropy(t.param(*f.v)); }) < kTol);
  // Reduce over valid positions only; masked log-probs are a sentinel.
  CHECK(gradient_check(f.params, [&](Tape& t) {
          Var lp = masked_log_softmax(t.param(*f.v), mask);
          return add(scale(pick(lp, 0), 0.3), add(pick(lp, 2), scale(pick(lp, 3), -1.7)));
        }) < kTol);
}

TEST_CASE("dropout with a fixed mask matches finite differences") {
  Fixture f;
  CHECK(f.check([&](Tape& t) {
          Rng r(99);
          return dropout(t.param(*f.a), 0.4, true, r);
        }) < kTol);
  Tape t(false);
  Rng r(1);
  Var x = t.param(*f.a);
  CHECK(dropout(x, 0.5, false, r).value() == f.a->value);
  CHECK(dropout(x, 0.0, true, r).value() == f.a->value);
  CHECK_THROWS_AS(dropout(x, 0.96, true, r), Error);
  const Matrix kept = dropout(x, 0.5, true, r).value();
  for (std::size_t i = 0; i < kept.size(); ++i) {
    CHECK((kept[i] == 0.0 || kept[i] == doctest::Approx(2.0 * f.a->value[i])));
  }
}

TEST_CASE("masked positions get exactly zero probability") {
  Tape t(false);
  Var logits = t.constant(Matrix::column({1.0, 50.0, -2.0}));
  const std::vector<std::uint8_t> mask{1, 0, 1};
  const Matrix p = masked_softmax(logits, mask).value();
  CHECK(p[1] == 0.0);
  CHECK(p[0] + p[2] == doctest::Approx(1.0).epsilon(1e-15));
  const Matrix lp = masked_log_softmax(logits, mask).value();
  CHECK(lp[1] == kMaskedLogProb);
  CHECK(std::exp(lp[0]) == doctest::Approx(p[0]).epsilon(1e-14));
  const auto values = softmax_values(std::vector<double>{1.0, 50.0, -2.0}, mask);
  CHECK(values[0] == doctest::Approx(p[0]).epsilon(1e-15));
  const std::vector<std::uint8_t> none{0, 0, 0};
  CHECK_THROWS_AS(masked_softmax(logits, none), Error);
  // Large logits stay finite.
  Var big = t.constant(Matrix::column({1000.0, 999.0}));
  CHECK(masked_softmax(big).value().all_finite());
}

TEST_CASE("frozen parameters receive no gradient and shapes are checked") {
  Fixture f;
  f.c->trainable = false;
  f.params.zero_grad();
  Tape t(true);
  Var loss = sum(mul(t.param(*f.a), t.param(*f.c)));
  t.backward(loss);
  for (std::size_t i = 0; i < f.c->grad.size(); ++i) CHECK(f.c->grad[i] == 0.0);
  for (std::size_t i = 0; i < f.a->grad.size(); ++i) CHECK(f.a->grad[i] == f.c->value[i]);
  CHECK_THROWS_AS(t.backward(loss), Error);

  Tape u(true);
  CHECK_THROWS_AS(add(u.param(*f.a), u.param(*f.b)), Error);
  CHECK_THROWS_AS(matmul(u.param(*f.a), u.param(*f.a)), Error);
  CHECK_THROWS_AS(u.backward(u.param(*f.a)), Error);
  Tape other(true);
  CHECK_THROWS_AS(add(u.param(*f.a), other.param(*f.c)), Error);
  Tape off(false);
  CHECK_THROWS_AS(off.backward(sum(off.param(*f.a))), Error);
}

TEST_CASE("gradients accumulate across uses of a node") {
  ParameterTable params;
  Parameter& x = params.add("x", 1, 1);
  x.value[0] = 3.0;
  params.zero_grad();
  Tape t(true);
  Var xv = t.param(x);
  Var y = add(mul(xv, xv), scale(xv, 2.0));  // x^2 + 2x
  t.backward(y);
  CHECK(x.grad[0] == 8.0);
  CHECK(t.grad(xv)[0] == 8.0);
}

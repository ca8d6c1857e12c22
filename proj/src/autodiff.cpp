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

#include "rulewalk/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rulewalk/error.hpp"

namespace rulewalk {
namespace {

Tape& tape_of(Var a) {
  require(a.valid(), ErrorCode::kState, "operation on an empty Var");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  require(a.valid() && b.valid() && a.tape() == b.tape(), ErrorCode::kState,
          "operands live on different tapes");
  return *a.tape();
}

void check_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), ErrorCode::kShape,
          std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
              b.shape_string());
}

void check_mask(const char* op, const Matrix& logits,
                std::span<const std::uint8_t> mask) {
  require(logits.cols() == 1, ErrorCode::kShape,
          std::string(op) + ": expected a column vector, got " + logits.shape_string());
  require(mask.empty() || mask.size() == logits.size(), ErrorCode::kShape,
          std::string(op) + ": mask length " + std::to_string(mask.size()) +
              " vs logits " + logits.shape_string());
}

bool valid_at(std::span<const std::uint8_t> mask, std::size_t i) {
  return mask.empty() || mask[i] != 0;
}

// Max-shifted log-sum-exp over valid entries; throws when none are valid.
double log_sum_exp(std::span<const double> x, std::span<const std::uint8_t> mask) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (valid_at(mask, i)) mx = std::max(mx, x[i]);
  }
  require(mx != -std::numeric_limits<double>::infinity(), ErrorCode::kInvalidArgument,
          "softmax: every position is masked");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (valid_at(mask, i)) s += std::exp(x[i] - mx);
  }
  return mx + std::log(s);
}

// Elementwise op whose derivative is expressed through input x and output y.
template <typename F, typename D>
Var elementwise(Var a, F f, D dydx) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const int ia = a.id();
  return t.push(std::move(y), {a}, [ia, dydx](Tape& tp, int self) {
    Matrix* ga = tp.grad_buffer(ia);
    if (!ga) return;
    const Matrix& g = tp.node_grad(self);
    const Matrix& xv = tp.value(ia);
    const Matrix& yv = tp.value(self);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * dydx(xv[i], yv[i]);
  });
}

std::vector<std::uint8_t> copy_mask(std::span<const std::uint8_t> mask) {
  return std::vector<std::uint8_t>(mask.begin(), mask.end());
}

}  // namespace

const Matrix& Var::value() const {
  require(valid(), ErrorCode::kState, "value of an empty Var");
  return tape_->value(id_);
}

double Var::scalar() const {
  const Matrix& v = value();
  require(v.size() == 1, ErrorCode::kShape, "scalar() on " + v.shape_string());
  return v[0];
}

const Matrix& Tape::value(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.external ? *n.external : n.value;
}

Var Tape::constant(Matrix value) {
  return push(std::move(value), std::span<const Var>{}, nullptr);
}

Var Tape::param(Parameter& p) {
  Node n;
  n.external = &p.value;
  if (record_ && p.trainable) {
    require(p.grad.same_shape(p.value), ErrorCode::kShape,
            "gradient buffer of " + p.name + " has the wrong shape");
    n.external_grad = &p.grad;
    n.needs_grad = true;
  }
  backward_done_ = false;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::push(Matrix value, std::initializer_list<Var> parents, Backward backward) {
  return push(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
              std::move(backward));
}

Var Tape::push(Matrix value, std::span<const Var> parents, Backward backward) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var& p : parents) {
      if (nodes_[static_cast<std::size_t>(p.id())].needs_grad) {
        n.needs_grad = true;
        break;
      }
    }
  }
  if (n.needs_grad) n.backward = std::move(backward);
  backward_done_ = false;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Matrix* Tape::grad_buffer(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.needs_grad) return nullptr;
  if (n.external_grad) {
    n.touched = true;
    return n.external_grad;
  }
  if (!n.touched) {
    const Matrix& v = n.external ? *n.external : n.value;
    n.grad = Matrix(v.rows(), v.cols());
    n.touched = true;
  }
  return &n.grad;
}

void Tape::backward(Var loss) {
  require(record_, ErrorCode::kState, "backward on a tape that does not record");
  require(loss.tape() == this, ErrorCode::kState, "loss belongs to another tape");
  require(!backward_done_, ErrorCode::kState,
          "backward called twice without a new forward computation");
  require(value(loss.id()).size() == 1, ErrorCode::kShape,
          "backward needs a scalar loss, got " + value(loss.id()).shape_string());
  backward_done_ = true;
  for (auto& n : nodes_) {
    n.touched = false;
    if (!n.external_grad) n.grad = Matrix();
  }
  Matrix* seed = grad_buffer(loss.id());
  if (!seed) return;
  (*seed)[0] += 1.0;
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.touched && n.backward) n.backward(*this, i);
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id())];
  if (n.external_grad) return *n.external_grad;
  if (n.touched) return n.grad;
  const Matrix& val = value(v.id());
  return Matrix(val.rows(), val.cols());
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  require(A.cols() == B.rows(), ErrorCode::kShape,
          "matmul: shape mismatch " + A.shape_string() + " x " + B.shape_string());
  const int m = A.rows(), k = A.cols(), n = B.cols();
  Matrix C(m, n);
  for (int i = 0; i < m; ++i) {
    const double* arow = A.row_ptr(i);
    double* crow = C.row_ptr(i);
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = B.row_ptr(p);
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(C), {a, b}, [ia, ib, m, k, n](Tape& tp, int self) {
    const Matrix& G = tp.node_grad(self);
    const Matrix& Av = tp.value(ia);
    const Matrix& Bv = tp.value(ib);
    if (Matrix* gA = tp.grad_buffer(ia)) {
      // dA = G * B^T
      for (int i = 0; i < m; ++i) {
        const double* grow = G.row_ptr(i);
        double* garow = gA->row_ptr(i);
        for (int p = 0; p < k; ++p) {
          const double* brow = Bv.row_ptr(p);
          double s = 0.0;
          for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
          garow[p] += s;
        }
      }
    }
    if (Matrix* gB = tp.grad_buffer(ib)) {
      // dB = A^T * G
      for (int i = 0; i < m; ++i) {
        const double* arow = Av.row_ptr(i);
        const double* grow = G.row_ptr(i);
        for (int p = 0; p < k; ++p) {
          const double av = arow[p];
          double* gbrow = gB->row_ptr(p);
          for (int j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_same_shape("add", a.value(), b.value());
  Matrix y = a.value();
  const Matrix& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(y), {a, b}, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.node_grad(self);
    for (int id : {ia, ib}) {
      if (Matrix* gx = tp.grad_buffer(id)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
      }
    }
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_same_shape("sub", a.value(), b.value());
  Matrix y = a.value();
  const Matrix& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(y), {a, b}, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.node_grad(self);
    if (Matrix* ga = tp.grad_buffer(ia)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
    if (Matrix* gb = tp.grad_buffer(ib)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_same_shape("mul", a.value(), b.value());
  Matrix y = a.value();
  const Matrix& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(y), {a, b}, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.node_grad(self);
    if (Matrix* ga = tp.grad_buffer(ia)) {
      const Matrix& bv2 = tp.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv2[i];
    }
    if (Matrix* gb = tp.grad_buffer(ib)) {
      const Matrix& av2 = tp.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av2[i];
    }
  });
}

Var scale(Var a, double factor) {
  return elementwise(
      a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double value) {
  return elementwise(
      a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Var concat(std::span<const Var> parts) {
  require(!parts.empty(), ErrorCode::kInvalidArgument, "concat of nothing");
  Tape& t = tape_of(parts[0]);
  const int cols = parts[0].value().cols();
  int rows = 0;
  for (const Var& p : parts) {
    require(p.tape() == &t, ErrorCode::kState, "operands live on different tapes");
    require(p.value().cols() == cols, ErrorCode::kShape,
            "concat: column mismatch " + parts[0].value().shape_string() + " vs " +
                p.value().shape_string());
    rows += p.value().rows();
  }
  Matrix y(rows, cols);
  std::vector<int> ids;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    std::copy(v.data().begin(), v.data().end(), y.data().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += v.size();
    ids.push_back(p.id());
  }
  return t.push(std::move(y), parts, [ids](Tape& tp, int self) {
    const Matrix& g = tp.node_grad(self);
    std::size_t off = 0;
    for (const int id : ids) {
      const std::size_t n = tp.value(id).size();
      if (Matrix* gx = tp.grad_buffer(id)) {
        for (std::size_t i = 0; i < n; ++i) (*gx)[i] += g[off + i];
      }
      off += n;
    }
  });
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice_rows(Var a, int begin, int count) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  require(begin >= 0 && count >= 0 && begin + count <= x.rows(), ErrorCode::kShape,
          "slice_rows: rows [" + std::to_string(begin) + ", " +
              std::to_string(begin + count) + ") out of " + x.shape_string());
  Matrix y(count, x.cols());
  std::copy(x.row_ptr(begin), x.row_ptr(begin) + y.size(), y.data().begin());
  const int ia = a.id();
  const std::size_t off = static_cast<std::size_t>(begin) * static_cast<std::size_t>(x.cols());
  return t.push(std::move(y), {a}, [ia, off](Tape& tp, int self) {
    Matrix* ga = tp.grad_buffer(ia);
    if (!ga) return;
    const Matrix& g = tp.node_grad(self);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[off + i] += g[i];
  });
}

Var relu(Var a) {
  return elementwise(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return elementwise(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return elementwise(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const int ia = a.id();
  return t.push(Matrix::column({s}), {a}, [ia](Tape& tp, int self) {
    Matrix* ga = tp.grad_buffer(ia);
    if (!ga) return;
    const double g = tp.node_grad(self)[0];
    for (double& v : ga->data()) v += g;
  });
}

Var pick(Var a, int index) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  require(index >= 0 && static_cast<std::size_t>(index) < x.size(), ErrorCode::kShape,
          "pick: index " + std::to_string(index) + " out of " + x.shape_string());
  const int ia = a.id();
  return t.push(Matrix::column({x[static_cast<std::size_t>(index)]}), {a},
                [ia, index](Tape& tp, int self) {
                  if (Matrix* ga = tp.grad_buffer(ia)) {
                    (*ga)[static_cast<std::size_t>(index)] += tp.node_grad(self)[0];
                  }
                });
}

Var gather_rows(Var table, std::span<const int> ids) {
  Tape& t = tape_of(table);
  const Matrix& tab = table.value();
  const int cols = tab.cols();
  Matrix y(static_cast<int>(ids.size()), cols);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    require(ids[r] >= 0 && ids[r] < tab.rows(), ErrorCode::kLookup,
            "gather_rows: row " + std::to_string(ids[r]) + " out of " + tab.shape_string());
    std::copy(tab.row_ptr(ids[r]), tab.row_ptr(ids[r]) + cols,
              y.row_ptr(static_cast<int>(r)));
  }
  const int it = table.id();
  std::vector<int> rows(ids.begin(), ids.end());
  return t.push(std::move(y), {table}, [it, rows, cols](Tape& tp, int self) {
    Matrix* gt = tp.grad_buffer(it);
    if (!gt) return;
    const Matrix& g = tp.node_grad(self);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      double* dst = gt->row_ptr(rows[r]);
      const double* src = g.row_ptr(static_cast<int>(r));
      for (int c = 0; c < cols; ++c) dst[c] += src[c];
    }
  });
}

Var lookup(Var table, int id) {
  Tape& t = tape_of(table);
  const Matrix& tab = table.value();
  require(id >= 0 && id < tab.rows(), ErrorCode::kLookup,
          "lookup: row " + std::to_string(id) + " out of " + tab.shape_string());
  const int cols = tab.cols();
  std::vector<double> v(tab.row_ptr(id), tab.row_ptr(id) + cols);
  const int it = table.id();
  return t.push(Matrix::column(std::move(v)), {table}, [it, id, cols](Tape& tp, int self) {
    Matrix* gt = tp.grad_buffer(it);
    if (!gt) return;
    const Matrix& g = tp.node_grad(self);
    double* dst = gt->row_ptr(id);
    for (int c = 0; c < cols; ++c) dst[c] += g[static_cast<std::size_t>(c)];
  });
}

std::vector<double> softmax_values(std::span<const double> logits,
                                   std::span<const std::uint8_t> mask) {
  require(mask.empty() || mask.size() == logits.size(), ErrorCode::kShape,
          "softmax: mask length mismatch");
  const double lse = log_sum_exp(logits, mask);
  std::vector<double> p(logits.size(), 0.0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (valid_at(mask, i)) p[i] = std::exp(logits[i] - lse);
  }
  return p;
}

Var masked_softmax(Var logits, std::span<const std::uint8_t> mask) {
  Tape& t = tape_of(logits);
  check_mask("masked_softmax", logits.value(), mask);
  Matrix y = Matrix::column(softmax_values(logits.value().data(), mask));
  const int il = logits.id();
  return t.push(std::move(y), {logits}, [il](Tape& tp, int self) {
    Matrix* gl = tp.grad_buffer(il);
    if (!gl) return;
    const Matrix& g = tp.node_grad(self);
    const Matrix& p = tp.value(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += g[i] * p[i];
    // Masked entries have p = 0 and receive no gradient.
    for (std::size_t i = 0; i < p.size(); ++i) (*gl)[i] += p[i] * (g[i] - dot);
  });
}

Var masked_log_softmax(Var logits, std::span<const std::uint8_t> mask) {
  Tape& t = tape_of(logits);
  const Matrix& x = logits.value();
  check_mask("masked_log_softmax", x, mask);
  const double lse = log_sum_exp(x.data(), mask);
  Matrix y(x.rows(), 1);
  std::vector<double> probs(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (valid_at(mask, i)) {
      y[i] = x[i] - lse;
      probs[i] = std::exp(y[i]);
    } else {
      y[i] = kMaskedLogProb;
    }
  }
  const int il = logits.id();
  auto keep = copy_mask(mask);
  return t.push(std::move(y), {logits},
                [il, probs = std::move(probs), keep = std::move(keep)](Tape& tp, int self) {
                  Matrix* gl = tp.grad_buffer(il);
                  if (!gl) return;
                  const Matrix& g = tp.node_grad(self);
                  double total = 0.0;
                  for (std::size_t i = 0; i < g.size(); ++i) {
                    if (valid_at(keep, i)) total += g[i];
                  }
                  for (std::size_t i = 0; i < g.size(); ++i) {
                    if (valid_at(keep, i)) (*gl)[i] += g[i] - probs[i] * total;
                  }
                });
}

Var masked_entropy(Var logits, std::span<const std::uint8_t> mask) {
  Tape& t = tape_of(logits);
  const Matrix& x = logits.value();
  check_mask("masked_entropy", x, mask);
  const double lse = log_sum_exp(x.data(), mask);
  std::vector<double> probs(x.size(), 0.0);
  std::vector<double> logp(x.size(), 0.0);
  double h = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!valid_at(mask, i)) continue;
    logp[i] = x[i] - lse;
    probs[i] = std::exp(logp[i]);
    h -= probs[i] * logp[i];
  }
  const int il = logits.id();
  return t.push(Matrix::column({h}), {logits},
                [il, h, probs = std::move(probs), logp = std::move(logp)](Tape& tp, int self) {
                  Matrix* gl = tp.grad_buffer(il);
                  if (!gl) return;
                  const double g = tp.node_grad(self)[0];
                  // dH/dx_k = -p_k (log p_k + H)
                  for (std::size_t i = 0; i < probs.size(); ++i) {
                    (*gl)[i] += -g * probs[i] * (logp[i] + h);
                  }
                });
}

Var dropout(Var a, double rate, bool train, Rng& rng) {
  require(rate >= 0.0 && rate <= 0.95, ErrorCode::kConfig,
          "dropout rate " + std::to_string(rate) + " outside [0, 0.95]");
  if (!train || rate == 0.0) return a;
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  std::bernoulli_distribution keep(1.0 - rate);
  const double inv = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = keep(rng) ? inv : 0.0;
    y[i] = x[i] * mask[i];
  }
  const int ia = a.id();
  return t.push(std::move(y), {a}, [ia, mask = std::move(mask)](Tape& tp, int self) {
    Matrix* ga = tp.grad_buffer(ia);
    if (!ga) return;
    const Matrix& g = tp.node_grad(self);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * mask[i];
  });
}

}  // namespace rulewalk

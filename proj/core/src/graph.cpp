// Copyright 2026 The deskpose Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "deskpose/graph.hpp"

#include <algorithm>
#include <cmath>

#include "deskpose/error.hpp"

namespace deskpose {

namespace {

void check_positive_dims(const Shape& s) {
  for (size_t d : s) DKP_CHECK(d > 0, "tensor dimensions must be positive");
}

// Trailing-dim broadcast of two shapes plus per-output-dim input strides
// (stride 0 on broadcast dims).
struct Bcast {
  Shape out;
  std::vector<size_t> sa, sb;
  size_t n = 0;
  bool same = false;
};

Bcast make_bcast(const Shape& a, const Shape& b) {
  Bcast p;
  if (a == b) {
    p.out = a;
    p.n = numel_of(a);
    p.same = true;
    return p;
  }
  const size_t rank = std::max(a.size(), b.size());
  p.out.resize(rank);
  std::vector<size_t> da(rank, 1), db(rank, 1);
  for (size_t i = 0; i < rank; ++i) {
    if (i < a.size()) da[rank - 1 - i] = a[a.size() - 1 - i];
    if (i < b.size()) db[rank - 1 - i] = b[b.size() - 1 - i];
  }
  for (size_t i = 0; i < rank; ++i) {
    DKP_CHECK(da[i] == db[i] || da[i] == 1 || db[i] == 1, "shapes are not broadcastable");
    p.out[i] = std::max(da[i], db[i]);
  }
  // Row-major strides of each (padded) input, zeroed on broadcast dims.
  p.sa.assign(rank, 0);
  p.sb.assign(rank, 0);
  size_t ra = 1, rb = 1;
  for (size_t i = rank; i-- > 0;) {
    if (da[i] != 1) {
      p.sa[i] = ra;
      ra *= da[i];
    }
    if (db[i] != 1) {
      p.sb[i] = rb;
      rb *= db[i];
    }
  }
  p.n = numel_of(p.out);
  return p;
}

// Calls fn(out_index, a_index, b_index) for every output element.
template <typename F>
void bcast_for_each(const Bcast& p, F&& fn) {
  if (p.same) {
    for (size_t i = 0; i < p.n; ++i) fn(i, i, i);
    return;
  }
  const size_t rank = p.out.size();
  std::vector<size_t> coord(rank, 0);
  size_t ia = 0, ib = 0;
  for (size_t i = 0; i < p.n; ++i) {
    fn(i, ia, ib);
    for (size_t d = rank; d-- > 0;) {
      ++coord[d];
      ia += p.sa[d];
      ib += p.sb[d];
      if (coord[d] < p.out[d]) break;
      coord[d] = 0;
      ia -= p.sa[d] * p.out[d];
      ib -= p.sb[d] * p.out[d];
    }
  }
}

// outer * axis_dim * inner decomposition used by concat/slice/reduce.
void split_axis(const Shape& s, int axis, size_t& outer, size_t& dim, size_t& inner) {
  outer = 1;
  inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[i];
  dim = s[axis];
  for (size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
}

int normalize_axis(int axis, size_t rank) {
  if (axis < 0) axis += static_cast<int>(rank);
  DKP_CHECK(axis >= 0 && axis < static_cast<int>(rank), "axis out of range");
  return axis;
}

}  // namespace

// ---- Tensor ---------------------------------------------------------------

const Shape& Tensor::shape() const { return g_->node(id_).shape; }
const std::vector<double>& Tensor::value() const { return g_->node(id_).value; }
const std::vector<double>& Tensor::grad() const {
  const Node& n = g_->node(id_);
  DKP_CHECK(n.grad.size() == n.value.size(), "grad read before backward()");
  return n.grad;
}
size_t Tensor::numel() const { return g_->node(id_).value.size(); }
double Tensor::item() const {
  DKP_CHECK(numel() == 1, "item() requires a one-element tensor");
  return value()[0];
}

// ---- Graph ----------------------------------------------------------------

int Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor Graph::leaf(const Array& a) {
  check_positive_dims(a.shape);
  DKP_CHECK(a.numel() == a.data.size(), "array shape/data mismatch");
  Node n;
  n.op = Op::kLeaf;
  n.shape = a.shape;
  n.value = a.data;
  return Tensor(this, push(std::move(n)));
}

Array Graph::value_of(const Tensor& t) const {
  const Node& n = node(t.id());
  return Array(n.shape, n.value);
}

Array Graph::grad_of(const Tensor& t) const {
  const Node& n = node(t.id());
  DKP_CHECK(n.grad.size() == n.value.size(), "grad read before backward()");
  return Array(n.shape, n.grad);
}

// ---- primitive builders ----------------------------------------------------

#define DKP_BINARY_IMPL(NAME, OPK, EXPR)                                               \
  Tensor NAME(Tensor a, Tensor b) {                                                    \
    DKP_CHECK(a.valid() && b.valid(), "invalid tensor");                               \
    DKP_CHECK(a.graph() == b.graph(), "operands belong to different graphs");          \
    Graph* g = a.graph();                                                              \
    Bcast p = make_bcast(a.shape(), b.shape());                                        \
    Node n;                                                                            \
    n.op = OPK;                                                                        \
    n.shape = p.out;                                                                   \
    n.value.resize(p.n);                                                               \
    n.in0 = a.id();                                                                    \
    n.in1 = b.id();                                                                    \
    const double* av = a.value().data();                                               \
    const double* bv = b.value().data();                                               \
    double* out = n.value.data();                                                      \
    bcast_for_each(p, [&](size_t i, size_t ia, size_t ib) { out[i] = (EXPR); });       \
    return Tensor(g, g->push(std::move(n)));                                           \
  }

DKP_BINARY_IMPL(add, Op::kAdd, av[ia] + bv[ib])
DKP_BINARY_IMPL(sub, Op::kSub, av[ia] - bv[ib])
DKP_BINARY_IMPL(mul, Op::kMul, av[ia] * bv[ib])
DKP_BINARY_IMPL(divide, Op::kDiv, av[ia] / bv[ib])
#undef DKP_BINARY_IMPL

Tensor matmul(Tensor a, Tensor b) {
  DKP_CHECK(a.graph() == b.graph(), "operands belong to different graphs");
  Graph* g = a.graph();
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  DKP_CHECK(sa.size() == 2 && sb.size() == 2, "matmul expects 2-D operands");
  DKP_CHECK(sa[1] == sb[0], "matmul inner dimensions differ");
  const size_t N = sa[0], K = sa[1], M = sb[1];
  Node n;
  n.op = Op::kMatmul;
  n.shape = {N, M};
  n.value.assign(N * M, 0.0);
  n.in0 = a.id();
  n.in1 = b.id();
  const double* av = a.value().data();
  const double* bv = b.value().data();
  double* out = n.value.data();
  for (size_t i = 0; i < N; ++i) {
    double* orow = out + i * M;
    const double* arow = av + i * K;
    for (size_t k = 0; k < K; ++k) {
      const double aik = arow[k];
      const double* brow = bv + k * M;
      for (size_t j = 0; j < M; ++j) orow[j] += aik * brow[j];
    }
  }
  return Tensor(g, g->push(std::move(n)));
}

Tensor transpose(Tensor a) {
  Graph* g = a.graph();
  const Shape& s = a.shape();
  DKP_CHECK(s.size() == 2, "transpose expects a 2-D tensor");
  const size_t R = s[0], C = s[1];
  Node n;
  n.op = Op::kTranspose;
  n.shape = {C, R};
  n.value.resize(R * C);
  n.in0 = a.id();
  const double* av = a.value().data();
  for (size_t i = 0; i < R; ++i)
    for (size_t j = 0; j < C; ++j) n.value[j * R + i] = av[i * C + j];
  return Tensor(g, g->push(std::move(n)));
}

#define DKP_UNARY_IMPL(NAME, OPK, EXPR)                   \
  Tensor NAME(Tensor a) {                                 \
    Graph* g = a.graph();                                 \
    Node n;                                               \
    n.op = OPK;                                           \
    n.shape = a.shape();                                  \
    n.value.resize(a.numel());                            \
    n.in0 = a.id();                                       \
    const double* x = a.value().data();                   \
    for (size_t i = 0; i < n.value.size(); ++i) {         \
      n.value[i] = (EXPR);                                \
    }                                                     \
    return Tensor(g, g->push(std::move(n)));              \
  }

DKP_UNARY_IMPL(exp, Op::kExp, std::exp(x[i]))
DKP_UNARY_IMPL(log, Op::kLog, std::log(x[i]))
DKP_UNARY_IMPL(tanh, Op::kTanh, std::tanh(x[i]))
DKP_UNARY_IMPL(sigmoid, Op::kSigmoid, 1.0 / (1.0 + std::exp(-x[i])))
DKP_UNARY_IMPL(sqrt, Op::kSqrt, std::sqrt(x[i]))
DKP_UNARY_IMPL(abs, Op::kAbs, std::fabs(x[i]))
#undef DKP_UNARY_IMPL

Tensor clamp_min(Tensor a, double c) {
  Graph* g = a.graph();
  Node n;
  n.op = Op::kClampMin;
  n.shape = a.shape();
  n.value.resize(a.numel());
  n.in0 = a.id();
  n.cval = c;
  const double* x = a.value().data();
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = x[i] >= c ? x[i] : c;
  return Tensor(g, g->push(std::move(n)));
}

Tensor softmax(Tensor a) {
  Graph* g = a.graph();
  const Shape& s = a.shape();
  DKP_CHECK(!s.empty() && s.back() >= 1, "softmax requires a non-empty last axis");
  const size_t C = s.back();
  const size_t rows = a.numel() / C;
  Node n;
  n.op = Op::kSoftmax;
  n.shape = s;
  n.value.resize(a.numel());
  n.in0 = a.id();
  const double* x = a.value().data();
  double* y = n.value.data();
  for (size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * C;
    double* yr = y + r * C;
    double m = xr[0];
    for (size_t j = 1; j < C; ++j) m = std::max(m, xr[j]);
    double sum = 0.0;
    for (size_t j = 0; j < C; ++j) {
      yr[j] = std::exp(xr[j] - m);
      sum += yr[j];
    }
    for (size_t j = 0; j < C; ++j) yr[j] /= sum;
  }
  return Tensor(g, g->push(std::move(n)));
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  DKP_CHECK(!parts.empty(), "concat of zero tensors");
  Graph* g = parts[0].graph();
  const Shape& s0 = parts[0].shape();
  const int ax = normalize_axis(axis, s0.size());
  size_t total = 0;
  for (const Tensor& t : parts) {
    DKP_CHECK(t.graph() == g, "operands belong to different graphs");
    const Shape& s = t.shape();
    DKP_CHECK(s.size() == s0.size(), "concat rank mismatch");
    for (size_t i = 0; i < s.size(); ++i)
      if (static_cast<int>(i) != ax) DKP_CHECK(s[i] == s0[i], "concat shape mismatch");
    total += s[ax];
  }
  Shape out = s0;
  out[ax] = total;
  Node n;
  n.op = Op::kConcat;
  n.shape = out;
  n.value.resize(numel_of(out));
  n.axis = ax;
  n.in0 = parts[0].id();
  if (parts.size() > 1) n.in1 = parts[1].id();
  for (size_t i = 2; i < parts.size(); ++i) n.extra_in.push_back(parts[i].id());
  size_t outer, dim_total, inner;
  split_axis(out, ax, outer, dim_total, inner);
  size_t off = 0;
  for (const Tensor& t : parts) {
    const size_t d = t.shape()[ax];
    const double* src = t.value().data();
    for (size_t o = 0; o < outer; ++o) {
      double* dst = n.value.data() + (o * dim_total + off) * inner;
      const double* s = src + o * d * inner;
      std::copy(s, s + d * inner, dst);
    }
    off += d;
  }
  return Tensor(g, g->push(std::move(n)));
}

Tensor slice(Tensor a, int axis, size_t start, size_t len) {
  Graph* g = a.graph();
  const Shape& s = a.shape();
  const int ax = normalize_axis(axis, s.size());
  DKP_CHECK(len >= 1 && start + len <= s[ax], "slice out of bounds");
  Shape out = s;
  out[ax] = len;
  Node n;
  n.op = Op::kSlice;
  n.shape = out;
  n.value.resize(numel_of(out));
  n.in0 = a.id();
  n.axis = ax;
  n.start = start;
  size_t outer, dim, inner;
  split_axis(s, ax, outer, dim, inner);
  const double* src = a.value().data();
  for (size_t o = 0; o < outer; ++o) {
    const double* sp = src + (o * dim + start) * inner;
    double* dp = n.value.data() + o * len * inner;
    std::copy(sp, sp + len * inner, dp);
  }
  return Tensor(g, g->push(std::move(n)));
}

Tensor reshape(Tensor a, Shape s) {
  Graph* g = a.graph();
  check_positive_dims(s);
  DKP_CHECK(numel_of(s) == a.numel(), "reshape changes element count");
  Node n;
  n.op = Op::kReshape;
  n.shape = std::move(s);
  n.value = a.value();
  n.in0 = a.id();
  return Tensor(g, g->push(std::move(n)));
}

Tensor reduce_sum(Tensor a) {
  Graph* g = a.graph();
  Node n;
  n.op = Op::kReduceSum;
  n.shape = {1};
  n.axis = -1;  // all
  double s = 0.0;
  for (double v : a.value()) s += v;
  n.value = {s};
  n.in0 = a.id();
  return Tensor(g, g->push(std::move(n)));
}

Tensor reduce_mean(Tensor a) {
  Graph* g = a.graph();
  Node n;
  n.op = Op::kReduceMean;
  n.shape = {1};
  n.axis = -1;
  double s = 0.0;
  for (double v : a.value()) s += v;
  n.value = {s / static_cast<double>(a.numel())};
  n.in0 = a.id();
  return Tensor(g, g->push(std::move(n)));
}

namespace {
Tensor reduce_axis(Tensor a, int axis, bool keepdims, bool mean) {
  Graph* g = a.graph();
  const Shape& s = a.shape();
  const int ax = normalize_axis(axis, s.size());
  size_t outer, dim, inner;
  split_axis(s, ax, outer, dim, inner);
  Shape out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (static_cast<int>(i) == ax) {
      if (keepdims) out.push_back(1);
    } else {
      out.push_back(s[i]);
    }
  }
  if (out.empty()) out = {1};
  Node n;
  n.op = mean ? Op::kReduceMean : Op::kReduceSum;
  n.shape = out;
  n.value.assign(outer * inner, 0.0);
  n.in0 = a.id();
  n.axis = ax;
  n.keepdims = keepdims;
  const double* x = a.value().data();
  for (size_t o = 0; o < outer; ++o)
    for (size_t d = 0; d < dim; ++d) {
      const double* xp = x + (o * dim + d) * inner;
      double* yp = n.value.data() + o * inner;
      for (size_t i = 0; i < inner; ++i) yp[i] += xp[i];
    }
  if (mean) {
    const double inv = 1.0 / static_cast<double>(dim);
    for (double& v : n.value) v *= inv;
  }
  return Tensor(g, g->push(std::move(n)));
}
}  // namespace

Tensor reduce_sum(Tensor a, int axis, bool keepdims) { return reduce_axis(a, axis, keepdims, false); }
Tensor reduce_mean(Tensor a, int axis, bool keepdims) { return reduce_axis(a, axis, keepdims, true); }

Tensor gather_rows(Tensor a, std::vector<int64_t> idx) {
  Graph* g = a.graph();
  const Shape& s = a.shape();
  DKP_CHECK(s.size() == 2, "gather_rows expects a 2-D tensor");
  const size_t N = s[0], C = s[1];
  Node n;
  n.op = Op::kGatherRows;
  n.shape = {idx.size(), C};
  n.value.assign(idx.size() * C, 0.0);
  n.in0 = a.id();
  const double* x = a.value().data();
  for (size_t r = 0; r < idx.size(); ++r) {
    const int64_t i = idx[r];
    if (i < 0) continue;  // zero row
    DKP_CHECK(static_cast<size_t>(i) < N, "gather index out of bounds");
    std::copy(x + i * C, x + (i + 1) * C, n.value.data() + r * C);
  }
  n.indices = std::move(idx);
  return Tensor(g, g->push(std::move(n)));
}

// ---- backward ---------------------------------------------------------------

void Graph::backward(const Tensor& loss) {
  DKP_CHECK(loss.graph() == this, "loss belongs to a different graph");
  if (at(loss.id()).value.size() != 1)
    throw ContractError("backward requires a scalar (one-element) loss");
  for (Node& n : nodes_) n.grad.assign(n.value.size(), 0.0);
  at(loss.id()).grad[0] = 1.0;

  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    const double* go = n.grad.data();
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd:
      case Op::kSub:
      case Op::kMul:
      case Op::kDiv: {
        Node& a = nodes_[n.in0];
        Node& b = nodes_[n.in1];
        Bcast p = make_bcast(a.shape, b.shape);
        double* ga = a.grad.data();
        double* gb = b.grad.data();
        const double* av = a.value.data();
        const double* bv = b.value.data();
        switch (n.op) {
          case Op::kAdd:
            bcast_for_each(p, [&](size_t i2, size_t ia, size_t ib) {
              ga[ia] += go[i2];
              gb[ib] += go[i2];
            });
            break;
          case Op::kSub:
            bcast_for_each(p, [&](size_t i2, size_t ia, size_t ib) {
              ga[ia] += go[i2];
              gb[ib] -= go[i2];
            });
            break;
          case Op::kMul:
            bcast_for_each(p, [&](size_t i2, size_t ia, size_t ib) {
              ga[ia] += go[i2] * bv[ib];
              gb[ib] += go[i2] * av[ia];
            });
            break;
          case Op::kDiv:
            bcast_for_each(p, [&](size_t i2, size_t ia, size_t ib) {
              const double inv = 1.0 / bv[ib];
              ga[ia] += go[i2] * inv;
              gb[ib] -= go[i2] * av[ia] * inv * inv;
            });
            break;
          default:
            break;
        }
        break;
      }
      case Op::kMatmul: {
        Node& a = nodes_[n.in0];
        Node& b = nodes_[n.in1];
        const size_t N = a.shape[0], K = a.shape[1], M = b.shape[1];
        const double* av = a.value.data();
        const double* bv = b.value.data();
        double* ga = a.grad.data();
        double* gb = b.grad.data();
        // dA = dC * B^T
        for (size_t i2 = 0; i2 < N; ++i2) {
          const double* gorow = go + i2 * M;
          double* garow = ga + i2 * K;
          for (size_t k = 0; k < K; ++k) {
            const double* brow = bv + k * M;
            double sum = 0.0;
            for (size_t j = 0; j < M; ++j) sum += gorow[j] * brow[j];
            garow[k] += sum;
          }
        }
        // dB = A^T * dC
        for (size_t i2 = 0; i2 < N; ++i2) {
          const double* arow = av + i2 * K;
          const double* gorow = go + i2 * M;
          for (size_t k = 0; k < K; ++k) {
            const double aik = arow[k];
            double* gbrow = gb + k * M;
            for (size_t j = 0; j < M; ++j) gbrow[j] += aik * gorow[j];
          }
        }
        break;
      }
      case Op::kTranspose: {
        Node& a = nodes_[n.in0];
        const size_t R = a.shape[0], C = a.shape[1];
        double* ga = a.grad.data();
        for (size_t r = 0; r < R; ++r)
          for (size_t c = 0; c < C; ++c) ga[r * C + c] += go[c * R + r];
        break;
      }
      case Op::kExp: {
        Node& a = nodes_[n.in0];
        double* ga = a.grad.data();
        for (size_t j = 0; j < n.value.size(); ++j) ga[j] += go[j] * n.value[j];
        break;
      }
      case Op::kLog: {
        Node& a = nodes_[n.in0];
        double* ga = a.grad.data();
        const double* x = a.value.data();
        for (size_t j = 0; j < n.value.size(); ++j) ga[j] += go[j] / x[j];
        break;
      }
      case Op::kTanh: {
        Node& a = nodes_[n.in0];
        double* ga = a.grad.data();
        for (size_t j = 0; j < n.value.size(); ++j) ga[j] += go[j] * (1.0 - n.value[j] * n.value[j]);
        break;
      }
      case Op::kSigmoid: {
        Node& a = nodes_[n.in0];
        double* ga = a.grad.data();
        for (size_t j = 0; j < n.value.size(); ++j) ga[j] += go[j] * n.value[j] * (1.0 - n.value[j]);
        break;
      }
      case Op::kSqrt: {
        Node& a = nodes_[n.in0];
        double* ga = a.grad.data();
        for (size_t j = 0; j < n.value.size(); ++j) ga[j] += go[j] * 0.5 / n.value[j];
        break;
      }
      case Op::kAbs: {
        Node& a = nodes_[n.in0];
        double* ga = a.grad.data();
        const double* x = a.value.data();
        for (size_t j = 0; j < n.value.size(); ++j)
          ga[j] += go[j] * (x[j] > 0.0 ? 1.0 : (x[j] < 0.0 ? -1.0 : 0.0));
        break;
      }
      case Op::kClampMin: {
        Node& a = nodes_[n.in0];
        double* ga = a.grad.data();
        const double* x = a.value.data();
        for (size_t j = 0; j < n.value.size(); ++j)
          if (x[j] >= n.cval) ga[j] += go[j];
        break;
      }
      case Op::kSoftmax: {
        Node& a = nodes_[n.in0];
        double* ga = a.grad.data();
        const size_t C = n.shape.back();
        const size_t rows = n.value.size() / C;
        const double* y = n.value.data();
        for (size_t r = 0; r < rows; ++r) {
          const double* yr = y + r * C;
          const double* gr = go + r * C;
          double dot = 0.0;
          for (size_t j = 0; j < C; ++j) dot += gr[j] * yr[j];
          double* gar = ga + r * C;
          for (size_t j = 0; j < C; ++j) gar[j] += (gr[j] - dot) * yr[j];
        }
        break;
      }
      case Op::kConcat: {
        std::vector<int> ins;
        ins.push_back(n.in0);
        if (n.in1 >= 0) ins.push_back(n.in1);
        for (int e : n.extra_in) ins.push_back(e);
        size_t outer, dim_total, inner;
        split_axis(n.shape, n.axis, outer, dim_total, inner);
        size_t off = 0;
        for (int in_id : ins) {
          Node& a = nodes_[in_id];
          const size_t d = a.shape[n.axis];
          double* ga = a.grad.data();
          for (size_t o = 0; o < outer; ++o) {
            const double* gp = go + (o * dim_total + off) * inner;
            double* ap = ga + o * d * inner;
            for (size_t j = 0; j < d * inner; ++j) ap[j] += gp[j];
          }
          off += d;
        }
        break;
      }
      case Op::kSlice: {
        Node& a = nodes_[n.in0];
        size_t outer, dim, inner;
        split_axis(a.shape, n.axis, outer, dim, inner);
        const size_t len = n.shape[n.axis];
        double* ga = a.grad.data();
        for (size_t o = 0; o < outer; ++o) {
          double* ap = ga + (o * dim + n.start) * inner;
          const double* gp = go + o * len * inner;
          for (size_t j = 0; j < len * inner; ++j) ap[j] += gp[j];
        }
        break;
      }
      case Op::kReshape: {
        Node& a = nodes_[n.in0];
        double* ga = a.grad.data();
        for (size_t j = 0; j < n.value.size(); ++j) ga[j] += go[j];
        break;
      }
      case Op::kReduceSum:
      case Op::kReduceMean: {
        Node& a = nodes_[n.in0];
        double* ga = a.grad.data();
        if (n.axis < 0) {
          const double f = n.op == Op::kReduceMean ? 1.0 / static_cast<double>(a.value.size()) : 1.0;
          const double gs = go[0] * f;
          for (size_t j = 0; j < a.value.size(); ++j) ga[j] += gs;
        } else {
          size_t outer, dim, inner;
          split_axis(a.shape, n.axis, outer, dim, inner);
          const double f = n.op == Op::kReduceMean ? 1.0 / static_cast<double>(dim) : 1.0;
          for (size_t o = 0; o < outer; ++o)
            for (size_t d = 0; d < dim; ++d) {
              double* ap = ga + (o * dim + d) * inner;
              const double* gp = go + o * inner;
              for (size_t j = 0; j < inner; ++j) ap[j] += gp[j] * f;
            }
        }
        break;
      }
      case Op::kGatherRows: {
        Node& a = nodes_[n.in0];
        const size_t C = a.shape[1];
        double* ga = a.grad.data();
        for (size_t r = 0; r < n.indices.size(); ++r) {
          const int64_t src = n.indices[r];
          if (src < 0) continue;
          const double* gp = go + r * C;
          double* ap = ga + src * C;
          for (size_t j = 0; j < C; ++j) ap[j] += gp[j];
        }
        break;
      }
    }
  }
}

// ---- composites -------------------------------------------------------------

Tensor linear(Tensor x, Tensor w, Tensor b) { return add(matmul(x, w), b); }

Tensor layer_norm(Tensor x, Tensor gamma, Tensor beta, double eps) {
  const int last = static_cast<int>(x.rank()) - 1;
  Tensor m = reduce_mean(x, last, true);
  Tensor xc = sub(x, m);
  Tensor v = reduce_mean(mul(xc, xc), last, true);
  Tensor denom = sqrt(add(v, x.graph()->scalar(eps)));
  return add(mul(divide(xc, denom), gamma), beta);
}

Tensor logit(Tensor p) {
  Tensor one = p.graph()->scalar(1.0);
  return sub(log(p), log(sub(one, p)));
}

Tensor clamp(Tensor x, double lo, double hi) {
  Tensor lo_clamped = clamp_min(x, lo);
  // max(-x, -hi) flips into min(x, hi)
  return scale(clamp_min(scale(lo_clamped, -1.0), -hi), -1.0);
}

Tensor scale(Tensor x, double s) { return mul(x, x.graph()->scalar(s)); }

}  // namespace deskpose

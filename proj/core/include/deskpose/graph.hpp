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

#pragma once

#include <cstdint>
#include <vector>

#include "deskpose/array.hpp"

namespace deskpose {

// Reverse-mode autodiff over dense double tensors.
//
// A Graph is an eager tape: every primitive computes its value at record
// time, so downstream code can make data-dependent decisions (bilinear
// corner indices, gather tables) while the graph is being built. backward()
// walks the tape once in reverse creation order, which is a valid reverse
// topological order by construction, and accumulates gradients for every
// node. The primitive set is closed; adding an op means adding its gradient
// rule here and a finite-difference check in the test suite.

enum class Op : uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kMatmul,
  kTranspose,
  kExp,
  kLog,
  kTanh,
  kSigmoid,
  kSqrt,
  kAbs,
  kClampMin,
  kSoftmax,
  kConcat,
  kSlice,
  kReshape,
  kReduceSum,
  kReduceMean,
  kGatherRows,
};

class Graph;

// Lightweight handle to one node of a Graph. Copyable; valid as long as the
// graph is alive.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Graph* g, int id) : g_(g), id_(id) {}

  Graph* graph() const { return g_; }
  int id() const { return id_; }
  bool valid() const { return g_ != nullptr; }

  const Shape& shape() const;
  const std::vector<double>& value() const;
  const std::vector<double>& grad() const;
  size_t numel() const;
  size_t rank() const { return shape().size(); }
  // Value of a one-element tensor.
  double item() const;

 private:
  Graph* g_ = nullptr;
  int id_ = -1;
};

struct Node {
  Op op = Op::kLeaf;
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  int in0 = -1;
  int in1 = -1;
  std::vector<int> extra_in;     // concat inputs beyond the first two
  int axis = -1;                 // concat/slice/reduce
  size_t start = 0;              // slice
  bool keepdims = false;         // reduce
  double cval = 0.0;             // clamp_min threshold
  std::vector<int64_t> indices;  // gather_rows (-1 selects an all-zero row)
};

class Graph {
 public:
  Graph() { nodes_.reserve(256); }
  explicit Graph(uint64_t rng_seed) : rng_seed_(rng_seed) { nodes_.reserve(256); }
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Seed consumed by any stochastic construction tied to this graph (e.g.
  // the training-time noisy query group). Primitives themselves are
  // deterministic.
  uint64_t rng_seed() const { return rng_seed_; }
  void set_rng_seed(uint64_t s) { rng_seed_ = s; }

  Tensor leaf(const Array& a);
  Tensor constant(const Array& a) { return leaf(a); }
  Tensor scalar(double v) { return leaf(Array::scalar(v)); }

  // Runs reverse-mode accumulation from a one-element loss. Every node's
  // gradient buffer is (re)set, so calling backward twice on the same graph
  // produces bit-identical results. Leaves that do not influence the loss
  // end up with zero gradient.
  void backward(const Tensor& loss);

  Array value_of(const Tensor& t) const;
  Array grad_of(const Tensor& t) const;

  size_t size() const { return nodes_.size(); }
  const Node& node(int id) const { return nodes_[id]; }

  // Low-level tape append used by the primitive builders below; the node's
  // value must already be fully computed.
  int push(Node n);

 private:
  Node& at(int id) { return nodes_[id]; }
  const Node& at(int id) const { return nodes_[id]; }

  std::vector<Node> nodes_;
  uint64_t rng_seed_ = 0;
};

// ---- primitives ----------------------------------------------------------

// Elementwise with numpy-style trailing broadcast.
Tensor add(Tensor a, Tensor b);
Tensor sub(Tensor a, Tensor b);
Tensor mul(Tensor a, Tensor b);
Tensor divide(Tensor a, Tensor b);

Tensor matmul(Tensor a, Tensor b);  // [N x K] * [K x M]
Tensor transpose(Tensor a);         // 2-D

Tensor exp(Tensor a);
Tensor log(Tensor a);
Tensor tanh(Tensor a);
Tensor sigmoid(Tensor a);
Tensor sqrt(Tensor a);
Tensor abs(Tensor a);
Tensor clamp_min(Tensor a, double c);  // max(a, c)

// Numerically stable softmax over the last axis; slices sum to 1.
Tensor softmax(Tensor a);

Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(Tensor a, int axis, size_t start, size_t len);
Tensor reshape(Tensor a, Shape s);
Tensor reduce_sum(Tensor a);                        // all entries -> [1]
Tensor reduce_sum(Tensor a, int axis, bool keepdims);
Tensor reduce_mean(Tensor a);
Tensor reduce_mean(Tensor a, int axis, bool keepdims);

// a: [N x C]. Row i of the result is a.row(idx[i]), or zeros when idx[i] < 0
// (used for zero padding at feature-map borders).
Tensor gather_rows(Tensor a, std::vector<int64_t> idx);

inline Tensor operator+(Tensor a, Tensor b) { return add(a, b); }
inline Tensor operator-(Tensor a, Tensor b) { return sub(a, b); }
inline Tensor operator*(Tensor a, Tensor b) { return mul(a, b); }
inline Tensor operator/(Tensor a, Tensor b) { return divide(a, b); }

// ---- composites (no new gradient rules) -----------------------------------

// x [N x I] * w [I x O] + b [O]
Tensor linear(Tensor x, Tensor w, Tensor b);
// Normalization over the last axis with learned scale/shift.
Tensor layer_norm(Tensor x, Tensor gamma, Tensor beta, double eps = 1e-5);
// log(p / (1 - p))
Tensor logit(Tensor p);
// min(max(x, lo), hi)
Tensor clamp(Tensor x, double lo, double hi);
// Scale by a compile-time constant.
Tensor scale(Tensor x, double s);

}  // namespace deskpose

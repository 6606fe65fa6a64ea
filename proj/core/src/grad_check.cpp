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

#include "deskpose/grad_check.hpp"

#include <cmath>
#include <cstring>

#include "deskpose/error.hpp"

namespace deskpose {

namespace {

double eval_loss(const ScalarFn& f, const std::vector<Array>& inputs) {
  Graph g;
  std::vector<Tensor> leaves;
  leaves.reserve(inputs.size());
  for (const Array& a : inputs) leaves.push_back(g.leaf(a));
  Tensor loss = f(g, leaves);
  DKP_CHECK(loss.numel() == 1, "gradcheck function must return a scalar");
  return loss.item();
}

}  // namespace

GradCheckReport finite_diff_check(const ScalarFn& f, const std::vector<Array>& inputs,
                                  double eps) {
  DKP_CHECK(eps > 0.0, "finite-difference step must be positive");

  // Determinism guard: two independent evaluations must agree bit for bit.
  const double l0 = eval_loss(f, inputs);
  const double l1 = eval_loss(f, inputs);
  if (std::memcmp(&l0, &l1, sizeof(double)) != 0)
    throw OracleError("function is not deterministic; finite-difference oracle is invalid");

  // Analytic gradients.
  Graph g;
  std::vector<Tensor> leaves;
  leaves.reserve(inputs.size());
  for (const Array& a : inputs) leaves.push_back(g.leaf(a));
  Tensor loss = f(g, leaves);
  g.backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (const Tensor& t : leaves) analytic.push_back(t.grad());

  GradCheckReport rep;
  rep.loss = l0;
  std::vector<Array> work = inputs;
  for (size_t k = 0; k < work.size(); ++k) {
    for (size_t j = 0; j < work[k].data.size(); ++j) {
      const double saved = work[k].data[j];
      work[k].data[j] = saved + eps;
      const double fp = eval_loss(f, work);
      work[k].data[j] = saved - eps;
      const double fm = eval_loss(f, work);
      work[k].data[j] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double an = analytic[k][j];
      const double rel = std::fabs(an - numeric) / std::max(1.0, std::fabs(an));
      rep.max_rel_err = std::max(rep.max_rel_err, rel);
      ++rep.entries;
    }
  }
  return rep;
}

GradCheckReport finite_diff_check(const ScalarFn& f, const Array& input, double eps) {
  return finite_diff_check(f, std::vector<Array>{input}, eps);
}

}  // namespace deskpose

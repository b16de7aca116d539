// Copyright 2026 The mpnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>

namespace mpnn {

/// Numerically stable softmax of a vector expression.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(
    const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = v;
  if (out.size() == 0) return out;
  const Scalar mx = out.maxCoeff();
  out = (out.array() - mx).exp();
  out /= out.sum();
  return out;
}

/// Pull a gradient back through y = softmax(x): dx = y .* (dy - <y, dy>).
template <typename DerivedY, typename DerivedG>
Eigen::Matrix<typename DerivedY::Scalar, Eigen::Dynamic, 1> softmax_backward(
    const Eigen::MatrixBase<DerivedY>& y, const Eigen::MatrixBase<DerivedG>& dy) {
  const auto dot = y.dot(dy);
  return (y.array() * (dy.array() - dot)).matrix();
}

/// Index of the largest entry; ties go to the smallest index.
template <typename Derived>
int argmax(const Eigen::MatrixBase<Derived>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

}  // namespace mpnn

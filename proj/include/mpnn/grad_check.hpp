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

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mpnn/config.hpp"
#include "mpnn/training.hpp"

namespace mpnn {

struct GradCheckOptions {
  double tolerance = 1e-4;
  double epsilon = 1e-5;
  int trials = 1;
  std::uint64_t seed = 0;
  /// Random parameters are drawn uniform in [-param_scale, param_scale] so that the
  /// activation is exercised well outside its linear regime.
  double param_scale = 0.5;
  /// Denominator floor of the relative error, for coordinates whose gradient is ~0.
  double abs_floor = 1e-8;
  LossConfig loss;  ///< joint objective by default
};

struct GradCheckEntry {
  std::string coordinate;
  double analytic = 0;
  double numeric = 0;
  double rel_error = 0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  double max_rel_error = 0;
  std::vector<GradCheckEntry> failures;  ///< worst first

  bool passed() const { return failures.empty(); }
  void merge(GradCheckReport other);
};

double relative_error(double analytic, double numeric, double abs_floor);

/// Compares analytic[i] against (L(+eps) - L(-eps)) / 2eps, where loss_at(i, d) evaluates
/// the loss with coordinate i shifted by d.
GradCheckReport compare_gradients(std::span<const double> analytic,
                                  std::span<const std::string> names,
                                  const std::function<long double(std::size_t, long double)>& loss_at,
                                  const GradCheckOptions& opts);

/// Central-difference check of every network parameter and every unary input on `trials`
/// random instances. Finite differences are evaluated in extended precision.
GradCheckReport grad_check(const ModelConfig& cfg, const GradCheckOptions& opts);

}  // namespace mpnn

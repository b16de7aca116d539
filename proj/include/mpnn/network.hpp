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

#include <random>
#include <string>
#include <vector>

#include "mpnn/factor_layers.hpp"
#include "mpnn/softmax.hpp"

namespace mpnn {

/// Parameters of all K steps; steps are untied.
template <typename Scalar>
struct NetworkParams {
  std::vector<StepParams<Scalar>> steps;

  static NetworkParams zeros(const ModelConfig& cfg, int num_steps) {
    NetworkParams p;
    p.steps.assign(num_steps, StepParams<Scalar>::zeros(cfg));
    return p;
  }
  static NetworkParams zeros(const ModelConfig& cfg) { return zeros(cfg, cfg.num_steps); }

  int num_steps() const { return static_cast<int>(steps.size()); }

  /// Visits (path, block) for every parameter block, step-major.
  template <typename F>
  void for_each_block(F&& f) {
    for (int k = 0; k < num_steps(); ++k)
      steps[k].for_each_block([&](const char* name, Matrix<Scalar>& b) {
        f("step" + std::to_string(k + 1) + "." + name, b);
      });
  }
  template <typename F>
  void for_each_block(F&& f) const {
    for (int k = 0; k < num_steps(); ++k)
      steps[k].for_each_block([&](const char* name, const Matrix<Scalar>& b) {
        f("step" + std::to_string(k + 1) + "." + name, b);
      });
  }

  Eigen::Index size() const {
    Eigen::Index n = 0;
    for_each_block([&](const std::string&, const Matrix<Scalar>& b) { n += b.size(); });
    return n;
  }

  NetworkParams& operator+=(const NetworkParams& o) {
    for (int k = 0; k < num_steps(); ++k) {
      steps[k].alpha += o.steps[k].alpha;
      steps[k].beta += o.steps[k].beta;
      steps[k].w_phi += o.steps[k].w_phi;
      steps[k].w_psi += o.steps[k].w_psi;
    }
    return *this;
  }
};

/// Gradients mirror the parameter structure.
template <typename Scalar>
using Gradients = NetworkParams<Scalar>;

/// Uniform [-scale, scale] initialization of one step.
template <typename Scalar, typename Rng>
StepParams<Scalar> random_step(const ModelConfig& cfg, Rng& rng, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  auto p = StepParams<Scalar>::zeros(cfg);
  p.for_each_block([&](const char*, Matrix<Scalar>& b) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = Scalar(dist(rng));
  });
  return p;
}

inline constexpr double kInitScale = 0.01;

/// Cached values of one step needed by the backward pass.
template <typename Scalar>
struct StepTape {
  ScoreSet<Scalar> inputs;  ///< post-normalization inputs of this step
  FactorActivations<Scalar> acts;
  ScoreSet<Scalar> outputs;
};

/// One residual message-passing step: factor layers, then the weighted second pass
/// back onto the scene, action and pose nodes.
template <typename Scalar>
StepTape<Scalar> step_forward(const ModelConfig& cfg, const ScoreSet<Scalar>& in,
                              const StepParams<Scalar>& p, const PersonMask& mask) {
  const auto& ls = cfg.labels;
  const int G = ls.num_scenes, H = ls.num_actions, Z = ls.num_poses;
  const int Zeff = ls.poses_enabled() ? Z : 1;
  const bool poses = ls.poses_enabled();

  StepTape<Scalar> tape;
  tape.inputs = in;
  phi_forward(cfg, in, p.alpha, mask, tape.acts);
  if (poses) psi_forward(cfg, in, p.beta, mask, tape.acts);

  ScoreSet<Scalar>& out = tape.outputs;
  out = in;
  for (int m = 0; m < cfg.max_persons; ++m) {
    if (!mask[m]) {
      out.action.row(m).setZero();
      if (poses) out.pose.row(m).setZero();
      continue;
    }
    for (int g = 0; g < G; ++g)
      for (int h = 0; h < H; ++h)
        for (int z = 0; z < Zeff; ++z) {
          const int row = template_row(ls, g, h, z);
          const Scalar f = tape.acts.phi_out(m, row);
          out.scene(g) += p.w_phi(row, 0) * f;
          out.action(m, h) += p.w_phi(row, 1) * f;
          if (poses) out.pose(m, z) += p.w_phi(row, 2) * f;
        }
  }
  if (poses) {
    const int T = cfg.latent_factors_per_scene;
    for (int t = 0; t < T; ++t)
      for (int g = 0; g < G; ++g) {
        const int row = t * G + g;
        const Scalar f = tape.acts.psi_out(row);
        out.scene(g) += p.w_psi(row, 0) * f;
        const Scalar to_pose = p.w_psi(row, 1) * f;
        for (int m = 0; m < cfg.max_persons; ++m)
          if (mask[m]) out.pose.row(m).array() += to_pose;
      }
  }
  return tape;
}

/// Back-propagates d outputs through one step. Accumulates into grad and returns d inputs.
template <typename Scalar>
ScoreSet<Scalar> step_backward(const ModelConfig& cfg, const StepTape<Scalar>& tape,
                               const StepParams<Scalar>& p, const PersonMask& mask,
                               const ScoreSet<Scalar>& d_out, StepParams<Scalar>& grad) {
  const auto& ls = cfg.labels;
  const int G = ls.num_scenes, H = ls.num_actions, Z = ls.num_poses;
  const int Zeff = ls.poses_enabled() ? Z : 1;
  const bool poses = ls.poses_enabled();

  // Residual path.
  ScoreSet<Scalar> d_in = d_out;
  for (int m = 0; m < cfg.max_persons; ++m) {
    if (mask[m]) continue;
    d_in.action.row(m).setZero();
    if (poses) d_in.pose.row(m).setZero();
  }

  Matrix<Scalar> d_phi = Matrix<Scalar>::Zero(cfg.max_persons, template_rows(ls));
  for (int m = 0; m < cfg.max_persons; ++m) {
    if (!mask[m]) continue;
    for (int g = 0; g < G; ++g)
      for (int h = 0; h < H; ++h)
        for (int z = 0; z < Zeff; ++z) {
          const int row = template_row(ls, g, h, z);
          const Scalar f = tape.acts.phi_out(m, row);
          Scalar d = p.w_phi(row, 0) * d_out.scene(g) + p.w_phi(row, 1) * d_out.action(m, h);
          grad.w_phi(row, 0) += d_out.scene(g) * f;
          grad.w_phi(row, 1) += d_out.action(m, h) * f;
          if (poses) {
            d += p.w_phi(row, 2) * d_out.pose(m, z);
            grad.w_phi(row, 2) += d_out.pose(m, z) * f;
          }
          d_phi(m, row) = d;
        }
  }
  phi_backward(cfg, tape.inputs, p.alpha, mask, tape.acts, d_phi, grad.alpha, d_in);

  if (poses) {
    Scalar pose_total(0);
    for (int m = 0; m < cfg.max_persons; ++m)
      if (mask[m]) pose_total += d_out.pose.row(m).sum();
    const int T = cfg.latent_factors_per_scene;
    Vector<Scalar> d_psi = Vector<Scalar>::Zero(T * G);
    for (int t = 0; t < T; ++t)
      for (int g = 0; g < G; ++g) {
        const int row = t * G + g;
        const Scalar f = tape.acts.psi_out(row);
        d_psi(row) = p.w_psi(row, 0) * d_out.scene(g) + p.w_psi(row, 1) * pose_total;
        grad.w_psi(row, 0) += d_out.scene(g) * f;
        grad.w_psi(row, 1) += pose_total * f;
      }
    psi_backward(cfg, tape.inputs, p.beta, mask, tape.acts, d_psi, grad.beta, d_in);
  }
  return d_in;
}

/// Softmax over the scene vector and over each real person's action and pose rows.
template <typename Scalar>
ScoreSet<Scalar> normalize_scores(const ScoreSet<Scalar>& s, const PersonMask& mask) {
  ScoreSet<Scalar> out = s;
  out.scene = softmax(s.scene);
  for (int m = 0; m < static_cast<int>(mask.size()); ++m) {
    if (!mask[m]) continue;
    out.action.row(m) = softmax(s.action.row(m).transpose()).transpose();
    if (s.pose.cols() > 0) out.pose.row(m) = softmax(s.pose.row(m).transpose()).transpose();
  }
  return out;
}

template <typename Scalar>
ScoreSet<Scalar> normalize_backward(const ScoreSet<Scalar>& normalized, const PersonMask& mask,
                                    const ScoreSet<Scalar>& d_normalized) {
  ScoreSet<Scalar> d = d_normalized;
  d.scene = softmax_backward(normalized.scene, d_normalized.scene);
  for (int m = 0; m < static_cast<int>(mask.size()); ++m) {
    if (!mask[m]) {
      d.action.row(m).setZero();
      d.pose.row(m).setZero();
      continue;
    }
    d.action.row(m) = softmax_backward(normalized.action.row(m).transpose(),
                                       d_normalized.action.row(m).transpose())
                          .transpose();
    if (d.pose.cols() > 0)
      d.pose.row(m) = softmax_backward(normalized.pose.row(m).transpose(),
                                       d_normalized.pose.row(m).transpose())
                          .transpose();
  }
  return d;
}

/// Runs all steps of params on already-normalized unary scores.
/// Step k > 1 consumes the softmax of step k-1's outputs.
template <typename Scalar>
std::vector<StepTape<Scalar>> network_forward(const ModelConfig& cfg,
                                              const ScoreSet<Scalar>& unary,
                                              const NetworkParams<Scalar>& params,
                                              const PersonMask& mask) {
  std::vector<StepTape<Scalar>> tapes;
  tapes.reserve(params.steps.size());
  for (int k = 0; k < params.num_steps(); ++k) {
    if (k == 0)
      tapes.push_back(step_forward(cfg, unary, params.steps[0], mask));
    else
      tapes.push_back(
          step_forward(cfg, normalize_scores(tapes.back().outputs, mask), params.steps[k], mask));
  }
  return tapes;
}

template <typename Scalar>
struct BackwardResult {
  Gradients<Scalar> grads;
  ScoreSet<Scalar> d_unary;  ///< gradient wrt the network's unary inputs
};

/// Full backward pass given the loss gradient wrt the final step's (unnormalized) outputs.
template <typename Scalar>
BackwardResult<Scalar> network_backward(const ModelConfig& cfg,
                                        const std::vector<StepTape<Scalar>>& tapes,
                                        const NetworkParams<Scalar>& params,
                                        const PersonMask& mask, const ScoreSet<Scalar>& d_final) {
  BackwardResult<Scalar> res;
  res.grads = Gradients<Scalar>::zeros(cfg, params.num_steps());
  ScoreSet<Scalar> d = d_final;
  for (int k = params.num_steps() - 1; k >= 0; --k) {
    d = step_backward(cfg, tapes[k], params.steps[k], mask, d, res.grads.steps[k]);
    if (k > 0) d = normalize_backward(tapes[k].inputs, mask, d);
  }
  res.d_unary = std::move(d);
  return res;
}

}  // namespace mpnn

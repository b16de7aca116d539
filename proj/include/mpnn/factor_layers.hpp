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

#include <cassert>
#include <vector>

#include <Eigen/Core>

#include "mpnn/config.hpp"

namespace mpnn {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// true = real person, false = dummy padding slot.
using PersonMask = std::vector<bool>;

/// Scene, per-person action and per-person pose scores at one point of the network.
/// action is M_max x |H|, pose is M_max x |Z| (zero columns in the arity-2 model).
template <typename Scalar>
struct ScoreSet {
  Vector<Scalar> scene;
  Matrix<Scalar> action;
  Matrix<Scalar> pose;

  static ScoreSet zeros(const ModelConfig& cfg) {
    ScoreSet s;
    s.scene = Vector<Scalar>::Zero(cfg.labels.num_scenes);
    s.action = Matrix<Scalar>::Zero(cfg.max_persons, cfg.labels.num_actions);
    s.pose = Matrix<Scalar>::Zero(cfg.max_persons, cfg.labels.num_poses);
    return s;
  }

  template <typename Other>
  ScoreSet<Other> cast() const {
    return {scene.template cast<Other>(), action.template cast<Other>(),
            pose.template cast<Other>()};
  }
};

/// Row index of the (g, h, z) template; z is ignored when poses are disabled.
inline int template_row(const LabelSpaces& ls, int g, int h, int z) {
  const int gh = g * ls.num_actions + h;
  return ls.poses_enabled() ? gh * ls.num_poses + z : gh;
}

inline int template_rows(const LabelSpaces& ls) {
  return ls.num_scenes * ls.num_actions * (ls.poses_enabled() ? ls.num_poses : 1);
}

/// Input roles of a phi template: (scene, action, pose), or (scene, action) in arity-2 mode.
inline int phi_roles(const LabelSpaces& ls) { return ls.poses_enabled() ? 3 : 2; }

/// Column of beta that multiplies r_z of person m.
inline int psi_column(const ModelConfig& cfg, int m, int z) {
  return 1 + (cfg.tie_psi_positions ? z : m * cfg.labels.num_poses + z);
}

inline int psi_columns(const ModelConfig& cfg) {
  const int Z = cfg.labels.num_poses;
  return 1 + (cfg.tie_psi_positions ? Z : cfg.max_persons * Z);
}

inline int psi_rows(const ModelConfig& cfg) {
  return cfg.labels.poses_enabled() ? cfg.latent_factors_per_scene * cfg.labels.num_scenes : 0;
}

/// First-pass parameters of one message-passing step plus the second-pass weights W.
///
/// alpha, w_phi: one row per (g,h,z) template, columns = roles (scene, action, pose).
/// beta: one row per (t,g), columns = [scene, r(person 0), ..., r(person M_max-1)]
///       or [scene, r] when positions are tied.
/// w_psi: one row per (t,g), columns = (scene, pose).
template <typename Scalar>
struct StepParams {
  Matrix<Scalar> alpha;
  Matrix<Scalar> beta;
  Matrix<Scalar> w_phi;
  Matrix<Scalar> w_psi;

  static StepParams zeros(const ModelConfig& cfg) {
    const int rows = template_rows(cfg.labels);
    const int roles = phi_roles(cfg.labels);
    StepParams p;
    p.alpha = Matrix<Scalar>::Zero(rows, roles);
    p.w_phi = Matrix<Scalar>::Zero(rows, roles);
    p.beta = Matrix<Scalar>::Zero(psi_rows(cfg), cfg.labels.poses_enabled() ? psi_columns(cfg) : 0);
    p.w_psi = Matrix<Scalar>::Zero(psi_rows(cfg), cfg.labels.poses_enabled() ? 2 : 0);
    return p;
  }

  /// Visits parameter blocks in serialization order.
  template <typename F>
  void for_each_block(F&& f) {
    f("alpha", alpha);
    f("beta", beta);
    f("w_phi", w_phi);
    f("w_psi", w_psi);
  }
  template <typename F>
  void for_each_block(F&& f) const {
    f("alpha", alpha);
    f("beta", beta);
    f("w_phi", w_phi);
    f("w_psi", w_psi);
  }
};

/// Factor-neuron pre-activations and outputs for one step.
/// phi_*: M_max x template_rows, psi_*: T*|G|.
template <typename Scalar>
struct FactorActivations {
  Matrix<Scalar> phi_pre, phi_out;
  Vector<Scalar> psi_pre, psi_out;
};

template <typename Scalar>
Scalar activate(Activation a, Scalar x) {
  using std::tanh;
  return a == Activation::tanh ? tanh(x) : x;
}

/// Derivative of the activation expressed through its output.
template <typename Scalar>
Scalar activation_slope(Activation a, Scalar y) {
  return a == Activation::tanh ? Scalar(1) - y * y : Scalar(1);
}

// phi: scene-action-pose factors ------------------------------------------------

/// phi_pre[m][ghz] = alpha_ghz . (s_g, a_h(m), r_z(m)) for active m; masked rows stay 0.
template <typename Scalar>
void phi_forward(const ModelConfig& cfg, const ScoreSet<Scalar>& in, const Matrix<Scalar>& alpha,
                 const PersonMask& mask, FactorActivations<Scalar>& acts) {
  const auto& ls = cfg.labels;
  const int G = ls.num_scenes, H = ls.num_actions, Zeff = ls.poses_enabled() ? ls.num_poses : 1;
  const bool poses = ls.poses_enabled();
  acts.phi_pre = Matrix<Scalar>::Zero(cfg.max_persons, template_rows(ls));
  acts.phi_out = Matrix<Scalar>::Zero(cfg.max_persons, template_rows(ls));
  for (int m = 0; m < cfg.max_persons; ++m) {
    if (!mask[m]) continue;
    for (int g = 0; g < G; ++g)
      for (int h = 0; h < H; ++h)
        for (int z = 0; z < Zeff; ++z) {
          const int row = template_row(ls, g, h, z);
          Scalar pre = alpha(row, 0) * in.scene(g) + alpha(row, 1) * in.action(m, h);
          if (poses) pre += alpha(row, 2) * in.pose(m, z);
          acts.phi_pre(m, row) = pre;
          acts.phi_out(m, row) = activate(cfg.factor_activation, pre);
        }
  }
}

/// Accumulates d alpha and d inputs from d phi_out. Sharing sites (persons) are summed.
template <typename Scalar>
void phi_backward(const ModelConfig& cfg, const ScoreSet<Scalar>& in, const Matrix<Scalar>& alpha,
                  const PersonMask& mask, const FactorActivations<Scalar>& acts,
                  const Matrix<Scalar>& d_phi_out, Matrix<Scalar>& d_alpha,
                  ScoreSet<Scalar>& d_in) {
  const auto& ls = cfg.labels;
  const int G = ls.num_scenes, H = ls.num_actions, Zeff = ls.poses_enabled() ? ls.num_poses : 1;
  const bool poses = ls.poses_enabled();
  for (int m = 0; m < cfg.max_persons; ++m) {
    if (!mask[m]) continue;
    for (int g = 0; g < G; ++g)
      for (int h = 0; h < H; ++h)
        for (int z = 0; z < Zeff; ++z) {
          const int row = template_row(ls, g, h, z);
          const Scalar d_pre =
              d_phi_out(m, row) * activation_slope(cfg.factor_activation, acts.phi_out(m, row));
          if (d_pre == Scalar(0)) continue;
          d_alpha(row, 0) += d_pre * in.scene(g);
          d_alpha(row, 1) += d_pre * in.action(m, h);
          d_in.scene(g) += d_pre * alpha(row, 0);
          d_in.action(m, h) += d_pre * alpha(row, 1);
          if (poses) {
            d_alpha(row, 2) += d_pre * in.pose(m, z);
            d_in.pose(m, z) += d_pre * alpha(row, 2);
          }
        }
  }
}

// psi: poses-all factors --------------------------------------------------------

/// psi_pre[t,g] = beta_tg . [s_g, r(person 0), ..., r(person M_max-1)], dummy persons read as 0.
template <typename Scalar>
void psi_forward(const ModelConfig& cfg, const ScoreSet<Scalar>& in, const Matrix<Scalar>& beta,
                 const PersonMask& mask, FactorActivations<Scalar>& acts) {
  if (!cfg.labels.poses_enabled())
    throw ValidationError("poses-all layer requires num_poses > 0");
  const int G = cfg.labels.num_scenes, Z = cfg.labels.num_poses;
  const int T = cfg.latent_factors_per_scene;
  acts.psi_pre = Vector<Scalar>::Zero(T * G);
  acts.psi_out = Vector<Scalar>::Zero(T * G);
  for (int t = 0; t < T; ++t)
    for (int g = 0; g < G; ++g) {
      const int row = t * G + g;
      Scalar pre = beta(row, 0) * in.scene(g);
      for (int m = 0; m < cfg.max_persons; ++m) {
        if (!mask[m]) continue;
        for (int z = 0; z < Z; ++z) pre += beta(row, psi_column(cfg, m, z)) * in.pose(m, z);
      }
      acts.psi_pre(row) = pre;
      acts.psi_out(row) = activate(cfg.factor_activation, pre);
    }
}

template <typename Scalar>
void psi_backward(const ModelConfig& cfg, const ScoreSet<Scalar>& in, const Matrix<Scalar>& beta,
                  const PersonMask& mask, const FactorActivations<Scalar>& acts,
                  const Vector<Scalar>& d_psi_out, Matrix<Scalar>& d_beta, ScoreSet<Scalar>& d_in) {
  const int G = cfg.labels.num_scenes, Z = cfg.labels.num_poses;
  const int T = cfg.latent_factors_per_scene;
  for (int t = 0; t < T; ++t)
    for (int g = 0; g < G; ++g) {
      const int row = t * G + g;
      const Scalar d_pre =
          d_psi_out(row) * activation_slope(cfg.factor_activation, acts.psi_out(row));
      if (d_pre == Scalar(0)) continue;
      d_beta(row, 0) += d_pre * in.scene(g);
      d_in.scene(g) += d_pre * beta(row, 0);
      for (int m = 0; m < cfg.max_persons; ++m) {
        if (!mask[m]) continue;
        for (int z = 0; z < Z; ++z) {
          const int col = psi_column(cfg, m, z);
          d_beta(row, col) += d_pre * in.pose(m, z);
          d_in.pose(m, z) += d_pre * beta(row, col);
        }
      }
    }
}

}  // namespace mpnn

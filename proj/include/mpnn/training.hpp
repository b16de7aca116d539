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

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mpnn/network.hpp"
#include "mpnn/scene_data.hpp"

namespace mpnn {

template <typename Scalar>
struct CrossEntropy {
  Scalar loss;
  Vector<Scalar> grad;  ///< softmax(scores) - onehot(truth)
};

/// -log softmax(scores)[truth] with its gradient wrt scores.
template <typename Derived>
CrossEntropy<typename Derived::Scalar> cross_entropy_loss(const Eigen::MatrixBase<Derived>& scores,
                                                          int truth) {
  using Scalar = typename Derived::Scalar;
  using std::exp;
  using std::log;
  const Scalar mx = scores.maxCoeff();
  const Scalar lse = mx + log((scores.array() - mx).exp().sum());
  CrossEntropy<Scalar> ce;
  ce.loss = lse - scores(truth);
  ce.grad = (scores.array() - lse).exp().matrix();
  ce.grad(truth) -= Scalar(1);
  return ce;
}

enum class LossPhase { scene_only, persons_only, joint };

std::string to_string(LossPhase p);

struct LossConfig {
  double scene_weight = 1.0;
  double action_weight = 1.0;
  double pose_weight = 1.0;
  LossPhase active_phase = LossPhase::joint;

  bool scene_active() const { return active_phase != LossPhase::persons_only; }
  bool persons_active() const { return active_phase != LossPhase::scene_only; }
};

template <typename Scalar>
struct BatchLoss {
  Scalar loss = 0;
  Scalar scene = 0, action = 0, pose = 0;  ///< unweighted head losses (person heads averaged)
  ScoreSet<Scalar> d_final;                ///< d loss / d final step outputs
};

/// Objective on the final step's outputs for the heads enabled by lc.
/// Person heads are averaged over real persons; a frame without persons contributes nothing.
template <typename Scalar>
BatchLoss<Scalar> batch_loss(const ModelConfig& cfg, const SceneInstance& inst,
                             const ScoreSet<Scalar>& final_scores, const LossConfig& lc) {
  BatchLoss<Scalar> out;
  out.d_final = ScoreSet<Scalar>::zeros(cfg);
  if (lc.scene_active() && lc.scene_weight != 0.0) {
    if (inst.truth_scene == kNoLabel) throw ValidationError("missing scene label for scene loss");
    auto ce = cross_entropy_loss(final_scores.scene, inst.truth_scene);
    out.scene = ce.loss;
    out.loss += Scalar(lc.scene_weight) * ce.loss;
    out.d_final.scene = Scalar(lc.scene_weight) * ce.grad;
  }
  const int active = inst.num_active();
  if (lc.persons_active() && active > 0) {
    const bool poses = cfg.labels.poses_enabled() && lc.pose_weight != 0.0;
    const bool actions = lc.action_weight != 0.0;
    const Scalar wa = Scalar(lc.action_weight) / Scalar(active);
    const Scalar wp = Scalar(lc.pose_weight) / Scalar(active);
    for (int m = 0; m < cfg.max_persons; ++m) {
      if (!inst.person_mask[m]) continue;
      if (actions) {
        if (inst.truth_actions[m] == kNoLabel)
          throw ValidationError("missing action label for person " + std::to_string(m));
        auto ce = cross_entropy_loss(final_scores.action.row(m).transpose(), inst.truth_actions[m]);
        out.action += ce.loss / Scalar(active);
        out.loss += wa * ce.loss;
        out.d_final.action.row(m) = wa * ce.grad.transpose();
      }
      if (poses) {
        if (inst.truth_poses[m] == kNoLabel)
          throw ValidationError("missing pose label for person " + std::to_string(m));
        auto ce = cross_entropy_loss(final_scores.pose.row(m).transpose(), inst.truth_poses[m]);
        out.pose += ce.loss / Scalar(active);
        out.loss += wp * ce.loss;
        out.d_final.pose.row(m) = wp * ce.grad.transpose();
      }
    }
  }
  return out;
}

/// theta <- theta - lr * g. Throws NumericError naming the first non-finite gradient entry.
void sgd_update(NetworkParams<double>& params, const Gradients<double>& grads, double lr);

/// One optimization phase of the schedule.
struct PhaseSpec {
  std::string name;
  LossConfig loss;
  int epochs = 0;
};

/// Phases run, in order, for every message-passing round k = 1..K.
struct Schedule {
  std::vector<PhaseSpec> phases;
  int batch_size = 1;

  /// Scene-only phase for epochs_phase_a, then persons-only phase for epochs_phase_b.
  static Schedule alternating(const ModelConfig& cfg);
};

struct EpochLog {
  int epoch = 0;  ///< global epoch counter, 1-based
  int round = 0;  ///< number of steps in the network being trained
  std::string phase;
  double loss_scene = 0, loss_action = 0, loss_pose = 0;
  double acc_scene = 0, acc_action = 0, acc_pose = 0;
};

/// `epoch phase loss_scene loss_action loss_pose acc_scene acc_action acc_pose`
std::string format_log_header();
std::string format_log_line(const EpochLog& e);

struct TrainState {
  NetworkParams<double> params;
  int epoch = 0;
  std::mt19937_64 rng;
  std::vector<EpochLog> log;
  /// Trained network after each round; round_params[k-1] has k steps.
  std::vector<NetworkParams<double>> round_params;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Step-wise training: round k extends the round k-1 network with a freshly
/// initialized step and runs every phase of the schedule on the whole k-step network.
TrainState train(const Dataset& dataset, const ModelConfig& cfg, const Schedule& schedule,
                 const EpochCallback& on_epoch = {});

/// Runs the schedule on an existing network without adding steps.
void run_phase(TrainState& state, const Dataset& dataset, const ModelConfig& cfg,
               const PhaseSpec& phase, int batch_size, const EpochCallback& on_epoch = {});

}  // namespace mpnn

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

#include "mpnn/training.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace mpnn {

std::string to_string(LossPhase p) {
  switch (p) {
    case LossPhase::scene_only: return "scene_only";
    case LossPhase::persons_only: return "persons_only";
    case LossPhase::joint: return "joint";
  }
  return "?";
}

void sgd_update(NetworkParams<double>& params, const Gradients<double>& grads, double lr) {
  // Validate everything first so a failed update leaves params untouched.
  grads.for_each_block([&](const std::string& path, const Matrix<double>& g) {
    for (Eigen::Index i = 0; i < g.size(); ++i)
      if (!std::isfinite(g.data()[i])) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%g", g.data()[i]);
        throw NumericError("non-finite gradient at " + path + "[" + std::to_string(i) +
                           "] = " + buf);
      }
  });
  for (int k = 0; k < params.num_steps(); ++k) {
    auto& p = params.steps[k];
    const auto& g = grads.steps[k];
    p.alpha -= lr * g.alpha;
    p.beta -= lr * g.beta;
    p.w_phi -= lr * g.w_phi;
    p.w_psi -= lr * g.w_psi;
  }
}

Schedule Schedule::alternating(const ModelConfig& cfg) {
  Schedule s;
  LossConfig a;
  a.active_phase = LossPhase::scene_only;
  LossConfig b;
  b.active_phase = LossPhase::persons_only;
  s.phases.push_back({"A", a, cfg.epochs_phase_a});
  s.phases.push_back({"B", b, cfg.epochs_phase_b});
  return s;
}

std::string format_log_header() {
  return "epoch\tphase\tloss_scene\tloss_action\tloss_pose\tacc_scene\tacc_action\tacc_pose";
}

std::string format_log_line(const EpochLog& e) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d\t%s/%d\t%.6f\t%.6f\t%.6f\t%.4f\t%.4f\t%.4f", e.epoch,
                e.phase.c_str(), e.round, e.loss_scene, e.loss_action, e.loss_pose, e.acc_scene,
                e.acc_action, e.acc_pose);
  return buf;
}

namespace {

struct Running {
  double loss[3] = {0, 0, 0};
  long loss_n[3] = {0, 0, 0};
  long correct[3] = {0, 0, 0};
  long total[3] = {0, 0, 0};

  void add(int head, double loss_value, bool hit) {
    loss[head] += loss_value;
    ++loss_n[head];
    correct[head] += hit ? 1 : 0;
    ++total[head];
  }
  double mean_loss(int head) const { return loss_n[head] ? loss[head] / loss_n[head] : 0.0; }
  double acc(int head) const { return total[head] ? double(correct[head]) / total[head] : 0.0; }
};

/// Per-head metrics on the final outputs, independent of which heads are in the objective.
void record_metrics(Running& r, const ModelConfig& cfg, const SceneInstance& inst,
                    const ScoreSet<double>& out) {
  if (inst.truth_scene != kNoLabel) {
    auto ce = cross_entropy_loss(out.scene, inst.truth_scene);
    r.add(0, ce.loss, argmax(out.scene) == inst.truth_scene);
  }
  for (int m = 0; m < cfg.max_persons; ++m) {
    if (!inst.person_mask[m]) continue;
    if (inst.truth_actions[m] != kNoLabel) {
      Vector<double> row = out.action.row(m).transpose();
      r.add(1, cross_entropy_loss(row, inst.truth_actions[m]).loss,
            argmax(row) == inst.truth_actions[m]);
    }
    if (cfg.labels.poses_enabled() && inst.truth_poses[m] != kNoLabel) {
      Vector<double> row = out.pose.row(m).transpose();
      r.add(2, cross_entropy_loss(row, inst.truth_poses[m]).loss,
            argmax(row) == inst.truth_poses[m]);
    }
  }
}

}  // namespace

void run_phase(TrainState& state, const Dataset& dataset, const ModelConfig& cfg,
               const PhaseSpec& phase, int batch_size, const EpochCallback& on_epoch) {
  const int n = static_cast<int>(dataset.instances.size());
  std::vector<int> order(n);
  batch_size = std::max(batch_size, 1);
  for (int e = 0; e < phase.epochs; ++e) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), state.rng);
    Running run;
    for (int start = 0; start < n; start += batch_size) {
      const int stop = std::min(n, start + batch_size);
      Gradients<double> total = Gradients<double>::zeros(cfg, state.params.num_steps());
      for (int b = start; b < stop; ++b) {
        const auto& inst = dataset.instances[order[b]];
        const auto tapes = network_forward(cfg, inst.unary(), state.params, inst.person_mask);
        const auto& out = tapes.back().outputs;
        record_metrics(run, cfg, inst, out);
        const auto bl = batch_loss(cfg, inst, out, phase.loss);
        auto back = network_backward(cfg, tapes, state.params, inst.person_mask, bl.d_final);
        total += back.grads;
      }
      sgd_update(state.params, total, cfg.learning_rate);
    }
    ++state.epoch;
    EpochLog log;
    log.epoch = state.epoch;
    log.round = state.params.num_steps();
    log.phase = phase.name;
    log.loss_scene = run.mean_loss(0);
    log.loss_action = run.mean_loss(1);
    log.loss_pose = run.mean_loss(2);
    log.acc_scene = run.acc(0);
    log.acc_action = run.acc(1);
    log.acc_pose = run.acc(2);
    for (double v : {log.loss_scene, log.loss_action, log.loss_pose})
      if (!std::isfinite(v)) throw NumericError("non-finite training loss at epoch " +
                                                std::to_string(state.epoch));
    state.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
}

TrainState train(const Dataset& dataset, const ModelConfig& cfg, const Schedule& schedule,
                 const EpochCallback& on_epoch) {
  validate_config(cfg);
  dataset.check_matches(cfg);
  TrainState state;
  state.rng.seed(cfg.rng_seed);
  for (int k = 1; k <= cfg.num_steps; ++k) {
    state.params.steps.push_back(random_step<double>(cfg, state.rng, kInitScale));
    for (const auto& phase : schedule.phases)
      run_phase(state, dataset, cfg, phase, schedule.batch_size, on_epoch);
    state.round_params.push_back(state.params);
  }
  return state;
}

}  // namespace mpnn

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

#include "mpnn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mpnn {

void GradCheckReport::merge(GradCheckReport other) {
  checked += other.checked;
  max_rel_error = std::max(max_rel_error, other.max_rel_error);
  failures.insert(failures.end(), std::make_move_iterator(other.failures.begin()),
                  std::make_move_iterator(other.failures.end()));
  std::stable_sort(failures.begin(), failures.end(),
                   [](const auto& a, const auto& b) { return a.rel_error > b.rel_error; });
}

double relative_error(double analytic, double numeric, double abs_floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), abs_floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport compare_gradients(std::span<const double> analytic,
                                  std::span<const std::string> names,
                                  const std::function<long double(std::size_t, long double)>& loss_at,
                                  const GradCheckOptions& opts) {
  GradCheckReport rep;
  const long double eps = opts.epsilon;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const long double up = loss_at(i, eps);
    const long double down = loss_at(i, -eps);
    const double numeric = static_cast<double>((up - down) / (2 * eps));
    const double err = relative_error(analytic[i], numeric, opts.abs_floor);
    ++rep.checked;
    // NaN errors must count as failures.
    if (!(err <= opts.tolerance)) {
      rep.failures.push_back({names[i], analytic[i], numeric, err});
      rep.max_rel_error = std::max(rep.max_rel_error, std::isnan(err) ? INFINITY : err);
    } else {
      rep.max_rel_error = std::max(rep.max_rel_error, err);
    }
  }
  std::stable_sort(rep.failures.begin(), rep.failures.end(),
                   [](const auto& a, const auto& b) { return a.rel_error > b.rel_error; });
  return rep;
}

namespace {

SceneInstance random_instance(const ModelConfig& cfg, std::mt19937_64& rng) {
  const auto& ls = cfg.labels;
  std::uniform_int_distribution<int> persons(1, cfg.max_persons);
  std::normal_distribution<double> logit(0.0, 1.5);
  const int M = persons(rng);
  SceneInstance inst;
  auto rand_dist = [&](int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = logit(rng);
    return softmax(v);
  };
  inst.scene_unary = rand_dist(ls.num_scenes);
  inst.action_unary = Eigen::MatrixXd::Zero(M, ls.num_actions);
  inst.pose_unary = Eigen::MatrixXd::Zero(M, ls.num_poses);
  inst.person_mask.assign(M, true);
  inst.truth_actions.assign(M, kNoLabel);
  inst.truth_poses.assign(M, kNoLabel);
  inst.truth_scene = std::uniform_int_distribution<int>(0, ls.num_scenes - 1)(rng);
  for (int m = 0; m < M; ++m) {
    inst.action_unary.row(m) = rand_dist(ls.num_actions).transpose();
    inst.truth_actions[m] = std::uniform_int_distribution<int>(0, ls.num_actions - 1)(rng);
    if (ls.poses_enabled()) {
      inst.pose_unary.row(m) = rand_dist(ls.num_poses).transpose();
      inst.truth_poses[m] = std::uniform_int_distribution<int>(0, ls.num_poses - 1)(rng);
    }
  }
  return pad_instance(inst, cfg);
}

// Flat views over every checked coordinate: parameters first, then unary inputs.
template <typename Scalar>
std::vector<Scalar*> coordinates(NetworkParams<Scalar>& p, ScoreSet<Scalar>& u) {
  std::vector<Scalar*> out;
  p.for_each_block([&](const std::string&, Matrix<Scalar>& b) {
    for (Eigen::Index i = 0; i < b.size(); ++i) out.push_back(b.data() + i);
  });
  for (Eigen::Index i = 0; i < u.scene.size(); ++i) out.push_back(u.scene.data() + i);
  for (Eigen::Index i = 0; i < u.action.size(); ++i) out.push_back(u.action.data() + i);
  for (Eigen::Index i = 0; i < u.pose.size(); ++i) out.push_back(u.pose.data() + i);
  return out;
}

std::vector<std::string> coordinate_names(const NetworkParams<double>& p,
                                          const ScoreSet<double>& u) {
  std::vector<std::string> out;
  p.for_each_block([&](const std::string& path, const Matrix<double>& b) {
    for (Eigen::Index c = 0; c < b.cols(); ++c)
      for (Eigen::Index r = 0; r < b.rows(); ++r)
        out.push_back(path + "(" + std::to_string(r) + "," + std::to_string(c) + ")");
  });
  auto add = [&](const char* name, const Matrix<double>& b) {
    for (Eigen::Index c = 0; c < b.cols(); ++c)
      for (Eigen::Index r = 0; r < b.rows(); ++r)
        out.push_back(std::string(name) + "(" + std::to_string(r) + "," + std::to_string(c) + ")");
  };
  add("unary.scene", u.scene);
  add("unary.action", u.action);
  add("unary.pose", u.pose);
  return out;
}

}  // namespace

GradCheckReport grad_check(const ModelConfig& cfg, const GradCheckOptions& opts) {
  validate_config(cfg);
  if (opts.trials < 1) throw ValidationError("trials must be >= 1");
  std::mt19937_64 rng(opts.seed);
  GradCheckReport total;
  for (int trial = 0; trial < opts.trials; ++trial) {
    NetworkParams<double> params;
    for (int k = 0; k < cfg.num_steps; ++k)
      params.steps.push_back(random_step<double>(cfg, rng, opts.param_scale));
    const SceneInstance inst = random_instance(cfg, rng);
    ScoreSet<double> unary = inst.unary();

    const auto tapes = network_forward(cfg, unary, params, inst.person_mask);
    const auto bl = batch_loss(cfg, inst, tapes.back().outputs, opts.loss);
    auto back = network_backward(cfg, tapes, params, inst.person_mask, bl.d_final);

    std::vector<double> analytic;
    for (double* v : coordinates(back.grads, back.d_unary)) analytic.push_back(*v);
    auto names = coordinate_names(params, unary);
    for (auto& n : names) n = "trial" + std::to_string(trial) + "." + n;

    NetworkParams<long double> lp;
    for (const auto& s : params.steps)
      lp.steps.push_back({s.alpha.cast<long double>(), s.beta.cast<long double>(),
                          s.w_phi.cast<long double>(), s.w_psi.cast<long double>()});
    ScoreSet<long double> lu = unary.cast<long double>();
    const auto slots = coordinates(lp, lu);

    auto loss_at = [&](std::size_t i, long double delta) {
      long double* x = slots[i];
      const long double saved = *x;
      *x = saved + delta;
      const auto t = network_forward(cfg, lu, lp, inst.person_mask);
      const long double l = batch_loss(cfg, inst, t.back().outputs, opts.loss).loss;
      *x = saved;
      return l;
    };
    total.merge(compare_gradients(analytic, names, loss_at, opts));
  }
  return total;
}

}  // namespace mpnn

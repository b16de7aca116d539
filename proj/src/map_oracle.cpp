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

#include "mpnn/map_oracle.hpp"

#include <cmath>
#include <limits>

namespace mpnn {

LogLinearEnergies LogLinearEnergies::zeros(const ModelConfig& cfg) {
  const auto& ls = cfg.labels;
  LogLinearEnergies e;
  e.scene = Eigen::VectorXd::Zero(ls.num_scenes);
  e.action = Eigen::MatrixXd::Zero(cfg.max_persons, ls.num_actions);
  e.pose = Eigen::MatrixXd::Zero(cfg.max_persons, ls.num_poses);
  e.scene_action = Eigen::MatrixXd::Zero(ls.num_scenes, ls.num_actions);
  e.scene_action_pose = Eigen::MatrixXd::Zero(ls.num_scenes, ls.num_actions * ls.num_poses);
  e.pose_agreement = Eigen::VectorXd::Zero(ls.num_scenes);
  return e;
}

LogLinearEnergies LogLinearEnergies::from_unaries(const SceneInstance& inst,
                                                  const ModelConfig& cfg) {
  auto e = zeros(cfg);
  auto safe_log = [](double p) { return p > 0 ? std::log(p) : -1e300; };
  e.scene = inst.scene_unary.unaryExpr(safe_log);
  e.action = inst.action_unary.unaryExpr(safe_log);
  e.pose = inst.pose_unary.unaryExpr(safe_log);
  return e;
}

double labeling_score(const LogLinearEnergies& e, const Labeling& y, const PersonMask& mask,
                      const ModelConfig& cfg) {
  const int Z = cfg.labels.num_poses;
  const int g = y.scene;
  double s = e.scene(g);
  std::vector<int> real;
  for (int m = 0; m < static_cast<int>(mask.size()); ++m)
    if (mask[m]) real.push_back(m);
  for (int m : real) {
    const int h = y.actions[m];
    s += e.action(m, h) + e.scene_action(g, h);
    if (Z > 0) {
      const int z = y.poses[m];
      s += e.pose(m, z) + e.scene_action_pose(g, h * Z + z);
    }
  }
  if (Z > 0) {
    long agree = 0;
    for (std::size_t i = 0; i < real.size(); ++i)
      for (std::size_t j = i + 1; j < real.size(); ++j)
        agree += y.poses[real[i]] == y.poses[real[j]] ? 1 : 0;
    s += e.pose_agreement(g) * static_cast<double>(agree);
  }
  return s;
}

Labeling brute_force_map(const SceneInstance& inst, const LogLinearEnergies& e,
                         const ModelConfig& cfg) {
  const auto& ls = cfg.labels;
  std::vector<int> real;
  for (int m = 0; m < inst.num_slots(); ++m)
    if (inst.person_mask[m]) real.push_back(m);
  const int P = static_cast<int>(real.size());
  const bool poses = ls.poses_enabled();

  // Digits: scene, then one action per real person, then one pose per real person.
  std::vector<int> radix{ls.num_scenes};
  for (int i = 0; i < P; ++i) radix.push_back(ls.num_actions);
  if (poses)
    for (int i = 0; i < P; ++i) radix.push_back(ls.num_poses);
  double states = 1;
  for (int r : radix) states *= r;
  if (states > kMaxJointStates)
    throw ValidationError("joint state space too large for brute force: " +
                          std::to_string(static_cast<long long>(states)) + " states");

  Labeling cur;
  cur.actions.assign(inst.num_slots(), kNoLabel);
  cur.poses.assign(inst.num_slots(), kNoLabel);
  std::vector<int> digit(radix.size(), 0);
  auto decode = [&] {
    cur.scene = digit[0];
    for (int i = 0; i < P; ++i) {
      cur.actions[real[i]] = digit[1 + i];
      if (poses) cur.poses[real[i]] = digit[1 + P + i];
    }
  };

  Labeling best;
  double best_score = -std::numeric_limits<double>::infinity();
  // Odometer with the last digit fastest visits labelings in lexicographic order,
  // so keeping strict improvements selects the smallest maximizer.
  while (true) {
    decode();
    const double s = labeling_score(e, cur, inst.person_mask, cfg);
    if (s > best_score || best.scene == kNoLabel) {
      best_score = s;
      best = cur;
    }
    int pos = static_cast<int>(digit.size()) - 1;
    while (pos >= 0 && ++digit[pos] == radix[pos]) digit[pos--] = 0;
    if (pos < 0) break;
  }
  return best;
}

}  // namespace mpnn

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

#include <vector>

#include <Eigen/Core>

#include "mpnn/scene_data.hpp"

namespace mpnn {

/// Weights of a log-linear scene model. The score of a joint labeling
/// (g, h_1..h_M, z_1..z_M) over the real persons is
///
///   scene(g) + sum_m [ action(m,h_m) + pose(m,z_m) + scene_action(g,h_m)
///                      + scene_action_pose(g, h_m*|Z| + z_m) ]
///   + pose_agreement(g) * #{ m < m' : z_m == z_m' }
///
/// Pose terms are absent when |Z| = 0.
struct LogLinearEnergies {
  Eigen::VectorXd scene;              ///< |G|
  Eigen::MatrixXd action;             ///< M_max x |H|
  Eigen::MatrixXd pose;               ///< M_max x |Z|
  Eigen::MatrixXd scene_action;       ///< |G| x |H|
  Eigen::MatrixXd scene_action_pose;  ///< |G| x |H||Z|
  Eigen::VectorXd pose_agreement;     ///< |G|

  static LogLinearEnergies zeros(const ModelConfig& cfg);
  /// Log unary scores of the instance; all interaction terms zero.
  static LogLinearEnergies from_unaries(const SceneInstance& inst, const ModelConfig& cfg);
};

struct Labeling {
  int scene = kNoLabel;
  std::vector<int> actions;  ///< M_max entries, kNoLabel for dummy persons
  std::vector<int> poses;

  auto operator<=>(const Labeling&) const = default;
};

inline constexpr double kMaxJointStates = 1e6;

double labeling_score(const LogLinearEnergies& e, const Labeling& y, const PersonMask& mask,
                      const ModelConfig& cfg);

/// Exact argmax over all joint labelings of the real persons. Ties go to the
/// lexicographically smallest (scene, actions..., poses...) tuple.
/// Throws ValidationError if the joint state count exceeds kMaxJointStates.
Labeling brute_force_map(const SceneInstance& inst, const LogLinearEnergies& e,
                         const ModelConfig& cfg);

}  // namespace mpnn

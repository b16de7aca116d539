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
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "mpnn/config.hpp"
#include "mpnn/factor_layers.hpp"

namespace mpnn {

/// One frame: softmax-normalized unary scores, person mask and optional truth labels.
/// Rows of action_unary / pose_unary are persons; padded rows are zero and masked out.
struct SceneInstance {
  Eigen::VectorXd scene_unary;
  Eigen::MatrixXd action_unary;
  Eigen::MatrixXd pose_unary;
  PersonMask person_mask;
  int truth_scene = kNoLabel;
  std::vector<int> truth_actions;
  std::vector<int> truth_poses;

  int num_slots() const { return static_cast<int>(person_mask.size()); }
  int num_active() const;
  ScoreSet<double> unary() const { return {scene_unary, action_unary, pose_unary}; }

  bool operator==(const SceneInstance& o) const;
};

/// Pads a frame with M real persons up to cfg.max_persons dummy slots.
SceneInstance pad_instance(const SceneInstance& inst, const ModelConfig& cfg);

/// Throws ValidationError if the instance does not fit cfg or its scores are not distributions.
void check_instance(const SceneInstance& inst, const ModelConfig& cfg);

struct Dataset {
  LabelSpaces labels;
  int max_persons = 0;
  std::vector<SceneInstance> instances;

  std::uint64_t fingerprint() const;
  /// Throws ValidationError naming the mismatching dimension.
  void check_matches(const ModelConfig& cfg) const;
  bool operator==(const Dataset&) const = default;
};

Dataset empty_dataset(const ModelConfig& cfg);

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);
std::string format_dataset(const Dataset& ds);
Dataset parse_dataset(const std::string& text);

// Synthetic generator ------------------------------------------------------------

struct SynthSpec {
  int num_instances = 100;
  int persons_min = 1;
  int persons_max = 1;
  double noise_sigma = 1.0;
  double dependency_strength = 1.0;
  /// |G| x |H|, row g is the action distribution for scene g.
  Eigen::MatrixXd scene_action_table;
  /// Per-scene probability that every person shares one pose.
  Eigen::VectorXd pose_coherence;

  /// Peaked table: scene g prefers action g mod |H| with probability `peak`,
  /// coherence alternates between `coherence_hi` and `coherence_lo` across scenes.
  static SynthSpec standard(const ModelConfig& cfg, int num_instances, int persons_min,
                            int persons_max, double noise_sigma, double peak = 0.7,
                            double coherence_hi = 0.9, double coherence_lo = 0.1);
};

void validate_synth_spec(const SynthSpec& spec, const ModelConfig& cfg);

Dataset generate_synthetic(const SynthSpec& spec, const ModelConfig& cfg, std::uint64_t seed);

}  // namespace mpnn

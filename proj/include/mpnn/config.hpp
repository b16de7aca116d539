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
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mpnn {

/// Raised when a configuration, dataset or model file violates its contract.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a computation produces non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kNoLabel = -1;

struct LabelSpaces {
  int num_scenes = 0;
  int num_actions = 0;
  int num_poses = 0;  ///< 0 disables the pose chain (scene-action arity-2 model)

  bool poses_enabled() const { return num_poses > 0; }
  bool operator==(const LabelSpaces&) const = default;
};

enum class Activation { tanh, linear };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct ModelConfig {
  LabelSpaces labels;
  int max_persons = 1;
  int latent_factors_per_scene = 0;  ///< T, number of poses-all factors per scene label
  int num_steps = 1;                 ///< K
  Activation factor_activation = Activation::tanh;
  bool tie_psi_positions = false;
  double learning_rate = 0.05;
  int epochs_phase_a = 5;
  int epochs_phase_b = 5;
  std::uint64_t rng_seed = 0;

  bool operator==(const ModelConfig&) const = default;

  /// Hash of the dimensions that fix tensor shapes of data files (|G|,|H|,|Z|,M_max).
  std::uint64_t data_fingerprint() const;
};

/// Returns cfg unchanged, or throws ValidationError naming the first violated invariant.
ModelConfig validate_config(const ModelConfig& cfg);

/// Parses the flat `key=value` config format. Unknown keys are rejected.
ModelConfig parse_config(const std::string& text);
ModelConfig load_config(const std::filesystem::path& path);
std::string format_config(const ModelConfig& cfg);

// Factor-graph topology -------------------------------------------------------

enum class FactorKind { phi, psi };
enum class NodeKind { scene, action, pose };

struct FactorRef {
  FactorKind kind;
  int index;
  auto operator<=>(const FactorRef&) const = default;
};

struct NodeRef {
  NodeKind kind;
  int index;  ///< g for scenes, m*|H|+h for actions, m*|Z|+z for poses
  auto operator<=>(const NodeRef&) const = default;
};

struct Edge {
  FactorRef factor;
  NodeRef node;
  auto operator<=>(const Edge&) const = default;
};

/// Enumerates which factor neurons exist and what they connect to.
///
/// phi factors are indexed ((m*|G| + g)*|H| + h)*|Z| + z, or (m*|G| + g)*|H| + h
/// when poses are disabled. psi factors are indexed t*|G| + g.
struct Topology {
  LabelSpaces labels;
  int max_persons = 0;
  int latent = 0;

  int phi_factor_count = 0;
  int psi_factor_count = 0;

  // Second-pass connection sets, one list of factors per output node.
  std::vector<std::vector<int>> scene_phi;  // eps1_s
  std::vector<std::vector<int>> scene_psi;  // eps2_s
  std::vector<std::vector<int>> action_phi; // eps1_a
  std::vector<std::vector<int>> pose_phi;   // eps1_r
  std::vector<std::vector<int>> pose_psi;   // eps2_r

  int phi_index(int m, int g, int h, int z) const;
  int psi_index(int t, int g) const { return t * labels.num_scenes + g; }

  /// Variable -> factor edges, enumerated from the factor side.
  std::vector<Edge> first_pass_edges() const;
  /// Factor -> variable edges, enumerated from the connection sets.
  std::vector<Edge> second_pass_edges() const;
};

Topology build_topology(const ModelConfig& cfg);

}  // namespace mpnn

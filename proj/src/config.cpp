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

#include "mpnn/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mpnn/hash.hpp"

namespace mpnn {

std::string to_string(Activation a) {
  return a == Activation::tanh ? "tanh" : "linear";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "linear") return Activation::linear;
  throw ValidationError("activation must be 'tanh' or 'linear', got '" + s + "'");
}

std::uint64_t ModelConfig::data_fingerprint() const {
  Fnv1a h;
  h.update("MPNN-DIMS");
  h.update_u64(static_cast<std::uint64_t>(labels.num_scenes));
  h.update_u64(static_cast<std::uint64_t>(labels.num_actions));
  h.update_u64(static_cast<std::uint64_t>(labels.num_poses));
  h.update_u64(static_cast<std::uint64_t>(max_persons));
  return h.digest();
}

ModelConfig validate_config(const ModelConfig& cfg) {
  auto fail = [](const std::string& what) { throw ValidationError("invalid config: " + what); };
  if (cfg.labels.num_scenes < 2) fail("num_scenes >= 2");
  if (cfg.labels.num_actions < 1) fail("num_actions >= 1");
  if (cfg.labels.num_poses < 0) fail("num_poses >= 0");
  if (cfg.max_persons < 1) fail("max_persons >= 1");
  if (cfg.num_steps < 1) fail("num_steps >= 1");
  if (cfg.labels.poses_enabled() && cfg.latent_factors_per_scene < 1)
    fail("latent_T >= 1 when num_poses > 0");
  if (cfg.latent_factors_per_scene < 0) fail("latent_T >= 0");
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate))
    fail("learning_rate > 0");
  if (cfg.epochs_phase_a < 0) fail("epochs_phase_a >= 0");
  if (cfg.epochs_phase_b < 0) fail("epochs_phase_b >= 0");
  return cfg;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end)
    throw ValidationError("config key '" + key + "': cannot parse '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ValidationError("config key '" + key + "': expected boolean, got '" + v + "'");
}

}  // namespace

ModelConfig parse_config(const std::string& text) {
  ModelConfig cfg;
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!kv.emplace(key, value).second)
      throw ValidationError("config key '" + key + "' given twice");
  }

  for (const auto& [key, v] : kv) {
    if (key == "num_scenes") cfg.labels.num_scenes = parse_number<int>(key, v);
    else if (key == "num_actions") cfg.labels.num_actions = parse_number<int>(key, v);
    else if (key == "num_poses") cfg.labels.num_poses = parse_number<int>(key, v);
    else if (key == "max_persons") cfg.max_persons = parse_number<int>(key, v);
    else if (key == "latent_T") cfg.latent_factors_per_scene = parse_number<int>(key, v);
    else if (key == "num_steps") cfg.num_steps = parse_number<int>(key, v);
    else if (key == "activation") cfg.factor_activation = activation_from_string(v);
    else if (key == "tie_psi_positions") cfg.tie_psi_positions = parse_bool(key, v);
    else if (key == "learning_rate") cfg.learning_rate = parse_number<double>(key, v);
    else if (key == "epochs_phase_a") cfg.epochs_phase_a = parse_number<int>(key, v);
    else if (key == "epochs_phase_b") cfg.epochs_phase_b = parse_number<int>(key, v);
    else if (key == "seed") cfg.rng_seed = parse_number<std::uint64_t>(key, v);
    else throw ValidationError("unknown config key '" + key + "'");
  }
  return validate_config(cfg);
}

ModelConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const ModelConfig& cfg) {
  std::ostringstream out;
  char lr[32];
  std::snprintf(lr, sizeof lr, "%.17g", cfg.learning_rate);
  out << "num_scenes=" << cfg.labels.num_scenes << '\n'
      << "num_actions=" << cfg.labels.num_actions << '\n'
      << "num_poses=" << cfg.labels.num_poses << '\n'
      << "max_persons=" << cfg.max_persons << '\n'
      << "latent_T=" << cfg.latent_factors_per_scene << '\n'
      << "num_steps=" << cfg.num_steps << '\n'
      << "activation=" << to_string(cfg.factor_activation) << '\n'
      << "tie_psi_positions=" << (cfg.tie_psi_positions ? 1 : 0) << '\n'
      << "learning_rate=" << lr << '\n'
      << "epochs_phase_a=" << cfg.epochs_phase_a << '\n'
      << "epochs_phase_b=" << cfg.epochs_phase_b << '\n'
      << "seed=" << cfg.rng_seed << '\n';
  return out.str();
}

// Topology --------------------------------------------------------------------

int Topology::phi_index(int m, int g, int h, int z) const {
  const int G = labels.num_scenes, H = labels.num_actions, Z = labels.num_poses;
  const int base = (m * G + g) * H + h;
  return labels.poses_enabled() ? base * Z + z : base;
}

Topology build_topology(const ModelConfig& cfg) {
  validate_config(cfg);
  Topology topo;
  topo.labels = cfg.labels;
  topo.max_persons = cfg.max_persons;
  const int G = cfg.labels.num_scenes, H = cfg.labels.num_actions, Z = cfg.labels.num_poses;
  const int M = cfg.max_persons;
  const bool poses = cfg.labels.poses_enabled();
  topo.latent = poses ? cfg.latent_factors_per_scene : 0;
  const int T = topo.latent;
  const int Zeff = poses ? Z : 1;

  topo.phi_factor_count = G * H * Zeff * M;
  topo.psi_factor_count = T * G;

  topo.scene_phi.assign(G, {});
  topo.scene_psi.assign(G, {});
  topo.action_phi.assign(M * H, {});
  topo.pose_phi.assign(M * Z, {});
  topo.pose_psi.assign(M * Z, {});

  for (int m = 0; m < M; ++m)
    for (int g = 0; g < G; ++g)
      for (int h = 0; h < H; ++h)
        for (int z = 0; z < Zeff; ++z) {
          const int j = topo.phi_index(m, g, h, z);
          topo.scene_phi[g].push_back(j);
          topo.action_phi[m * H + h].push_back(j);
          if (poses) topo.pose_phi[m * Z + z].push_back(j);
        }
  for (int t = 0; t < T; ++t)
    for (int g = 0; g < G; ++g) {
      const int j = topo.psi_index(t, g);
      topo.scene_psi[g].push_back(j);
      for (int p = 0; p < M * Z; ++p) topo.pose_psi[p].push_back(j);
    }
  return topo;
}

std::vector<Edge> Topology::first_pass_edges() const {
  const int G = labels.num_scenes, H = labels.num_actions, Z = labels.num_poses;
  const bool poses = labels.poses_enabled();
  std::vector<Edge> edges;
  for (int m = 0; m < max_persons; ++m)
    for (int g = 0; g < G; ++g)
      for (int h = 0; h < H; ++h)
        for (int z = 0; z < (poses ? Z : 1); ++z) {
          const FactorRef f{FactorKind::phi, phi_index(m, g, h, z)};
          edges.push_back({f, {NodeKind::scene, g}});
          edges.push_back({f, {NodeKind::action, m * H + h}});
          if (poses) edges.push_back({f, {NodeKind::pose, m * Z + z}});
        }
  for (int t = 0; t < latent; ++t)
    for (int g = 0; g < G; ++g) {
      const FactorRef f{FactorKind::psi, psi_index(t, g)};
      edges.push_back({f, {NodeKind::scene, g}});
      for (int p = 0; p < max_persons * Z; ++p) edges.push_back({f, {NodeKind::pose, p}});
    }
  return edges;
}

std::vector<Edge> Topology::second_pass_edges() const {
  std::vector<Edge> edges;
  auto add = [&](const std::vector<std::vector<int>>& sets, FactorKind fk, NodeKind nk) {
    for (int v = 0; v < static_cast<int>(sets.size()); ++v)
      for (int j : sets[v]) edges.push_back({{fk, j}, {nk, v}});
  };
  add(scene_phi, FactorKind::phi, NodeKind::scene);
  add(scene_psi, FactorKind::psi, NodeKind::scene);
  add(action_phi, FactorKind::phi, NodeKind::action);
  add(pose_phi, FactorKind::phi, NodeKind::pose);
  add(pose_psi, FactorKind::psi, NodeKind::pose);
  return edges;
}

}  // namespace mpnn

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

#include "mpnn/scene_data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "mpnn/hash.hpp"
#include "mpnn/io_util.hpp"
#include "mpnn/softmax.hpp"

namespace mpnn {

int SceneInstance::num_active() const {
  int n = 0;
  for (bool b : person_mask) n += b ? 1 : 0;
  return n;
}

bool SceneInstance::operator==(const SceneInstance& o) const {
  return scene_unary == o.scene_unary && action_unary == o.action_unary &&
         pose_unary.rows() == o.pose_unary.rows() && pose_unary.cols() == o.pose_unary.cols() &&
         pose_unary == o.pose_unary && person_mask == o.person_mask &&
         truth_scene == o.truth_scene && truth_actions == o.truth_actions &&
         truth_poses == o.truth_poses;
}

SceneInstance pad_instance(const SceneInstance& inst, const ModelConfig& cfg) {
  const int M = inst.num_slots();
  const int M_max = cfg.max_persons;
  if (M > M_max)
    throw ValidationError("too many persons for configured M_max: " + std::to_string(M) + " > " +
                          std::to_string(M_max));
  if (inst.action_unary.rows() != M || inst.pose_unary.rows() != M)
    throw ValidationError("person rows do not match person mask length");
  SceneInstance out;
  out.scene_unary = inst.scene_unary;
  out.action_unary = Eigen::MatrixXd::Zero(M_max, inst.action_unary.cols());
  out.pose_unary = Eigen::MatrixXd::Zero(M_max, inst.pose_unary.cols());
  out.action_unary.topRows(M) = inst.action_unary;
  out.pose_unary.topRows(M) = inst.pose_unary;
  out.person_mask = inst.person_mask;
  out.person_mask.resize(M_max, false);
  out.truth_scene = inst.truth_scene;
  out.truth_actions = inst.truth_actions;
  out.truth_actions.resize(M_max, kNoLabel);
  out.truth_poses = inst.truth_poses;
  out.truth_poses.resize(M_max, kNoLabel);
  return out;
}

namespace {

constexpr double kProbTol = 1e-9;

bool is_distribution(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() == 0) return true;
  if ((v.array() < 0.0).any() || (v.array() > 1.0).any()) return false;
  return std::abs(v.sum() - 1.0) <= kProbTol;
}

}  // namespace

void check_instance(const SceneInstance& inst, const ModelConfig& cfg) {
  const auto& ls = cfg.labels;
  const int M = cfg.max_persons;
  if (inst.scene_unary.size() != ls.num_scenes)
    throw ValidationError("scene score length " + std::to_string(inst.scene_unary.size()) +
                          " != |G| " + std::to_string(ls.num_scenes));
  if (inst.num_slots() != M || inst.action_unary.rows() != M || inst.pose_unary.rows() != M)
    throw ValidationError("instance has " + std::to_string(inst.num_slots()) +
                          " person slots, config M_max is " + std::to_string(M));
  if (inst.action_unary.cols() != ls.num_actions || inst.pose_unary.cols() != ls.num_poses)
    throw ValidationError("person score widths do not match |H|/|Z|");
  if (static_cast<int>(inst.truth_actions.size()) != M ||
      static_cast<int>(inst.truth_poses.size()) != M)
    throw ValidationError("truth label vectors must have M_max entries");
  if (!is_distribution(inst.scene_unary))
    throw ValidationError("scene scores are not a probability vector");
  for (int m = 0; m < M; ++m) {
    if (inst.person_mask[m]) {
      if (!is_distribution(inst.action_unary.row(m).transpose()) ||
          !is_distribution(inst.pose_unary.row(m).transpose()))
        throw ValidationError("person " + std::to_string(m) +
                              " scores are not probability vectors");
    } else if (!inst.action_unary.row(m).isZero(0.0) || !inst.pose_unary.row(m).isZero(0.0)) {
      throw ValidationError("dummy person " + std::to_string(m) + " has non-zero scores");
    }
  }
  auto in_range = [](int label, int n) { return label == kNoLabel || (label >= 0 && label < n); };
  if (!in_range(inst.truth_scene, ls.num_scenes)) throw ValidationError("scene label out of range");
  for (int m = 0; m < M; ++m)
    if (!in_range(inst.truth_actions[m], ls.num_actions) ||
        !in_range(inst.truth_poses[m], std::max(ls.num_poses, 0)) ||
        (ls.num_poses == 0 && inst.truth_poses[m] != kNoLabel))
      throw ValidationError("person label out of range");
}

// Dataset ----------------------------------------------------------------------

std::uint64_t Dataset::fingerprint() const {
  ModelConfig cfg;
  cfg.labels = labels;
  cfg.max_persons = max_persons;
  return cfg.data_fingerprint();
}

void Dataset::check_matches(const ModelConfig& cfg) const {
  auto cmp = [](const char* what, int file_value, int cfg_value) {
    if (file_value != cfg_value)
      throw ValidationError(std::string("dataset ") + what + "=" + std::to_string(file_value) +
                            " does not match config " + what + "=" + std::to_string(cfg_value));
  };
  cmp("G", labels.num_scenes, cfg.labels.num_scenes);
  cmp("H", labels.num_actions, cfg.labels.num_actions);
  cmp("Z", labels.num_poses, cfg.labels.num_poses);
  cmp("M", max_persons, cfg.max_persons);
}

Dataset empty_dataset(const ModelConfig& cfg) {
  Dataset ds;
  ds.labels = cfg.labels;
  ds.max_persons = cfg.max_persons;
  return ds;
}

namespace {

void append_floats(std::string& out, const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  char buf[40];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, " %.17g", v(i));
    out += buf;
  }
}

class RecordReader {
 public:
  explicit RecordReader(const std::string& text) : in_(text) {}

  /// Reads the next line, split into tokens, and checks its leading tag.
  std::vector<std::string> expect(const char* tag, long record) {
    std::string line;
    if (!std::getline(in_, line))
      throw ValidationError("malformed record " + std::to_string(record) +
                            ": unexpected end of file, expected '" + tag + "' line");
    std::istringstream ls(line);
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (toks.empty() || toks[0] != tag)
      throw ValidationError("malformed record " + std::to_string(record) + ": expected '" + tag +
                            "' line, got '" + line + "'");
    return toks;
  }

  bool at_end() {
    std::string rest;
    while (std::getline(in_, rest))
      if (rest.find_first_not_of(" \t\r") != std::string::npos) return false;
    return true;
  }

 private:
  std::istringstream in_;
};

template <typename T>
T parse_token(const std::string& tok, long record) {
  T v{};
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size())
    throw ValidationError("malformed record " + std::to_string(record) + ": bad number '" + tok +
                          "'");
  return v;
}

Eigen::RowVectorXd parse_floats(const std::vector<std::string>& toks, int n, long record) {
  if (static_cast<int>(toks.size()) != n + 1)
    throw ValidationError("malformed record " + std::to_string(record) + ": '" + toks[0] +
                          "' line has " + std::to_string(toks.size() - 1) + " values, expected " +
                          std::to_string(n));
  Eigen::RowVectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = parse_token<double>(toks[i + 1], record);
  return v;
}

int parse_header_field(const std::string& tok, const char* key) {
  const std::string prefix = std::string(key) + "=";
  if (tok.rfind(prefix, 0) != 0)
    throw ValidationError("malformed dataset header: expected " + prefix + "<n>, got '" + tok + "'");
  return parse_token<int>(tok.substr(prefix.size()), -1);
}

}  // namespace

std::string format_dataset(const Dataset& ds) {
  std::string out;
  out += "MPDS1 G=" + std::to_string(ds.labels.num_scenes) +
         " H=" + std::to_string(ds.labels.num_actions) +
         " Z=" + std::to_string(ds.labels.num_poses) + " M=" + std::to_string(ds.max_persons) +
         " N=" + std::to_string(ds.instances.size()) + "\n";
  for (const auto& inst : ds.instances) {
    out += "I " + std::to_string(inst.truth_scene) + "\n";
    out += "S";
    append_floats(out, inst.scene_unary.transpose());
    out += "\n";
    for (int m = 0; m < inst.num_slots(); ++m) {
      out += "P " + std::to_string(m) + " " + (inst.person_mask[m] ? "1" : "0") + " " +
             std::to_string(inst.truth_actions[m]) + " " + std::to_string(inst.truth_poses[m]) +
             "\n";
      out += "A";
      append_floats(out, inst.action_unary.row(m));
      out += "\n";
      if (ds.labels.num_poses > 0) {
        out += "R";
        append_floats(out, inst.pose_unary.row(m));
        out += "\n";
      }
    }
  }
  return out;
}

Dataset parse_dataset(const std::string& text) {
  RecordReader rd(text);
  const auto head = rd.expect("MPDS1", -1);
  if (head.size() != 6) throw ValidationError("malformed dataset header");
  Dataset ds;
  ds.labels.num_scenes = parse_header_field(head[1], "G");
  ds.labels.num_actions = parse_header_field(head[2], "H");
  ds.labels.num_poses = parse_header_field(head[3], "Z");
  ds.max_persons = parse_header_field(head[4], "M");
  const long n = parse_header_field(head[5], "N");
  if (ds.labels.num_scenes < 1 || ds.labels.num_actions < 1 || ds.labels.num_poses < 0 ||
      ds.max_persons < 1 || n < 0)
    throw ValidationError("malformed dataset header: invalid dimensions");
  const int G = ds.labels.num_scenes, H = ds.labels.num_actions, Z = ds.labels.num_poses;
  const int M = ds.max_persons;

  ds.instances.reserve(n);
  for (long i = 0; i < n; ++i) {
    SceneInstance inst;
    const auto itoks = rd.expect("I", i);
    if (itoks.size() != 2) throw ValidationError("malformed record " + std::to_string(i));
    inst.truth_scene = parse_token<int>(itoks[1], i);
    inst.scene_unary = parse_floats(rd.expect("S", i), G, i).transpose();
    inst.action_unary = Eigen::MatrixXd::Zero(M, H);
    inst.pose_unary = Eigen::MatrixXd::Zero(M, Z);
    inst.person_mask.assign(M, false);
    inst.truth_actions.assign(M, kNoLabel);
    inst.truth_poses.assign(M, kNoLabel);
    for (int m = 0; m < M; ++m) {
      const auto p = rd.expect("P", i);
      if (p.size() != 5 || parse_token<int>(p[1], i) != m)
        throw ValidationError("malformed record " + std::to_string(i) + ": bad person line");
      const int mask = parse_token<int>(p[2], i);
      if (mask != 0 && mask != 1)
        throw ValidationError("malformed record " + std::to_string(i) + ": mask must be 0/1");
      inst.person_mask[m] = mask == 1;
      inst.truth_actions[m] = parse_token<int>(p[3], i);
      inst.truth_poses[m] = parse_token<int>(p[4], i);
      inst.action_unary.row(m) = parse_floats(rd.expect("A", i), H, i);
      if (Z > 0) inst.pose_unary.row(m) = parse_floats(rd.expect("R", i), Z, i);
    }
    ds.instances.push_back(std::move(inst));
  }
  if (!rd.at_end()) throw ValidationError("trailing data after " + std::to_string(n) + " records");
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  write_file_atomic(path, format_dataset(ds));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path));
}

// Synthetic generator ------------------------------------------------------------

SynthSpec SynthSpec::standard(const ModelConfig& cfg, int num_instances, int persons_min,
                              int persons_max, double noise_sigma, double peak,
                              double coherence_hi, double coherence_lo) {
  const int G = cfg.labels.num_scenes, H = cfg.labels.num_actions;
  SynthSpec s;
  s.num_instances = num_instances;
  s.persons_min = persons_min;
  s.persons_max = persons_max;
  s.noise_sigma = noise_sigma;
  s.dependency_strength = 1.0;
  s.scene_action_table = Eigen::MatrixXd::Zero(G, H);
  for (int g = 0; g < G; ++g) {
    if (H == 1) {
      s.scene_action_table(g, 0) = 1.0;
      continue;
    }
    s.scene_action_table.row(g).setConstant((1.0 - peak) / (H - 1));
    s.scene_action_table(g, g % H) = peak;
  }
  s.pose_coherence = Eigen::VectorXd(G);
  for (int g = 0; g < G; ++g) s.pose_coherence(g) = g % 2 == 0 ? coherence_hi : coherence_lo;
  return s;
}

void validate_synth_spec(const SynthSpec& spec, const ModelConfig& cfg) {
  const int G = cfg.labels.num_scenes, H = cfg.labels.num_actions;
  if (spec.num_instances < 0) throw ValidationError("num_instances must be >= 0");
  if (spec.persons_min < 0 || spec.persons_min > spec.persons_max)
    throw ValidationError("persons range must satisfy 0 <= min <= max");
  if (spec.persons_max > cfg.max_persons)
    throw ValidationError("persons_range max " + std::to_string(spec.persons_max) +
                          " exceeds M_max " + std::to_string(cfg.max_persons));
  if (!(spec.noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be >= 0");
  if (!(spec.dependency_strength >= 0.0 && spec.dependency_strength <= 1.0))
    throw ValidationError("dependency_strength must lie in [0,1]");
  if (spec.scene_action_table.rows() != G || spec.scene_action_table.cols() != H)
    throw ValidationError("scene_action_table must be |G| x |H|");
  for (int g = 0; g < G; ++g)
    if (!is_distribution(spec.scene_action_table.row(g).transpose()))
      throw ValidationError("scene_action_table row " + std::to_string(g) + " is not normalized");
  if (spec.pose_coherence.size() != G || (spec.pose_coherence.array() < 0.0).any() ||
      (spec.pose_coherence.array() > 1.0).any())
    throw ValidationError("pose_coherence must hold |G| probabilities");
}

namespace {

Eigen::VectorXd noisy_unary(int n, int truth, const SynthSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::VectorXd logits(n);
  for (int i = 0; i < n; ++i)
    logits(i) = (i == truth ? spec.dependency_strength : 0.0) + spec.noise_sigma * noise(rng);
  return softmax(logits);
}

int sample_categorical(const Eigen::Ref<const Eigen::RowVectorXd>& p, std::mt19937_64& rng) {
  std::vector<double> w(p.begin(), p.end());
  std::discrete_distribution<int> d(w.begin(), w.end());
  return d(rng);
}

}  // namespace

Dataset generate_synthetic(const SynthSpec& spec, const ModelConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  validate_synth_spec(spec, cfg);
  const int G = cfg.labels.num_scenes, H = cfg.labels.num_actions, Z = cfg.labels.num_poses;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> scene_dist(0, G - 1);
  std::uniform_int_distribution<int> person_dist(spec.persons_min, spec.persons_max);
  std::uniform_int_distribution<int> pose_dist(0, std::max(Z - 1, 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Dataset ds = empty_dataset(cfg);
  ds.instances.reserve(spec.num_instances);
  for (int i = 0; i < spec.num_instances; ++i) {
    SceneInstance inst;
    inst.truth_scene = scene_dist(rng);
    const int g = inst.truth_scene;
    const int M = person_dist(rng);
    inst.person_mask.assign(M, true);
    inst.truth_actions.assign(M, kNoLabel);
    inst.truth_poses.assign(M, kNoLabel);
    for (int m = 0; m < M; ++m)
      inst.truth_actions[m] = sample_categorical(spec.scene_action_table.row(g), rng);
    if (Z > 0) {
      const bool coherent = unit(rng) < spec.pose_coherence(g);
      const int shared = pose_dist(rng);
      for (int m = 0; m < M; ++m) inst.truth_poses[m] = coherent ? shared : pose_dist(rng);
    }
    inst.scene_unary = noisy_unary(G, g, spec, rng);
    inst.action_unary = Eigen::MatrixXd::Zero(M, H);
    inst.pose_unary = Eigen::MatrixXd::Zero(M, Z);
    for (int m = 0; m < M; ++m) {
      inst.action_unary.row(m) = noisy_unary(H, inst.truth_actions[m], spec, rng).transpose();
      if (Z > 0) inst.pose_unary.row(m) = noisy_unary(Z, inst.truth_poses[m], spec, rng).transpose();
    }
    ds.instances.push_back(pad_instance(inst, cfg));
  }
  return ds;
}

}  // namespace mpnn

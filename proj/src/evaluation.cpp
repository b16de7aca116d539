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

#include "mpnn/evaluation.hpp"

#include <cstdio>

#include "mpnn/io_util.hpp"

namespace mpnn {

double accuracy(const ConfusionMatrix& c) {
  const long total = c.sum();
  return total ? static_cast<double>(c.trace()) / static_cast<double>(total) : 0.0;
}

EvalReport evaluate(const Dataset& dataset, const NetworkParams<double>& params,
                    const ModelConfig& cfg) {
  dataset.check_matches(cfg);
  const auto& ls = cfg.labels;
  EvalReport r;
  r.scene_confusion = ConfusionMatrix::Zero(ls.num_scenes, ls.num_scenes);
  r.action_confusion = ConfusionMatrix::Zero(ls.num_actions, ls.num_actions);
  r.pose_confusion = ConfusionMatrix::Zero(ls.num_poses, ls.num_poses);
  std::vector<ConfusionMatrix> per_step(params.num_steps(),
                                        ConfusionMatrix::Zero(ls.num_scenes, ls.num_scenes));

  for (const auto& inst : dataset.instances) {
    const auto tapes = network_forward(cfg, inst.unary(), params, inst.person_mask);
    const ScoreSet<double>& out = tapes.empty() ? inst.unary() : tapes.back().outputs;
    if (inst.truth_scene != kNoLabel) {
      r.scene_confusion(inst.truth_scene, argmax(out.scene)) += 1;
      for (int k = 0; k < params.num_steps(); ++k)
        per_step[k](inst.truth_scene, argmax(tapes[k].outputs.scene)) += 1;
    }
    for (int m = 0; m < cfg.max_persons; ++m) {
      if (!inst.person_mask[m]) continue;
      if (inst.truth_actions[m] != kNoLabel)
        r.action_confusion(inst.truth_actions[m], argmax(out.action.row(m).transpose())) += 1;
      if (ls.poses_enabled() && inst.truth_poses[m] != kNoLabel)
        r.pose_confusion(inst.truth_poses[m], argmax(out.pose.row(m).transpose())) += 1;
    }
  }
  r.scene_accuracy = accuracy(r.scene_confusion);
  r.action_accuracy = accuracy(r.action_confusion);
  r.pose_accuracy = accuracy(r.pose_confusion);
  for (const auto& c : per_step) r.per_step_scene_accuracy.push_back(accuracy(c));
  return r;
}

double unary_scene_accuracy(const Dataset& dataset) {
  long hit = 0, total = 0;
  for (const auto& inst : dataset.instances) {
    if (inst.truth_scene == kNoLabel) continue;
    ++total;
    hit += argmax(inst.scene_unary) == inst.truth_scene ? 1 : 0;
  }
  return total ? static_cast<double>(hit) / total : 0.0;
}

std::string format_report(const EvalReport& r) {
  std::string out;
  char buf[128];
  out += "step\tacc_scene\n";
  for (std::size_t k = 0; k < r.per_step_scene_accuracy.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu\t%.4f\n", k + 1, r.per_step_scene_accuracy[k]);
    out += buf;
  }
  out += "acc_scene\tacc_action\tacc_pose\n";
  std::snprintf(buf, sizeof buf, "%.4f\t%.4f\t%.4f\n", r.scene_accuracy, r.action_accuracy,
                r.pose_accuracy);
  out += buf;
  auto block = [&](const char* name, const ConfusionMatrix& c) {
    out += std::string("confusion ") + name + " " + std::to_string(c.rows()) + "\n";
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      for (Eigen::Index j = 0; j < c.cols(); ++j) {
        if (j) out += '\t';
        out += std::to_string(c(i, j));
      }
      out += '\n';
    }
  };
  block("scene", r.scene_confusion);
  block("action", r.action_confusion);
  block("pose", r.pose_confusion);
  return out;
}

// Features -----------------------------------------------------------------------

int feature_length(const ModelConfig& cfg, FeatureLayout layout) {
  const auto& ls = cfg.labels;
  const int scores = ls.num_scenes + ls.num_actions + ls.num_poses;
  const int factors = psi_rows(cfg) + template_rows(ls);
  switch (layout) {
    case FeatureLayout::scores: return scores;
    case FeatureLayout::factors: return factors;
    case FeatureLayout::both: return scores + factors;
  }
  return 0;
}

FeatureVector extract_features(const SceneInstance& inst, const NetworkParams<double>& params,
                               const ModelConfig& cfg, int step_k, FeatureLayout layout) {
  if (step_k < 1 || step_k > params.num_steps())
    throw ValidationError("feature step must lie in 1.." + std::to_string(params.num_steps()));
  const auto& ls = cfg.labels;
  NetworkParams<double> prefix;
  prefix.steps.assign(params.steps.begin(), params.steps.begin() + step_k);
  const auto tapes = network_forward(cfg, inst.unary(), prefix, inst.person_mask);
  const auto& tape = tapes.back();

  const int active = inst.num_active();
  Eigen::RowVectorXd action_mean = Eigen::RowVectorXd::Zero(ls.num_actions);
  Eigen::RowVectorXd pose_mean = Eigen::RowVectorXd::Zero(ls.num_poses);
  Eigen::RowVectorXd phi_mean = Eigen::RowVectorXd::Zero(template_rows(ls));
  for (int m = 0; m < cfg.max_persons; ++m) {
    if (!inst.person_mask[m]) continue;
    action_mean += tape.outputs.action.row(m);
    pose_mean += tape.outputs.pose.row(m);
    phi_mean += tape.acts.phi_out.row(m);
  }
  if (active > 0) {
    action_mean /= active;
    pose_mean /= active;
    phi_mean /= active;
  }

  FeatureVector fv;
  fv.step = step_k;
  fv.label = inst.truth_scene;
  fv.values.resize(feature_length(cfg, layout));
  Eigen::Index at = 0;
  auto put = [&](const auto& v) {
    fv.values.segment(at, v.size()) = v;
    at += v.size();
  };
  if (layout != FeatureLayout::factors) {
    put(tape.outputs.scene);
    put(action_mean.transpose());
    put(pose_mean.transpose());
  }
  if (layout != FeatureLayout::scores) {
    if (ls.poses_enabled()) put(tape.acts.psi_out);
    put(phi_mean.transpose());
  }
  return fv;
}

std::vector<FeatureVector> extract_dataset_features(const Dataset& ds,
                                                    const NetworkParams<double>& params,
                                                    const ModelConfig& cfg, int step_k,
                                                    FeatureLayout layout) {
  ds.check_matches(cfg);
  std::vector<FeatureVector> out;
  out.reserve(ds.instances.size());
  for (const auto& inst : ds.instances)
    out.push_back(extract_features(inst, params, cfg, step_k, layout));
  return out;
}

std::string format_features(const std::vector<FeatureVector>& fv) {
  const long dim = fv.empty() ? 0 : fv.front().values.size();
  const int step = fv.empty() ? 0 : fv.front().step;
  std::string out = "MPFV1 D=" + std::to_string(dim) + " N=" + std::to_string(fv.size()) +
                    " STEP=" + std::to_string(step) + "\n";
  char buf[40];
  for (const auto& f : fv) {
    out += std::to_string(f.label);
    for (Eigen::Index i = 0; i < f.values.size(); ++i) {
      std::snprintf(buf, sizeof buf, " %.17g", f.values(i));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void save_features(const std::vector<FeatureVector>& fv, const std::filesystem::path& path) {
  write_file_atomic(path, format_features(fv));
}

}  // namespace mpnn

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

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mpnn/network.hpp"
#include "mpnn/scene_data.hpp"

namespace mpnn {

using ConfusionMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

/// Accuracy of argmax predictions; confusion rows are truth, columns predictions.
struct EvalReport {
  double scene_accuracy = 0, action_accuracy = 0, pose_accuracy = 0;
  ConfusionMatrix scene_confusion, action_confusion, pose_confusion;
  std::vector<double> per_step_scene_accuracy;  ///< after step 1, ..., K
};

double accuracy(const ConfusionMatrix& c);

/// Evaluates the refined scores of every step; masked persons and missing labels are skipped.
EvalReport evaluate(const Dataset& dataset, const NetworkParams<double>& params,
                    const ModelConfig& cfg);

/// Argmax accuracy of the unary scene scores alone.
double unary_scene_accuracy(const Dataset& dataset);

/// Training-log TSV dialect followed by one confusion block per head.
std::string format_report(const EvalReport& r);

// Features -----------------------------------------------------------------------

enum class FeatureLayout {
  scores,   ///< refined scene scores + person-pooled action and pose scores
  factors,  ///< psi outputs + person-pooled phi outputs
  both,
};

struct FeatureVector {
  Eigen::VectorXd values;
  int step = 0;
  int label = kNoLabel;
};

int feature_length(const ModelConfig& cfg, FeatureLayout layout);

/// Features of step_k (1-based) of the network. Person blocks are means over real persons.
FeatureVector extract_features(const SceneInstance& inst, const NetworkParams<double>& params,
                               const ModelConfig& cfg, int step_k,
                               FeatureLayout layout = FeatureLayout::both);

std::vector<FeatureVector> extract_dataset_features(const Dataset& ds,
                                                    const NetworkParams<double>& params,
                                                    const ModelConfig& cfg, int step_k,
                                                    FeatureLayout layout = FeatureLayout::both);

/// `MPFV1 D=<dim> N=<count> STEP=<k>` followed by one `label f1 ... fD` line per instance.
std::string format_features(const std::vector<FeatureVector>& fv);
void save_features(const std::vector<FeatureVector>& fv, const std::filesystem::path& path);

}  // namespace mpnn

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

#include <span>
#include <vector>

#include <Eigen/Core>

#include "mpnn/evaluation.hpp"

namespace mpnn {

/// Multinomial logistic regression on standardized features.
struct LinearClassifier {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;    ///< 1/stddev per feature (1 for constant features)
  Eigen::MatrixXd weights;  ///< classes x (features + 1); last column is the bias

  int num_classes() const { return static_cast<int>(weights.rows()); }
  Eigen::VectorXd scores(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// Full-batch accelerated gradient descent on mean cross-entropy + l2/2 * ||W||^2
/// (bias included). Throws ValidationError if fewer than two classes occur in labels.
LinearClassifier train_linear_classifier(const Eigen::MatrixXd& features,
                                         std::span<const int> labels, int num_classes,
                                         double l2, int epochs);

int classify(const LinearClassifier& clf, const Eigen::Ref<const Eigen::VectorXd>& x);

double classifier_accuracy(const LinearClassifier& clf, const Eigen::MatrixXd& features,
                           std::span<const int> labels);

/// Stacks feature vectors as rows and collects their labels.
Eigen::MatrixXd feature_matrix(const std::vector<FeatureVector>& fv);
std::vector<int> feature_labels(const std::vector<FeatureVector>& fv);

}  // namespace mpnn

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

#include "mpnn/linear_classifier.hpp"

#include <cmath>
#include <set>

#include "mpnn/softmax.hpp"

namespace mpnn {

Eigen::VectorXd LinearClassifier::scores(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::Index d = mean.size();
  Eigen::VectorXd z = (x - mean).cwiseProduct(scale);
  return weights.leftCols(d) * z + weights.col(d);
}

int classify(const LinearClassifier& clf, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return argmax(clf.scores(x));
}

double classifier_accuracy(const LinearClassifier& clf, const Eigen::MatrixXd& features,
                           std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  long hit = 0;
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    hit += classify(clf, features.row(i).transpose()) == labels[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

LinearClassifier train_linear_classifier(const Eigen::MatrixXd& features,
                                         std::span<const int> labels, int num_classes,
                                         double l2, int epochs) {
  const Eigen::Index n = features.rows(), d = features.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw ValidationError("feature/label count mismatch");
  if (!(l2 >= 0.0)) throw ValidationError("l2 must be >= 0");
  std::set<int> seen;
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw ValidationError("label out of range");
    seen.insert(y);
  }
  if (seen.size() < 2) throw ValidationError("degenerate training set: fewer than two classes");

  LinearClassifier clf;
  clf.mean = features.colwise().mean().transpose();
  Eigen::MatrixXd x(n, d + 1);
  x.leftCols(d) = features.rowwise() - clf.mean.transpose();
  clf.scale = Eigen::VectorXd::Ones(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = std::sqrt(x.col(j).squaredNorm() / static_cast<double>(n));
    if (sd > 1e-12) clf.scale(j) = 1.0 / sd;
  }
  x.leftCols(d) = x.leftCols(d) * clf.scale.asDiagonal();
  x.col(d).setOnes();

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, num_classes);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, labels[i]) = 1.0;

  // Lipschitz constant of the mean cross-entropy gradient is at most lambda_max(X^T X / n) / 2.
  const Eigen::MatrixXd gram = x.transpose() * x / static_cast<double>(n);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(d + 1);
  double lambda = 1.0;
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd w = gram * v;
    lambda = w.norm();
    if (lambda == 0.0) break;
    v = w / lambda;
  }
  const double step = 1.0 / (0.5 * lambda * 1.01 + l2);

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(num_classes, d + 1);
  Eigen::MatrixXd w_prev = w;
  for (int e = 0; e < epochs; ++e) {
    // Nesterov look-ahead.
    const double mom = static_cast<double>(e) / (e + 3.0);
    const Eigen::MatrixXd y = w + mom * (w - w_prev);
    Eigen::MatrixXd logits = x * y.transpose();
    for (Eigen::Index i = 0; i < n; ++i)
      logits.row(i) = softmax(logits.row(i).transpose()).transpose();
    const Eigen::MatrixXd grad =
        (logits - onehot).transpose() * x / static_cast<double>(n) + l2 * y;
    w_prev = w;
    w = y - step * grad;
  }
  clf.weights = w;
  return clf;
}

Eigen::MatrixXd feature_matrix(const std::vector<FeatureVector>& fv) {
  if (fv.empty()) return {};
  Eigen::MatrixXd m(fv.size(), fv.front().values.size());
  for (std::size_t i = 0; i < fv.size(); ++i) m.row(i) = fv[i].values.transpose();
  return m;
}

std::vector<int> feature_labels(const std::vector<FeatureVector>& fv) {
  std::vector<int> out;
  out.reserve(fv.size());
  for (const auto& f : fv) out.push_back(f.label);
  return out;
}

}  // namespace mpnn

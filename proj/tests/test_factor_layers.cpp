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

#include <cmath>
#include <numeric>
#include <random>

#include <doctest.h>

#include "mpnn/factor_layers.hpp"
#include "test_util.hpp"

using namespace mpnn;

namespace {

ScoreSet<double> random_inputs(const ModelConfig& cfg, std::mt19937_64& rng,
                               const PersonMask& mask) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto s = ScoreSet<double>::zeros(cfg);
  for (Eigen::Index i = 0; i < s.scene.size(); ++i) s.scene(i) = u(rng);
  for (int m = 0; m < cfg.max_persons; ++m) {
    if (!mask[m]) continue;
    for (Eigen::Index h = 0; h < s.action.cols(); ++h) s.action(m, h) = u(rng);
    for (Eigen::Index z = 0; z < s.pose.cols(); ++z) s.pose(m, z) = u(rng);
  }
  return s;
}

Matrix<double> random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix<double> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Linear probe L = <c_phi, phi_out> + <c_psi, psi_out> used for the layer-level checks.
struct Probe {
  Matrix<double> c_phi;
  Vector<double> c_psi;
  double operator()(const FactorActivations<double>& a) const {
    double l = (c_phi.array() * a.phi_out.array()).sum();
    if (c_psi.size()) l += c_psi.dot(a.psi_out);
    return l;
  }
};

}  // namespace

TEST_CASE("phi_forward values") {
  const ModelConfig cfg = test::make_config(2, 2, 2, 2, 1, 1);
  const PersonMask mask{true, false};
  auto in = ScoreSet<double>::zeros(cfg);
  in.scene << 0.2, 0.8;
  in.action.row(0) << 0.3, 0.7;
  in.pose.row(0) << 0.5, 0.5;
  in.action.row(1) << 0.9, 0.1;  // masked slot carries junk on purpose
  in.pose.row(1) << 0.9, 0.1;

  auto p = StepParams<double>::zeros(cfg);
  FactorActivations<double> acts;
  phi_forward(cfg, in, p.alpha, mask, acts);
  CHECK(acts.phi_out.isZero(0.0));

  p.alpha.setOnes();
  phi_forward(cfg, in, p.alpha, mask, acts);
  // g=0, h=0, z=0: tanh(0.2 + 0.3 + 0.5)
  CHECK(acts.phi_out(0, template_row(cfg.labels, 0, 0, 0)) ==
        doctest::Approx(0.761594).epsilon(1e-6));
  CHECK(acts.phi_out.row(1).isZero(0.0));
  CHECK(acts.phi_pre.row(1).isZero(0.0));
}

TEST_CASE("psi_forward values") {
  const ModelConfig cfg = test::make_config(2, 1, 3, 3, 2, 1);
  std::mt19937_64 rng(8);
  const PersonMask mask{true, true, false};
  const auto in = random_inputs(cfg, rng, mask);

  auto p = StepParams<double>::zeros(cfg);
  FactorActivations<double> acts;
  psi_forward(cfg, in, p.beta, mask, acts);
  CHECK(acts.psi_out.isZero(0.0));

  SUBCASE("masked slots contribute nothing") {
    p.beta = random_matrix(p.beta.rows(), p.beta.cols(), rng);
    psi_forward(cfg, in, p.beta, mask, acts);
    const Vector<double> before = acts.psi_pre;

    ScoreSet<double> junk = in;
    junk.pose.row(2).setConstant(0.7);
    psi_forward(cfg, junk, p.beta, mask, acts);
    CHECK((acts.psi_pre.array() == before.array()).all());

    // Adding a masked slot (larger M_max) leaves psi_pre unchanged.
    ModelConfig wider = cfg;
    wider.max_persons = 4;
    auto wp = StepParams<double>::zeros(wider);
    wp.beta.leftCols(p.beta.cols()) = p.beta;
    wp.beta.rightCols(3).setConstant(5.0);
    auto win = ScoreSet<double>::zeros(wider);
    win.scene = in.scene;
    win.pose.topRows(3) = in.pose;
    FactorActivations<double> wa;
    psi_forward(wider, win, wp.beta, PersonMask{true, true, false, false}, wa);
    CHECK((wa.psi_pre.array() == before.array()).all());
  }

  SUBCASE("tied positions equal untied with replicated templates") {
    ModelConfig tied = cfg;
    tied.tie_psi_positions = true;
    auto tp = StepParams<double>::zeros(tied);
    tp.beta = random_matrix(tp.beta.rows(), tp.beta.cols(), rng);
    // Identical pose rows for all active persons.
    ScoreSet<double> same = in;
    same.pose.row(1) = same.pose.row(0);

    p.beta.col(0) = tp.beta.col(0);
    for (int m = 0; m < cfg.max_persons; ++m)
      p.beta.middleCols(1 + m * 3, 3) = tp.beta.rightCols(3);

    FactorActivations<double> a_tied, a_untied;
    psi_forward(tied, same, tp.beta, mask, a_tied);
    psi_forward(cfg, same, p.beta, mask, a_untied);
    CHECK(a_tied.psi_pre.isApprox(a_untied.psi_pre, 1e-14));
  }

  SUBCASE("disabled pose chain is a structural error") {
    const ModelConfig a2 = test::make_config(2, 2, 0, 1, 0, 1);
    auto z = ScoreSet<double>::zeros(a2);
    Matrix<double> beta;
    CHECK_THROWS_AS(psi_forward(a2, z, beta, PersonMask{true}, acts), ValidationError);
  }
}

TEST_CASE("template sharing: perturbing alpha moves every active person's factor") {
  const ModelConfig cfg = test::make_config(2, 2, 2, 3, 1, 1, Activation::linear);
  std::mt19937_64 rng(21);
  const PersonMask mask{true, false, true};
  const auto in = random_inputs(cfg, rng, mask);
  Matrix<double> alpha = random_matrix(template_rows(cfg.labels), 3, rng);

  FactorActivations<double> base, moved;
  phi_forward(cfg, in, alpha, mask, base);
  const int row = template_row(cfg.labels, 1, 0, 1);
  const Eigen::Vector3d delta(0.25, -0.5, 0.125);
  Matrix<double> alpha2 = alpha;
  alpha2.row(row) += delta.transpose();
  phi_forward(cfg, in, alpha2, mask, moved);

  const Matrix<double> diff = moved.phi_pre - base.phi_pre;
  for (int m = 0; m < cfg.max_persons; ++m)
    for (int j = 0; j < diff.cols(); ++j) {
      double expect = 0;
      if (mask[m] && j == row)
        expect = delta.dot(Eigen::Vector3d(in.scene(1), in.action(m, 0), in.pose(m, 1)));
      CHECK(diff(m, j) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("phi is equivariant under person permutation") {
  const ModelConfig cfg = test::make_config(3, 2, 2, 4, 1, 1, Activation::linear);
  std::mt19937_64 rng(4);
  const PersonMask mask{true, true, true, false};
  const auto in = random_inputs(cfg, rng, mask);
  Matrix<double> alpha = Matrix<double>::Constant(template_rows(cfg.labels), 3, 0.3);

  const std::vector<int> perm{2, 0, 1, 3};
  ScoreSet<double> pin = in;
  for (int m = 0; m < 4; ++m) {
    pin.action.row(m) = in.action.row(perm[m]);
    pin.pose.row(m) = in.pose.row(perm[m]);
  }
  FactorActivations<double> a, b;
  phi_forward(cfg, in, alpha, mask, a);
  phi_forward(cfg, pin, alpha, mask, b);
  for (int m = 0; m < 4; ++m) CHECK(b.phi_out.row(m).isApprox(a.phi_out.row(perm[m])));
}

TEST_CASE("factor layer gradients match central differences") {
  std::mt19937_64 rng(99);
  const double eps = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const int G = 2 + trial % 2, H = 1 + trial % 3, Z = trial % 4 == 3 ? 0 : 1 + trial % 3;
    const int M = 1 + trial % 3, T = 1 + trial % 2;
    const ModelConfig cfg = test::make_config(G, H, Z, M, T, 1, Activation::tanh, trial % 5 == 0);
    PersonMask mask(M, true);
    if (M > 1) mask[trial % M] = false;
    const auto in = random_inputs(cfg, rng, mask);
    auto p = StepParams<double>::zeros(cfg);
    p.alpha = random_matrix(p.alpha.rows(), p.alpha.cols(), rng);
    p.beta = random_matrix(p.beta.rows(), p.beta.cols(), rng);

    Probe probe{random_matrix(M, template_rows(cfg.labels), rng),
                random_matrix(psi_rows(cfg), 1, rng).col(0)};
    auto loss = [&](const StepParams<double>& q, const ScoreSet<double>& x) {
      FactorActivations<double> a;
      phi_forward(cfg, x, q.alpha, mask, a);
      if (cfg.labels.poses_enabled()) psi_forward(cfg, x, q.beta, mask, a);
      return probe(a);
    };

    FactorActivations<double> acts;
    phi_forward(cfg, in, p.alpha, mask, acts);
    if (cfg.labels.poses_enabled()) psi_forward(cfg, in, p.beta, mask, acts);
    auto grad = StepParams<double>::zeros(cfg);
    auto d_in = ScoreSet<double>::zeros(cfg);
    phi_backward(cfg, in, p.alpha, mask, acts, probe.c_phi, grad.alpha, d_in);
    if (cfg.labels.poses_enabled())
      psi_backward(cfg, in, p.beta, mask, acts, probe.c_psi, grad.beta, d_in);

    auto check_block = [&](Matrix<double>& block, const Matrix<double>& g) {
      for (Eigen::Index i = 0; i < block.size(); ++i) {
        const double saved = block.data()[i];
        block.data()[i] = saved + eps;
        const double up = loss(p, in);
        block.data()[i] = saved - eps;
        const double down = loss(p, in);
        block.data()[i] = saved;
        const double numeric = (up - down) / (2 * eps);
        const double denom = std::max({std::abs(numeric), std::abs(g.data()[i]), 1e-8});
        CHECK(std::abs(numeric - g.data()[i]) / denom < 1e-4);
      }
    };
    check_block(p.alpha, grad.alpha);
    check_block(p.beta, grad.beta);

    ScoreSet<double> x = in;
    auto check_input = [&](Matrix<double>& block, const Matrix<double>& g) {
      for (Eigen::Index i = 0; i < block.size(); ++i) {
        const double saved = block.data()[i];
        block.data()[i] = saved + eps;
        const double up = loss(p, x);
        block.data()[i] = saved - eps;
        const double down = loss(p, x);
        block.data()[i] = saved;
        const double numeric = (up - down) / (2 * eps);
        const double denom = std::max({std::abs(numeric), std::abs(g.data()[i]), 1e-8});
        CHECK(std::abs(numeric - g.data()[i]) / denom < 1e-4);
      }
    };
    check_input(x.action, d_in.action);
    check_input(x.pose, d_in.pose);
    for (Eigen::Index i = 0; i < x.scene.size(); ++i) {
      const double saved = x.scene(i);
      x.scene(i) = saved + eps;
      const double up = loss(p, x);
      x.scene(i) = saved - eps;
      const double down = loss(p, x);
      x.scene(i) = saved;
      CHECK((up - down) / (2 * eps) == doctest::Approx(d_in.scene(i)).epsilon(1e-4));
    }
  }
}

TEST_CASE("factor layer backward edge cases") {
  const ModelConfig cfg = test::make_config(2, 2, 2, 3, 2, 1);
  std::mt19937_64 rng(12);

  SUBCASE("zero upstream gradient") {
    const PersonMask mask{true, true, false};
    const auto in = random_inputs(cfg, rng, mask);
    auto p = StepParams<double>::zeros(cfg);
    p.alpha = random_matrix(p.alpha.rows(), p.alpha.cols(), rng);
    p.beta = random_matrix(p.beta.rows(), p.beta.cols(), rng);
    FactorActivations<double> acts;
    phi_forward(cfg, in, p.alpha, mask, acts);
    psi_forward(cfg, in, p.beta, mask, acts);
    auto grad = StepParams<double>::zeros(cfg);
    auto d_in = ScoreSet<double>::zeros(cfg);
    phi_backward(cfg, in, p.alpha, mask, acts, Matrix<double>(Matrix<double>::Zero(3, template_rows(cfg.labels))),
                 grad.alpha, d_in);
    psi_backward(cfg, in, p.beta, mask, acts, Vector<double>(Vector<double>::Zero(psi_rows(cfg))), grad.beta,
                 d_in);
    CHECK(grad.alpha.isZero(0.0));
    CHECK(grad.beta.isZero(0.0));
    CHECK(d_in.scene.isZero(0.0));
  }

  SUBCASE("a duplicated person doubles its alpha gradient contribution") {
    ModelConfig one = cfg;
    one.max_persons = 1;
    const auto in1 = random_inputs(one, rng, PersonMask{true});
    auto in2 = ScoreSet<double>::zeros(cfg);
    in2.scene = in1.scene;
    for (int m = 0; m < 2; ++m) {
      in2.action.row(m) = in1.action.row(0);
      in2.pose.row(m) = in1.pose.row(0);
    }
    const Matrix<double> alpha = random_matrix(template_rows(cfg.labels), 3, rng);
    const Matrix<double> up1 = random_matrix(1, template_rows(cfg.labels), rng);
    Matrix<double> up2 = Matrix<double>::Zero(3, template_rows(cfg.labels));
    up2.row(0) = up1.row(0);
    up2.row(1) = up1.row(0);

    FactorActivations<double> a1, a2;
    phi_forward(one, in1, alpha, PersonMask{true}, a1);
    phi_forward(cfg, in2, alpha, PersonMask{true, true, false}, a2);
    Matrix<double> g1 = Matrix<double>::Zero(alpha.rows(), 3), g2 = g1;
    auto d1 = ScoreSet<double>::zeros(one);
    auto d2 = ScoreSet<double>::zeros(cfg);
    phi_backward(one, in1, alpha, PersonMask{true}, a1, up1, g1, d1);
    phi_backward(cfg, in2, alpha, PersonMask{true, true, false}, a2, up2, g2, d2);
    CHECK(g2.isApprox(2.0 * g1, 1e-14));
  }

  SUBCASE("masked persons receive no input gradient") {
    const PersonMask mask{true, false, true};
    auto in = random_inputs(cfg, rng, mask);
    in.action.row(1).setConstant(0.5);
    in.pose.row(1).setConstant(0.5);
    auto p = StepParams<double>::zeros(cfg);
    p.alpha = random_matrix(p.alpha.rows(), p.alpha.cols(), rng);
    p.beta = random_matrix(p.beta.rows(), p.beta.cols(), rng);
    FactorActivations<double> acts;
    phi_forward(cfg, in, p.alpha, mask, acts);
    psi_forward(cfg, in, p.beta, mask, acts);
    auto grad = StepParams<double>::zeros(cfg);
    auto d_in = ScoreSet<double>::zeros(cfg);
    phi_backward(cfg, in, p.alpha, mask, acts, random_matrix(3, template_rows(cfg.labels), rng),
                 grad.alpha, d_in);
    psi_backward(cfg, in, p.beta, mask, acts, Vector<double>(random_matrix(psi_rows(cfg), 1, rng).col(0)),
                 grad.beta, d_in);
    CHECK(d_in.action.row(1).isZero(0.0));
    CHECK(d_in.pose.row(1).isZero(0.0));
    // Untied beta columns of the masked slot never receive gradient.
    CHECK(grad.beta.middleCols(1 + 2, 2).isZero(0.0));
  }
}

// Copyright 2026 The AffineDP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Acceptance suite: one timed pass/fail line per criterion, each pinned to
// its stated tolerance.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>

#include <Eigen/Dense>

#include "affinedp/consensus.hpp"
#include "affinedp/control.hpp"
#include "affinedp/mechanism.hpp"
#include "affinedp/presets.hpp"
#include "oracles.hpp"

using namespace affinedp;
using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace {

class CriterionScope {
 public:
  CriterionScope(int id, const char* name, double limit_seconds)
      : id_(id), name_(name), limit_(limit_seconds),
        start_(std::chrono::steady_clock::now()) {}

  void finish(bool pass) {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::printf("criterion %02d [%s] %-55s (%6.2f s, limit %g s)\n", id_,
                pass && seconds < limit_ ? "PASS" : "FAIL", name_, seconds, limit_);
    std::fflush(stdout);
    CHECK(pass);
    CHECK(seconds < limit_);
  }

 private:
  int id_;
  const char* name_;
  double limit_;
  std::chrono::steady_clock::time_point start_;
};

bool relative_close(double actual, double expected, double rel_tol) {
  return std::abs(actual - expected) <= rel_tol * std::abs(expected);
}

}  // namespace

TEST_CASE("criterion 1: Gaussian calibration constants") {
  CriterionScope scope(1, "Gaussian calibration constants", 1.0);
  bool pass = true;
  const struct {
    double eps;
    double expected;
  } cases[] = {{1.0, 2.5244}, {0.1, 23.4765}, {0.01, 232.8495}};
  for (const auto& c : cases) {
    const Vector sigma = design_consensus_noise<double>({c.eps, 0.01, 1.0},
                                                        NoiseFamily::kGaussian, 10);
    for (Index i = 0; i < sigma.size(); ++i)
      pass = pass && relative_close(sigma[i], c.expected, 1e-3);
  }
  scope.finish(pass);
}

TEST_CASE("criterion 2: Laplace calibration constants") {
  CriterionScope scope(2, "Laplace calibration constants", 1.0);
  bool pass = true;
  const struct {
    double eps;
    double expected;
  } cases[] = {{1.0, 1.0}, {0.1, 10.0}, {0.01, 100.0}};
  for (const auto& c : cases) {
    const Vector sigma =
        design_consensus_noise<double>({c.eps, 0.0, 1.0}, NoiseFamily::kLaplace, 10);
    for (Index i = 0; i < sigma.size(); ++i) pass = pass && sigma[i] == c.expected;
  }
  scope.finish(pass);
}

TEST_CASE("criterion 3: control scalar reduction") {
  CriterionScope scope(3, "control scalar reduction sqrt(Sigma)", 1.0);
  const auto design = design_control_noise(presets::vehicle_private_subsystem(), 100,
                                           PrivacyBudget<double>{1.0, 0.01, 1.0});
  scope.finish(std::abs(design.sigma_sqrt(0, 0) - 2.5244) <= 1e-3);
}

TEST_CASE("criterion 4: two-release example sensitivity") {
  CriterionScope scope(4, "ratio-constraint 1-norm sensitivity", 1.0);
  bool pass = true;
  for (double k : {0.5, 1.0, 2.0}) {
    Matrix D(1, 2);
    D << 1.0, -k;
    const auto m = validate_manifold<double>(D, Vector::Zero(1));
    const auto family = enumerate_bases(m);
    Matrix lambda(2, 1);
    lambda << k, 1.0;
    const auto report = sensitivity<double>(Matrix::Identity(2, 2), m, family, lambda);
    pass = pass && std::abs(report.delta_L - std::max(1.0, 1.0 / k)) <= 1e-12;
  }
  scope.finish(pass);
}

TEST_CASE("criterion 5: consensus reproduction") {
  CriterionScope scope(5, "ten-node consensus statistics vs bounds", 30.0);
  const auto g = presets::paper10_graph();
  const auto spec = laplacian_and_spectrum(g);
  const Vector x0 = presets::paper10_initial_states();
  const Index T = 100;
  const Index runs = 500;
  bool pass = true;

  for (auto family : {NoiseFamily::kGaussian, NoiseFamily::kLaplace}) {
    const PrivacyBudget<double> budget{1.0, family == NoiseFamily::kGaussian ? 0.01 : 0.0, 1.0};
    const Vector sigma = design_consensus_noise(budget, family, g.n);

    // (a) exact average preservation on every run and step
    for (Index k = 0; k < runs; ++k) {
      CounterRng child = CounterRng::substream(777, static_cast<std::uint64_t>(k));
      const auto run = run_consensus(g, x0, T, sigma, family, child.next_u64());
      for (Index t = 0; t < T; ++t)
        pass = pass && std::abs(run.trajectory.row(t).sum() - 100.0) <= 1e-7;
    }

    // (b) terminal MSE under the asymptotic bound with Monte Carlo headroom
    const auto stats = monte_carlo_accuracy(g, x0, T, sigma, family, runs, 777);
    const auto bounds = theoretical_bounds(spec, sigma, family);
    pass = pass && stats.mse[T - 1] <= bounds.mse_bound * (1.0 + 4.0 / std::sqrt(double(runs)));

    // (c) per-node mean error at T within four standard errors of zero
    for (Index i = 0; i < g.n; ++i) {
      const double mean = stats.mean_error(T - 1, i);
      const double var =
          std::max(stats.error_second_moment(T - 1, i) - mean * mean, 0.0);
      const double se = std::sqrt(var / double(runs));
      pass = pass && std::abs(mean) <= 4.0 * se;
    }
  }
  scope.finish(pass);
}

TEST_CASE("criterion 6: per-node mechanism verification at T = 100") {
  CriterionScope scope(6, "per-node trajectory verification margins", 5.0);
  const Index T = 100;
  const auto m = build_node_manifold<double>(T, Vector::Zero(T - 1));
  const auto family = enumerate_bases(m);
  const Matrix F = Matrix::Identity(T, T);
  bool pass = !family.truncated;

  const PrivacyBudget<double> gaussian_budget{1.0, 0.01, 1.0};
  const double sg =
      design_consensus_noise<double>(gaussian_budget, NoiseFamily::kGaussian, 1)[0];
  Matrix sig(1, 1);
  sig << sg * sg;
  const auto gauss = make_gaussian_noise<double>(Matrix::Ones(T, 1), sig);
  const auto gr = verify_gaussian(F, m, family, gauss, gaussian_budget);
  pass = pass && gr.verdict == Verdict::kPass && gr.margin >= -1e-9;

  const PrivacyBudget<double> laplace_budget{1.0, 0.0, 1.0};
  const double sl =
      design_consensus_noise<double>(laplace_budget, NoiseFamily::kLaplace, 1)[0];
  const auto lap = make_laplace_noise<double>(Matrix::Ones(T, 1), sl);
  const auto lr = verify_laplace(F, m, family, lap, laplace_budget);
  pass = pass && lr.verdict == Verdict::kPass && lr.margin >= -1e-9;
  scope.finish(pass);
}

TEST_CASE("criterion 7: block direction identity on random systems") {
  CriterionScope scope(7, "closed-form vs generic block directions", 10.0);
  CounterRng rng(4242);
  bool pass = true;
  for (int rep = 0; rep < 50; ++rep) {
    const Index nx = 1 + static_cast<Index>(rng.next_u64() % 3);
    // random well-conditioned A (singular values in [0.5, 2])
    Matrix G1(nx, nx), G2(nx, nx);
    for (Index r = 0; r < nx; ++r)
      for (Index c = 0; c < nx; ++c) {
        G1(r, c) = rng.normal();
        G2(r, c) = rng.normal();
      }
    const Matrix Q1 = Eigen::HouseholderQR<Matrix>(G1).householderQ();
    const Matrix Q2 = Eigen::HouseholderQR<Matrix>(G2).householderQ();
    Vector s(nx);
    for (Index k = 0; k < nx; ++k) s[k] = 0.5 + 1.5 * rng.uniform();
    LtiSystem<double> sys;
    sys.A = Q1 * s.asDiagonal() * Q2.transpose();
    sys.B = Matrix::Zero(nx, 1);
    sys.C = Matrix::Identity(nx, nx);

    const Index t_min = std::max<Index>(2, nx);
    const Index T = t_min + static_cast<Index>(rng.next_u64() % (9 - t_min));
    const Index j = 1 + static_cast<Index>(rng.next_u64() % T);
    pass = pass && block_direction_identity(sys, T, j, 1e-10);
  }
  scope.finish(pass);
}

TEST_CASE("criterion 8: sensitivity oracle equivalence") {
  CriterionScope scope(8, "brute-force sensitivity maxima", 30.0);
  CounterRng rng(31337);
  bool pass = true;
  for (int rep = 0; rep < 100; ++rep) {
    const Index n = 2 + static_cast<Index>(rng.next_u64() % 5);
    const Index q = static_cast<Index>(rng.next_u64() % std::min<Index>(n, 4));
    const auto m = apd_test::random_manifold(rng, n, q);
    const auto family = enumerate_bases(m);

    const Index out_dim = 1 + static_cast<Index>(rng.next_u64() % n);
    Matrix F(out_dim, n);
    for (Index r = 0; r < out_dim; ++r)
      for (Index c = 0; c < n; ++c) F(r, c) = rng.normal();
    const Index r_noise = 1 + static_cast<Index>(rng.next_u64() % out_dim);
    Matrix lambda(out_dim, r_noise);
    for (Index r = 0; r < out_dim; ++r)
      for (Index c = 0; c < r_noise; ++c) lambda(r, c) = rng.normal();

    const auto report = sensitivity(F, m, family, lambda);
    const auto oracle = apd_test::brute_force_sensitivity(F, m.D, lambda);
    pass = pass &&
           std::abs(report.delta_N - oracle.delta_N) <= 1e-9 * std::max(1.0, oracle.delta_N) &&
           std::abs(report.delta_L - oracle.delta_L) <= 1e-9 * std::max(1.0, oracle.delta_L);
  }
  scope.finish(pass);
}

TEST_CASE("criterion 9: analytic and empirical audits agree") {
  CriterionScope scope(9, "Monte Carlo audit vs closed-form profile", 60.0);
  const Index T = 8;
  // noise calibrated so the exact profile meets the budget with equality
  const double sigma = 1.0 / kappa_inverse(1.0, 0.01, 1e-13);
  Matrix sig(1, 1);
  sig << sigma * sigma;
  const auto noise = make_gaussian_noise<double>(Matrix::Ones(T, 1), sig);
  const LinearQueryMechanism<double> mech(Matrix::Identity(T, T), noise, 1);
  const Vector x = Vector::Zero(T);
  const Vector xp = Vector::Ones(T);  // worst-case adjacent pair at mu = 1
  const auto result = audit_empirical(mech, x, xp, 1.0, 1000000, 90210);

  bool pass = result.analytic_delta.has_value();
  pass = pass && std::abs(*result.analytic_delta - 0.01) <= 1e-8;
  pass = pass && std::abs(result.lhs_estimate - *result.analytic_delta) <=
                     4.0 * result.std_error;
  scope.finish(pass);
}

TEST_CASE("criterion 10: vehicle experiment properties") {
  CriterionScope scope(10, "vehicle tracking: decay, floor, ordering", 60.0);
  const auto sys = presets::vehicle_system();
  const auto ctrl = presets::vehicle_controller();
  const Index T = 101;  // indices 0..100
  const Index runs = 500;
  const PrivacyBudget<double> budget{1.0, 0.01, 1.0};

  const auto structured =
      design_control_noise(presets::vehicle_private_subsystem(), T, budget);
  const auto iid = iid_baseline_noise(presets::vehicle_private_subsystem(), T, budget);

  std::vector<TrajectoryRecord<double>> s_recs, i_recs;
  s_recs.reserve(runs);
  i_recs.reserve(runs);
  for (Index k = 0; k < runs; ++k) {
    CounterRng child = CounterRng::substream(1212, static_cast<std::uint64_t>(k));
    const std::uint64_t seed = child.next_u64();
    s_recs.push_back(run_closed_loop(sys, ctrl, structured.model, T, seed));
    i_recs.push_back(run_closed_loop(sys, ctrl, iid, T, seed));
  }
  const auto s_stats = tracking_statistics(s_recs, ctrl.reference);
  const auto i_stats = tracking_statistics(i_recs, ctrl.reference);

  // velocity MSE collapses by at least 10x between t = 10 and t = 100
  bool pass = s_stats.mse(100, 1) * 10.0 <= s_stats.mse(10, 1);
  // position MSE bounded and non-vanishing: the constant measurement offset
  // sqrt(Sigma) eta biases the position by itself, so the run-to-run MSE sits
  // near Sigma = 6.37; [1, 100] leaves ten-sigma slack on both sides.
  pass = pass && s_stats.mse(100, 0) >= 1.0 && s_stats.mse(100, 0) <= 100.0;
  // structured noise strictly beats the i.i.d. baseline at equal budget
  pass = pass && s_stats.mse(100, 0) < i_stats.mse(100, 0);
  scope.finish(pass);
}

TEST_CASE("criterion 11: profile monotonicity and inverse round trip") {
  CriterionScope scope(11, "kappa grid monotonicity + inverse round trip", 1.0);
  bool pass = true;
  // 50 x 50 grid; y from 0.5 keeps values inside double range at eps = 10
  for (int ei = 0; ei < 50; ++ei) {
    const double eps = 10.0 * ei / 49.0;
    double prev = kappa(eps, 0.5);
    for (int yi = 1; yi < 50; ++yi) {
      const double y = 0.5 + (5.0 - 0.5) * yi / 49.0;
      const double cur = kappa(eps, y);
      pass = pass && cur > prev;
      prev = cur;
    }
  }
  for (double eps : {0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    for (double delta : {1e-6, 1e-4, 1e-2, 0.1, 0.4}) {
      const double y = kappa_inverse(eps, delta, 1e-12);
      pass = pass && std::abs(kappa(eps, y) - delta) <= 1e-10;
    }
  }
  scope.finish(pass);
}

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "affinedp/consensus.hpp"
#include "affinedp/presets.hpp"

using namespace affinedp;
using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

TEST_CASE("two-node spectrum by hand") {
  const auto g = WeightedGraph<double>::from_edges(2, {{0, 1, 0.25}});
  const auto spec = laplacian_and_spectrum(g);
  CHECK(spec.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(spec.eigenvalues[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(spec.alpha == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("ten-node preset satisfies the spectral facts") {
  const auto g = presets::paper10_graph();
  const auto spec = laplacian_and_spectrum(g);
  CHECK(std::abs(spec.eigenvalues[0]) < 1e-10);
  CHECK(spec.eigenvalues[spec.eigenvalues.size() - 1] < 2.0);
  CHECK(spec.alpha > 0.0);
  CHECK(spec.alpha < 1.0);
  CHECK(spec.alpha == doctest::Approx(0.904508497187).epsilon(1e-9));
}

TEST_CASE("disconnected graphs are rejected") {
  const auto g = WeightedGraph<double>::from_edges(4, {{0, 1, 0.25}, {2, 3, 0.25}});
  CHECK_THROWS_AS(laplacian_and_spectrum(g), Error);
}

TEST_CASE("graph validation enforces the weight conditions") {
  CHECK_THROWS_AS(WeightedGraph<double>::from_edges(2, {{0, 1, -1.0}}), Error);
  // row sum hits 1.0
  CHECK_THROWS_AS(
      WeightedGraph<double>::from_edges(3, {{0, 1, 0.5}, {0, 2, 0.5}}), Error);
}

TEST_CASE("design_consensus_noise reproduces the reference constants") {
  CHECK(std::abs(design_consensus_noise<double>({1.0, 0.01, 1.0}, NoiseFamily::kGaussian, 10)[0] -
                 2.5244) < 2.5244 * 1e-3);
  CHECK(std::abs(design_consensus_noise<double>({0.1, 0.01, 1.0}, NoiseFamily::kGaussian, 10)[0] -
                 23.4765) < 23.4765 * 1e-3);
  CHECK(std::abs(design_consensus_noise<double>({0.01, 0.01, 1.0}, NoiseFamily::kGaussian, 10)[0] -
                 232.8495) < 232.8495 * 1e-3);
  CHECK(design_consensus_noise<double>({1.0, 0.0, 1.0}, NoiseFamily::kLaplace, 3)[0] == 1.0);
  CHECK(design_consensus_noise<double>({0.1, 0.0, 1.0}, NoiseFamily::kLaplace, 3)[0] == 10.0);
  CHECK(design_consensus_noise<double>({0.01, 0.0, 1.0}, NoiseFamily::kLaplace, 3)[0] == 100.0);
}

TEST_CASE("consensus noise scales linearly with mu") {
  const auto s1 = design_consensus_noise<double>({0.5, 0.01, 1.0}, NoiseFamily::kGaussian, 4);
  const auto s2 = design_consensus_noise<double>({0.5, 0.01, 2.0}, NoiseFamily::kGaussian, 4);
  CHECK(s2[0] == doctest::Approx(2.0 * s1[0]).epsilon(1e-12));
}

TEST_CASE("noiseless consensus contracts at rate alpha") {
  const auto g = presets::paper10_graph();
  const auto spec = laplacian_and_spectrum(g);
  const Vector x0 = presets::paper10_initial_states();
  const Index T = 60;
  const Vector zero_sigma = Vector::Zero(10);
  const auto run = run_consensus(g, x0, T, zero_sigma, NoiseFamily::kGaussian, 1);
  const double xbar = x0.mean();
  const Vector terminal = run.trajectory.row(T - 1).transpose();
  const double dev = (terminal.array() - xbar).matrix().norm();
  CHECK(dev <= std::pow(spec.alpha, double(T - 1)) * x0.norm() + 1e-9);
}

TEST_CASE("the exact average is preserved at every step") {
  const auto g = presets::paper10_graph();
  const Vector x0 = presets::paper10_initial_states();
  REQUIRE(x0.sum() == doctest::Approx(100.0).epsilon(1e-15));
  const Vector sigma = Vector::Constant(10, 2.5244);
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const auto run = run_consensus(g, x0, 100, sigma, NoiseFamily::kGaussian, seed);
    for (Index t = 0; t < 100; ++t) {
      CHECK(std::abs(run.trajectory.row(t).sum() - x0.sum()) <=
            1e-9 * (1.0 + x0.lpNorm<1>()));
    }
  }
}

TEST_CASE("the pathwise deviation bound holds along recorded trajectories") {
  const auto g = presets::paper10_graph();
  const auto spec = laplacian_and_spectrum(g);
  const Vector x0 = presets::paper10_initial_states();
  const double xbar = x0.mean();
  for (auto family : {NoiseFamily::kGaussian, NoiseFamily::kLaplace}) {
    const Vector sigma = Vector::Constant(10, family == NoiseFamily::kGaussian ? 2.5244 : 1.0);
    for (std::uint64_t seed : {10ULL, 20ULL, 30ULL}) {
      const auto run = run_consensus(g, x0, 100, sigma, family, seed);
      for (Index t = 0; t < 100; ++t) {
        const double dev =
            (run.trajectory.row(t).transpose().array() - xbar).matrix().norm();
        CHECK(dev <= pathwise_bound(run, spec.alpha, t) + 1e-9);
      }
    }
  }
}

TEST_CASE("theoretical_bounds mirrors the asymptotic limits") {
  const auto g = presets::paper10_graph();
  const auto spec = laplacian_and_spectrum(g);
  const Vector sg = Vector::Constant(10, 2.5244);
  CHECK(theoretical_bounds(spec, sg, NoiseFamily::kGaussian).mse_bound ==
        doctest::Approx(10.0 * 2.5244 * 2.5244).epsilon(1e-12));
  const Vector sl = Vector::Ones(10);
  CHECK(theoretical_bounds(spec, sl, NoiseFamily::kLaplace).mse_bound ==
        doctest::Approx(20.0).epsilon(1e-12));
  const Vector zero_sigma = Vector::Zero(10);
  CHECK(theoretical_bounds(spec, zero_sigma, NoiseFamily::kGaussian).mse_bound == 0.0);
}

TEST_CASE("monte_carlo_accuracy is deterministic in the seed") {
  const auto g = presets::paper10_graph();
  const Vector x0 = presets::paper10_initial_states();
  const Vector sigma = Vector::Ones(10);
  const auto a = monte_carlo_accuracy(g, x0, 30, sigma, NoiseFamily::kLaplace, 20, 9);
  const auto b = monte_carlo_accuracy(g, x0, 30, sigma, NoiseFamily::kLaplace, 20, 9);
  CHECK((a.mse - b.mse).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.mean_error - b.mean_error).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("empirical steady state stays under the bound at modest run counts") {
  const auto g = presets::paper10_graph();
  const auto spec = laplacian_and_spectrum(g);
  const Vector x0 = presets::paper10_initial_states();
  const Vector sigma = design_consensus_noise<double>({1.0, 0.01, 1.0}, NoiseFamily::kGaussian, 10);
  const Index runs = 200;
  const auto stats = monte_carlo_accuracy(g, x0, 100, sigma, NoiseFamily::kGaussian, runs, 424);
  const auto bounds = theoretical_bounds(spec, sigma, NoiseFamily::kGaussian);
  CHECK(stats.mse[99] <= bounds.mse_bound * (1.0 + 4.0 / std::sqrt(double(runs))));
}

TEST_CASE("build_node_manifold produces the chain constraints") {
  Vector u(2);
  u << 1.0, -2.0;
  const auto m = build_node_manifold<double>(3, u);
  Matrix expected(2, 3);
  expected << 1.0, -1.0, 0.0, 0.0, 1.0, -1.0;
  CHECK(m.D.isApprox(expected));
  CHECK(m.b.isApprox(u));
}

TEST_CASE("recorded trajectories lie on their node manifolds") {
  const auto g = presets::paper10_graph();
  const Vector x0 = presets::paper10_initial_states();
  const Vector sigma = Vector::Constant(10, 2.5244);
  const auto run = run_consensus(g, x0, 40, sigma, NoiseFamily::kGaussian, 3);
  for (Index i = 0; i < 10; ++i) {
    const auto m = build_node_manifold<double>(40, run.node_controls(i));
    const Vector xi = run.trajectory.col(i);
    CHECK((m.D * xi + m.b).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("per-node mechanisms pass verification at the calibration budget") {
  const Index T = 30;
  const auto m = build_node_manifold<double>(T, Vector::Zero(T - 1));
  const auto family = enumerate_bases(m);
  const Matrix F = Matrix::Identity(T, T);

  const PrivacyBudget<double> gaussian_budget{1.0, 0.01, 1.0};
  const double sg = design_consensus_noise<double>(gaussian_budget, NoiseFamily::kGaussian, 1)[0];
  Matrix sig(1, 1);
  sig << sg * sg;
  const auto gauss = make_gaussian_noise<double>(Matrix::Ones(T, 1), sig);
  const auto gr = verify_gaussian(F, m, family, gauss, gaussian_budget);
  CHECK(gr.verdict == Verdict::kPass);
  CHECK(gr.margin >= -1e-9);

  const PrivacyBudget<double> laplace_budget{1.0, 0.0, 1.0};
  const double sl = design_consensus_noise<double>(laplace_budget, NoiseFamily::kLaplace, 1)[0];
  const auto lap = make_laplace_noise<double>(Matrix::Ones(T, 1), sl);
  const auto lr = verify_laplace(F, m, family, lap, laplace_budget);
  CHECK(lr.verdict == Verdict::kPass);
  CHECK(lr.margin >= -1e-9);
}

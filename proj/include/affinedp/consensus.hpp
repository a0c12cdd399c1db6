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

#ifndef AFFINEDP_CONSENSUS_HPP_
#define AFFINEDP_CONSENSUS_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "affinedp/calibration.hpp"
#include "affinedp/errors.hpp"
#include "affinedp/manifold.hpp"
#include "affinedp/rng.hpp"

namespace affinedp {

/// Undirected weighted communication graph with per-row weight sums below 1.
template <class Scalar>
struct WeightedGraph {
  Eigen::Index n = 0;
  MatrixX<Scalar> weights;  // symmetric, zero diagonal

  struct Edge {
    Eigen::Index i;
    Eigen::Index j;
    Scalar w;
  };

  static WeightedGraph from_edges(Eigen::Index n, const std::vector<Edge>& edges) {
    if (n < 1) throw Error(ErrorCode::kInvalidGraph, "graph needs at least one node");
    WeightedGraph g;
    g.n = n;
    g.weights = MatrixX<Scalar>::Zero(n, n);
    for (const auto& e : edges) {
      if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n || e.i == e.j)
        throw Error(ErrorCode::kInvalidGraph, "edge endpoints out of range");
      if (!(e.w > Scalar(0))) throw Error(ErrorCode::kInvalidGraph, "edge weights must be positive");
      g.weights(e.i, e.j) = e.w;
      g.weights(e.j, e.i) = e.w;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(g.weights.row(i).sum() < Scalar(1)))
        throw Error(ErrorCode::kInvalidGraph, "row weight sums must stay below 1");
    }
    return g;
  }
};

/// Laplacian with the positive-semidefinite convention L_ii = sum_j w_ij,
/// L_ij = -w_ij, its ordered eigenvalues, and the contraction factor
/// alpha = max{|1 - lambda_2|, |1 - lambda_n|} of I - L.
template <class Scalar>
struct SpectralSummary {
  MatrixX<Scalar> laplacian;
  VectorX<Scalar> eigenvalues;  // ascending
  Scalar alpha = Scalar(0);
};

template <class Scalar>
SpectralSummary<Scalar> laplacian_and_spectrum(const WeightedGraph<Scalar>& g,
                                               Scalar connectivity_tol = Scalar(1e-9)) {
  SpectralSummary<Scalar> s;
  s.laplacian = MatrixX<Scalar>::Zero(g.n, g.n);
  for (Eigen::Index i = 0; i < g.n; ++i) {
    s.laplacian(i, i) = g.weights.row(i).sum();
    for (Eigen::Index j = 0; j < g.n; ++j) {
      if (i != j) s.laplacian(i, j) = -g.weights(i, j);
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(s.laplacian);
  s.eigenvalues = es.eigenvalues();
  if (g.n > 1 && s.eigenvalues[1] <= connectivity_tol)
    throw Error(ErrorCode::kDisconnected, "second Laplacian eigenvalue vanishes");
  const Scalar lam2 = (g.n > 1) ? s.eigenvalues[1] : Scalar(0);
  const Scalar lamn = s.eigenvalues[g.n - 1];
  s.alpha = std::max(std::abs(Scalar(1) - lam2), std::abs(Scalar(1) - lamn));
  return s;
}

/// Tight per-node noise scale: sigma_i = mu / loss_tail_inverse(eps, delta)
/// for Gaussian perturbations, sigma_i = mu / eps for Laplace.
template <class Scalar>
VectorX<Scalar> design_consensus_noise(const PrivacyBudget<Scalar>& budget,
                                       NoiseFamily family, Eigen::Index n) {
  budget.validate();
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  Scalar sigma;
  if (family == NoiseFamily::kGaussian) {
    if (budget.delta == Scalar(0))
      throw Error(ErrorCode::kDeltaZero, "Gaussian consensus noise requires delta > 0");
    sigma = budget.mu / loss_tail_inverse(budget.epsilon, budget.delta);
  } else {
    if (budget.epsilon == Scalar(0))
      throw Error(ErrorCode::kEpsilonZero, "Laplace consensus noise requires epsilon > 0");
    sigma = budget.mu / budget.epsilon;
  }
  return VectorX<Scalar>::Constant(n, sigma);
}

/// One seeded consensus execution. Each node draws a single eta_i reused at
/// every step, so row t of the trajectory satisfies
/// x(t+1) = (I - L) x(t) - L diag(sigma) eta exactly given row t.
template <class Scalar>
struct ConsensusRun {
  MatrixX<Scalar> trajectory;  // T x n, rows x(0) ... x(T-1)
  VectorX<Scalar> noise_draws;  // eta per node
  VectorX<Scalar> x0;
  NoiseFamily family = NoiseFamily::kGaussian;
  VectorX<Scalar> sigma;

  Eigen::Index steps() const { return trajectory.rows(); }
  /// Realized controls u_i(t) = x_i(t+1) - x_i(t) for node i.
  VectorX<Scalar> node_controls(Eigen::Index i) const {
    const Eigen::Index T = trajectory.rows();
    VectorX<Scalar> u(T - 1);
    for (Eigen::Index t = 0; t + 1 < T; ++t) u[t] = trajectory(t + 1, i) - trajectory(t, i);
    return u;
  }
};

template <class Scalar>
ConsensusRun<Scalar> run_consensus(const WeightedGraph<Scalar>& g,
                                   const VectorX<Scalar>& x0, Eigen::Index T,
                                   const VectorX<Scalar>& sigma, NoiseFamily family,
                                   std::uint64_t seed) {
  if (x0.size() != g.n || sigma.size() != g.n)
    throw Error(ErrorCode::kDimensionMismatch, "x0 and sigma must have one entry per node");
  if (T < 1) throw Error(ErrorCode::kInvalidArgument, "T must be >= 1");
  if (!x0.allFinite()) throw Error(ErrorCode::kInvalidArgument, "x0 must be finite");

  const SpectralSummary<Scalar> spec = laplacian_and_spectrum(g);
  const MatrixX<Scalar>& L = spec.laplacian;

  CounterRng rng(seed);
  ConsensusRun<Scalar> run;
  run.family = family;
  run.sigma = sigma;
  run.x0 = x0;
  run.noise_draws = (family == NoiseFamily::kGaussian)
                        ? rng.template normal_vector<Scalar>(g.n)
                        : rng.template laplace_vector<Scalar>(g.n);

  const VectorX<Scalar> noise_term = L * (sigma.asDiagonal() * run.noise_draws);
  run.trajectory.resize(T, g.n);
  run.trajectory.row(0) = x0.transpose();
  VectorX<Scalar> x = x0;
  for (Eigen::Index t = 1; t < T; ++t) {
    x = x - L * x - noise_term;
    run.trajectory.row(t) = x.transpose();
  }
  return run;
}

template <class Scalar>
struct ConsensusBounds {
  Scalar alpha = Scalar(0);
  /// Asymptotic bound on E||x(t) - 1 xbar_0||^2: sum sigma_i^2 (Gaussian)
  /// or 2 sum sigma_i^2 (Laplace).
  Scalar mse_bound = Scalar(0);
};

template <class Scalar>
ConsensusBounds<Scalar> theoretical_bounds(const SpectralSummary<Scalar>& spec,
                                           const VectorX<Scalar>& sigma,
                                           NoiseFamily family) {
  ConsensusBounds<Scalar> b;
  b.alpha = spec.alpha;
  const Scalar ss = sigma.squaredNorm();
  b.mse_bound = (family == NoiseFamily::kLaplace) ? Scalar(2) * ss : ss;
  return b;
}

/// Pathwise deviation bound evaluated along one run at step t:
/// alpha^t ||x(0)|| + (1 + alpha^t) sqrt(sum sigma_i^2 eta_i^2).
template <class Scalar>
Scalar pathwise_bound(const ConsensusRun<Scalar>& run, Scalar alpha, Eigen::Index t) {
  const Scalar at = std::pow(alpha, Scalar(t));
  const Scalar noise_norm = (run.sigma.asDiagonal() * run.noise_draws).norm();
  return at * run.x0.norm() + (Scalar(1) + at) * noise_norm;
}

template <class Scalar>
struct ConsensusStatistics {
  MatrixX<Scalar> mean_error;  // T x n, E[x_i(t) - xbar_0]
  VectorX<Scalar> mse;         // T, E||x(t) - 1 xbar_0||^2
  MatrixX<Scalar> error_second_moment;  // T x n, E[(x_i(t) - xbar_0)^2]
  Eigen::Index runs = 0;
};

/// Averages error statistics across independent seeded runs (substream per
/// run index, so any execution order reproduces the same statistics).
template <class Scalar>
ConsensusStatistics<Scalar> monte_carlo_accuracy(const WeightedGraph<Scalar>& g,
                                                 const VectorX<Scalar>& x0, Eigen::Index T,
                                                 const VectorX<Scalar>& sigma,
                                                 NoiseFamily family, Eigen::Index runs,
                                                 std::uint64_t seed) {
  if (runs < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 runs");
  const Scalar xbar = x0.mean();

  ConsensusStatistics<Scalar> stats;
  stats.runs = runs;
  stats.mean_error = MatrixX<Scalar>::Zero(T, g.n);
  stats.error_second_moment = MatrixX<Scalar>::Zero(T, g.n);
  stats.mse = VectorX<Scalar>::Zero(T);

  for (Eigen::Index k = 0; k < runs; ++k) {
    CounterRng child = CounterRng::substream(seed, static_cast<std::uint64_t>(k));
    const ConsensusRun<Scalar> run =
        run_consensus(g, x0, T, sigma, family, child.next_u64());
    for (Eigen::Index t = 0; t < T; ++t) {
      const VectorX<Scalar> err = run.trajectory.row(t).transpose().array() - xbar;
      stats.mean_error.row(t) += err.transpose();
      stats.error_second_moment.row(t) += err.array().square().matrix().transpose();
      stats.mse[t] += err.squaredNorm();
    }
  }
  stats.mean_error /= Scalar(runs);
  stats.error_second_moment /= Scalar(runs);
  stats.mse /= Scalar(runs);
  return stats;
}

/// The (T-1) x T chain constraints x_i(t) - x_i(t+1) + u_i(t) = 0 binding a
/// node trajectory to its realized controls; offset b equals the control
/// sequence.
template <class Scalar>
AffineManifold<Scalar> build_node_manifold(Eigen::Index T, const VectorX<Scalar>& u) {
  if (T < 2) throw Error(ErrorCode::kInvalidArgument, "T must be >= 2");
  if (u.size() != T - 1)
    throw Error(ErrorCode::kDimensionMismatch, "u must have T - 1 entries");
  MatrixX<Scalar> D = MatrixX<Scalar>::Zero(T - 1, T);
  for (Eigen::Index t = 0; t < T - 1; ++t) {
    D(t, t) = Scalar(1);
    D(t, t + 1) = Scalar(-1);
  }
  return validate_manifold<Scalar>(D, u);
}

}  // namespace affinedp

#endif  // AFFINEDP_CONSENSUS_HPP_

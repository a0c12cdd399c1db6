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

#ifndef AFFINEDP_CONTROL_HPP_
#define AFFINEDP_CONTROL_HPP_

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "affinedp/calibration.hpp"
#include "affinedp/errors.hpp"
#include "affinedp/manifold.hpp"
#include "affinedp/rng.hpp"

namespace affinedp {

/// Discrete-time LTI plant x(t+1) = A x(t) + B u(t), y(t) = C x(t).
template <class Scalar>
struct LtiSystem {
  MatrixX<Scalar> A;  // n_x x n_x, nonsingular
  MatrixX<Scalar> B;  // n_x x n_u
  MatrixX<Scalar> C;  // n_y x n_x
  Scalar sampling_period = Scalar(1);

  Eigen::Index nx() const { return A.rows(); }
  Eigen::Index nu() const { return B.cols(); }
  Eigen::Index ny() const { return C.rows(); }
};

template <class Scalar>
struct ObservabilityInfo {
  MatrixX<Scalar> matrix;  // [C; CA; ...; CA^{T-1}]
  Eigen::Index rank = 0;
};

/// Stacks C A^t for t < T and checks the standing assumptions: A nonsingular
/// and the stack of full column rank.
template <class Scalar>
ObservabilityInfo<Scalar> observability_matrix(const LtiSystem<Scalar>& sys,
                                               Eigen::Index T) {
  const Eigen::Index nx = sys.nx();
  const Eigen::Index ny = sys.ny();
  if (T < nx) throw Error(ErrorCode::kInvalidArgument, "T must be at least n_x");

  {
    Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(sys.A);
    qr.setThreshold(Scalar(1e-10));
    if (qr.rank() < nx) throw Error(ErrorCode::kSingularA, "system matrix A is singular");
  }

  ObservabilityInfo<Scalar> info;
  info.matrix.resize(T * ny, nx);
  MatrixX<Scalar> row = sys.C;
  for (Eigen::Index t = 0; t < T; ++t) {
    info.matrix.middleRows(t * ny, ny) = row;
    if (t + 1 < T) row = row * sys.A;
  }
  Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(info.matrix);
  qr.setThreshold(Scalar(1e-10));
  info.rank = qr.rank();
  if (info.rank < nx)
    throw Error(ErrorCode::kUnobservable, "observability matrix is rank deficient");
  return info;
}

template <class Scalar>
struct TrajectoryManifold {
  AffineManifold<Scalar> manifold;  // over n = T n_x stacked states
  MatrixX<Scalar> nullspace;        // structured basis [I; A; ...; A^{T-1}]
};

/// Constraints binding the stacked trajectory [x(0); ...; x(T-1)] to the
/// dynamics: block rows [A, -I] and offset (I_{T-1} kron B) u. The returned
/// nullspace is the structured (non-orthonormal) basis whose columns span
/// ker(D).
template <class Scalar>
TrajectoryManifold<Scalar> build_trajectory_manifold(const LtiSystem<Scalar>& sys,
                                                     Eigen::Index T,
                                                     const VectorX<Scalar>& u) {
  const Eigen::Index nx = sys.nx();
  const Eigen::Index nu = sys.nu();
  if (T < 2) throw Error(ErrorCode::kInvalidArgument, "T must be >= 2");
  if (u.size() != (T - 1) * nu)
    throw Error(ErrorCode::kDimensionMismatch, "u must stack T - 1 inputs");
  observability_matrix(sys, T);  // standing assumptions

  const Eigen::Index n = T * nx;
  MatrixX<Scalar> D = MatrixX<Scalar>::Zero(n - nx, n);
  VectorX<Scalar> b(n - nx);
  for (Eigen::Index t = 0; t < T - 1; ++t) {
    D.block(t * nx, t * nx, nx, nx) = sys.A;
    D.block(t * nx, (t + 1) * nx, nx, nx) = -MatrixX<Scalar>::Identity(nx, nx);
    b.segment(t * nx, nx) = sys.B * u.segment(t * nu, nu);
  }

  TrajectoryManifold<Scalar> tm;
  tm.manifold = validate_manifold<Scalar>(D, b);
  tm.nullspace.resize(n, nx);
  MatrixX<Scalar> power = MatrixX<Scalar>::Identity(nx, nx);
  for (Eigen::Index t = 0; t < T; ++t) {
    tm.nullspace.middleRows(t * nx, nx) = power;
    if (t + 1 < T) power = sys.A * power;
  }
  return tm;
}

/// The T index sets whose complements are the time blocks
/// {(j-1) n_x, ..., j n_x - 1}; nonsingular whenever A is. This is the
/// family the trajectory noise design is calibrated against. For n_x >= 2 an
/// exhaustive enumeration can contain further nonsingular sets with larger
/// reduced norms; the design deliberately follows the block family, which is
/// exhaustive for n_x = 1.
template <class Scalar>
IndexSetFamily<Scalar> trajectory_block_family(const AffineManifold<Scalar>& m,
                                               Eigen::Index nx, Eigen::Index T) {
  if (m.n() != T * nx) throw Error(ErrorCode::kDimensionMismatch, "manifold is not T n_x dimensional");
  std::vector<std::vector<Eigen::Index>> sets;
  for (Eigen::Index j = 0; j < T; ++j) {
    std::vector<Eigen::Index> d;
    d.reserve(m.n() - nx);
    for (Eigen::Index i = 0; i < m.n(); ++i) {
      if (i < j * nx || i >= (j + 1) * nx) d.push_back(i);
    }
    sets.push_back(std::move(d));
  }
  return make_family(m, std::move(sets));
}

namespace internal {

// Powers A^{1-j} for j = 1..T via repeated solves against one factorization;
// cond(A)^{j-1} above the guard triggers IllConditioned.
template <class Scalar>
std::vector<MatrixX<Scalar>> inverse_powers(const MatrixX<Scalar>& A, Eigen::Index T,
                                            Scalar cond_guard = Scalar(1e12)) {
  const Eigen::Index nx = A.rows();
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(A);
  const Scalar smin = svd.singularValues().minCoeff();
  if (smin <= Scalar(0)) throw Error(ErrorCode::kSingularA, "A is singular");
  const Scalar cond = svd.singularValues().maxCoeff() / smin;

  Eigen::PartialPivLU<MatrixX<Scalar>> lu(A);
  std::vector<MatrixX<Scalar>> powers;
  powers.reserve(T);
  MatrixX<Scalar> P = MatrixX<Scalar>::Identity(nx, nx);
  Scalar cond_pow = Scalar(1);
  for (Eigen::Index j = 1; j <= T; ++j) {
    powers.push_back(P);
    if (j < T) {
      cond_pow *= cond;
      if (cond_pow > cond_guard)
        throw Error(ErrorCode::kIllConditioned,
                    "A^{1-j} untrustworthy at power " + std::to_string(j), j);
      P = lu.solve(P);
    }
  }
  return powers;
}

}  // namespace internal

/// Compares the block-set directions Psi_j E_{-d_j} computed through the
/// generic manifold path with the closed form D_perp A^{1-j} (j is 1-based).
template <class Scalar>
bool block_direction_identity(const LtiSystem<Scalar>& sys, Eigen::Index T,
                              Eigen::Index j, Scalar tol = Scalar(1e-10)) {
  if (j < 1 || j > T) throw Error(ErrorCode::kInvalidArgument, "j must lie in [1, T]");
  const Eigen::Index nx = sys.nx();
  const VectorX<Scalar> zero_u = VectorX<Scalar>::Zero((T - 1) * sys.nu());
  const TrajectoryManifold<Scalar> tm = build_trajectory_manifold(sys, T, zero_u);

  std::vector<Eigen::Index> d;
  for (Eigen::Index i = 0; i < tm.manifold.n(); ++i) {
    if (i < (j - 1) * nx || i >= j * nx) d.push_back(i);
  }
  const IndexSetFamily<Scalar> family = make_family(tm.manifold, {d});

  MatrixX<Scalar> generic(tm.manifold.n(), nx);
  for (Eigen::Index k = 0; k < nx; ++k) {
    const auto w = adjacency_direction(tm.manifold, family, (j - 1) * nx + k, 0);
    generic.col(k) = w.direction;
  }
  const std::vector<MatrixX<Scalar>> powers = internal::inverse_powers(sys.A, T);
  const MatrixX<Scalar> closed = tm.nullspace * powers[static_cast<std::size_t>(j - 1)];
  const Scalar scale = std::max(Scalar(1), closed.template lpNorm<Eigen::Infinity>());
  return (generic - closed).template lpNorm<Eigen::Infinity>() <= tol * scale;
}

/// Per-step output-noise model for the closed loop. Structured noise draws a
/// single eta per trajectory and emits gamma(t) = C_b A_b^t sqrt(Sigma) eta;
/// the i.i.d. baseline draws fresh gamma(t) ~ N(0, sigma_iid^2 I) each step.
template <class Scalar>
struct ControlNoiseModel {
  enum class Kind { kStructured, kIid };
  Kind kind = Kind::kStructured;
  MatrixX<Scalar> C_b;         // n_y x n_b
  MatrixX<Scalar> A_b;         // n_b x n_b
  MatrixX<Scalar> sigma_sqrt;  // n_b x n_b
  Scalar sigma_iid = Scalar(0);
  Eigen::Index n_y = 1;

  static ControlNoiseModel none(Eigen::Index ny) {
    ControlNoiseModel m;
    m.kind = Kind::kIid;
    m.sigma_iid = Scalar(0);
    m.n_y = ny;
    return m;
  }
};

template <class Scalar>
struct ControlNoiseDesign {
  MatrixX<Scalar> Sigma;       // n_b x n_b SPD
  MatrixX<Scalar> sigma_sqrt;  // symmetric sqrt of Sigma
  MatrixX<Scalar> constraints; // columns A^{1-j} v_k over (j, k)
  ControlNoiseModel<Scalar> model;
};

/// Trajectory-level Gaussian design via the closed-form constraint vectors
/// A^{1-j} v_k: Sigma >= (mu/y)^2 (A^{1-j} v_k)(A^{1-j} v_k)^T for all
/// (j, k), with y from the calibration profile. The realized output noise is
/// gamma(t) = C A^t sqrt(Sigma) eta with a single eta ~ N(0, I_{n_x}) per
/// trajectory.
template <class Scalar>
ControlNoiseDesign<Scalar> design_control_noise(const LtiSystem<Scalar>& sys,
                                                Eigen::Index T,
                                                const PrivacyBudget<Scalar>& budget,
                                                GaussianStrategy strategy = GaussianStrategy::kIsotropic,
                                                Scalar slack = Scalar(1)) {
  budget.validate();
  if (budget.delta == Scalar(0))
    throw Error(ErrorCode::kDeltaZero, "Gaussian calibration requires delta > 0");
  if (!(slack >= Scalar(1)))
    throw Error(ErrorCode::kInvalidArgument, "slack must be >= 1");
  observability_matrix(sys, T);

  const Eigen::Index nx = sys.nx();
  const std::vector<MatrixX<Scalar>> powers = internal::inverse_powers(sys.A, T);

  MatrixX<Scalar> N(nx, T * nx);
  for (Eigen::Index j = 0; j < T; ++j) N.middleCols(j * nx, nx) = powers[static_cast<std::size_t>(j)];

  const Scalar y = loss_tail_inverse(budget.epsilon, budget.delta);
  const Scalar c = slack * slack * budget.mu * budget.mu / (y * y);
  Scalar lam_star = Scalar(0);
  for (Eigen::Index k = 0; k < N.cols(); ++k)
    lam_star = std::max(lam_star, N.col(k).squaredNorm());

  MatrixX<Scalar> sigma = c * lam_star * MatrixX<Scalar>::Identity(nx, nx);
  if (strategy == GaussianStrategy::kTraceMin)
    sigma = internal::trace_min_sigma(c, N, sigma);
  const Scalar v = internal::worst_constraint_violation(sigma, c, N);
  sigma += (std::max(Scalar(0), -v) + Scalar(1e-14) * std::max(Scalar(1), sigma.trace())) *
           MatrixX<Scalar>::Identity(nx, nx);

  ControlNoiseDesign<Scalar> design;
  design.Sigma = sigma;
  design.sigma_sqrt = internal::symmetric_sqrt(sigma);
  design.constraints = N;
  design.model.kind = ControlNoiseModel<Scalar>::Kind::kStructured;
  design.model.C_b = sys.C;
  design.model.A_b = sys.A;
  design.model.sigma_sqrt = design.sigma_sqrt;
  design.model.n_y = sys.ny();
  return design;
}

/// NoiseStructure over the stacked trajectory with lambda_bar = O_T (the
/// structured, non-orthonormal basis F D_perp) and the designed Sigma; the
/// form consumed by verify_gaussian.
template <class Scalar>
NoiseStructure<Scalar> control_noise_structure(const LtiSystem<Scalar>& sys,
                                               Eigen::Index T,
                                               const ControlNoiseDesign<Scalar>& design) {
  const ObservabilityInfo<Scalar> obs = observability_matrix(sys, T);
  return make_gaussian_noise(obs.matrix, design.Sigma);
}

/// Query matrix of the trajectory mechanism, F = I_T kron C.
template <class Scalar>
MatrixX<Scalar> trajectory_query(const LtiSystem<Scalar>& sys, Eigen::Index T) {
  const Eigen::Index nx = sys.nx();
  const Eigen::Index ny = sys.ny();
  MatrixX<Scalar> F = MatrixX<Scalar>::Zero(T * ny, T * nx);
  for (Eigen::Index t = 0; t < T; ++t) F.block(t * ny, t * nx, ny, nx) = sys.C;
  return F;
}

/// Fresh per-step output noise calibrated so the full-trajectory mechanism
/// with Lambda = sigma I meets the same budget over the same manifold:
/// sigma = mu Delta_N(I) / y.
template <class Scalar>
ControlNoiseModel<Scalar> iid_baseline_noise(const LtiSystem<Scalar>& sys, Eigen::Index T,
                                             const PrivacyBudget<Scalar>& budget) {
  budget.validate();
  if (budget.delta == Scalar(0))
    throw Error(ErrorCode::kDeltaZero, "Gaussian calibration requires delta > 0");
  const VectorX<Scalar> zero_u = VectorX<Scalar>::Zero((T - 1) * sys.nu());
  const TrajectoryManifold<Scalar> tm = build_trajectory_manifold(sys, T, zero_u);
  const IndexSetFamily<Scalar> family = trajectory_block_family(tm.manifold, sys.nx(), T);
  const MatrixX<Scalar> F = trajectory_query(sys, T);
  const MatrixX<Scalar> identity = MatrixX<Scalar>::Identity(T * sys.ny(), T * sys.ny());
  const SensitivityReport<Scalar> sens = sensitivity(F, tm.manifold, family, identity);
  const Scalar y = loss_tail_inverse(budget.epsilon, budget.delta);

  ControlNoiseModel<Scalar> model;
  model.kind = ControlNoiseModel<Scalar>::Kind::kIid;
  model.sigma_iid = budget.mu * sens.delta_N / y;
  model.n_y = sys.ny();
  return model;
}

/// Static output-feedback controller with a Luenberger observer:
/// u(t) = -K_P^T (xhat(t) - x_r(t)),
/// xhat(t+1) = A xhat(t) + B u(t) + L (yhat(t) - C xhat(t)).
template <class Scalar>
struct OutputFeedbackController {
  MatrixX<Scalar> K_P;    // n_x x n_u
  MatrixX<Scalar> L_obs;  // n_x x n_y
  std::function<VectorX<Scalar>(Eigen::Index)> reference;  // t -> x_r(t)
};

template <class Scalar>
struct TrajectoryRecord {
  MatrixX<Scalar> states;             // T x n_x
  MatrixX<Scalar> estimates;          // T x n_x
  MatrixX<Scalar> controls;           // (T-1) x n_u
  MatrixX<Scalar> perturbed_outputs;  // T x n_y
  MatrixX<Scalar> noise_values;       // T x n_y, the injected gamma(t)
  VectorX<Scalar> eta;                // per-trajectory draw (structured only)
  MatrixX<Scalar> tracking_errors;    // T x n_x
};

template <class Scalar>
TrajectoryRecord<Scalar> run_closed_loop(const LtiSystem<Scalar>& sys,
                                         const OutputFeedbackController<Scalar>& ctrl,
                                         const ControlNoiseModel<Scalar>& noise,
                                         Eigen::Index T, std::uint64_t seed,
                                         VectorX<Scalar> x0 = VectorX<Scalar>(),
                                         VectorX<Scalar> xhat0 = VectorX<Scalar>()) {
  const Eigen::Index nx = sys.nx();
  const Eigen::Index nu = sys.nu();
  const Eigen::Index ny = sys.ny();
  if (T < 2) throw Error(ErrorCode::kInvalidArgument, "T must be >= 2");
  if (x0.size() == 0) x0 = VectorX<Scalar>::Zero(nx);
  if (xhat0.size() == 0) xhat0 = VectorX<Scalar>::Zero(nx);
  if (x0.size() != nx || xhat0.size() != nx)
    throw Error(ErrorCode::kDimensionMismatch, "initial states must have dimension n_x");

  CounterRng rng(seed);
  const bool structured = noise.kind == ControlNoiseModel<Scalar>::Kind::kStructured;
  VectorX<Scalar> w;  // A_b^t sqrt(Sigma) eta, advanced in place
  TrajectoryRecord<Scalar> rec;
  if (structured) {
    rec.eta = rng.template normal_vector<Scalar>(noise.A_b.rows());
    w = noise.sigma_sqrt * rec.eta;
  }

  rec.states.resize(T, nx);
  rec.estimates.resize(T, nx);
  rec.controls.resize(T - 1, nu);
  rec.perturbed_outputs.resize(T, ny);
  rec.noise_values.resize(T, ny);
  rec.tracking_errors.resize(T, nx);

  VectorX<Scalar> x = x0;
  VectorX<Scalar> xhat = xhat0;
  for (Eigen::Index t = 0; t < T; ++t) {
    VectorX<Scalar> gamma;
    if (structured) {
      gamma = noise.C_b * w;
      w = noise.A_b * w;
    } else if (noise.sigma_iid > Scalar(0)) {
      gamma = noise.sigma_iid * rng.template normal_vector<Scalar>(ny);
    } else {
      gamma = VectorX<Scalar>::Zero(ny);
    }
    const VectorX<Scalar> yhat = sys.C * x + gamma;
    const VectorX<Scalar> xref = ctrl.reference(t);
    const VectorX<Scalar> u = -ctrl.K_P.transpose() * (xhat - xref);

    rec.states.row(t) = x.transpose();
    rec.estimates.row(t) = xhat.transpose();
    rec.perturbed_outputs.row(t) = yhat.transpose();
    rec.noise_values.row(t) = gamma.transpose();
    rec.tracking_errors.row(t) = (x - xref).transpose();

    if (t + 1 < T) {
      rec.controls.row(t) = u.transpose();
      const VectorX<Scalar> innovation = yhat - sys.C * xhat;
      x = sys.A * x + sys.B * u;
      xhat = sys.A * xhat + sys.B * u + ctrl.L_obs * innovation;
      if (x.template lpNorm<Eigen::Infinity>() > Scalar(1e12))
        throw Error(ErrorCode::kNumericalBlowup, "state magnitude exceeded 1e12");
    }
  }
  return rec;
}

template <class Scalar>
struct TrackingStatistics {
  MatrixX<Scalar> mean;  // T x n_x
  MatrixX<Scalar> mse;   // T x n_x
};

template <class Scalar>
TrackingStatistics<Scalar> tracking_statistics(
    const std::vector<TrajectoryRecord<Scalar>>& records,
    const std::function<VectorX<Scalar>(Eigen::Index)>& reference) {
  if (records.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 records");
  const Eigen::Index T = records.front().states.rows();
  const Eigen::Index nx = records.front().states.cols();

  TrackingStatistics<Scalar> stats;
  stats.mean = MatrixX<Scalar>::Zero(T, nx);
  stats.mse = MatrixX<Scalar>::Zero(T, nx);
  for (const auto& rec : records) {
    for (Eigen::Index t = 0; t < T; ++t) {
      const VectorX<Scalar> err = rec.states.row(t).transpose() - reference(t);
      stats.mean.row(t) += err.transpose();
      stats.mse.row(t) += err.array().square().matrix().transpose();
    }
  }
  const Scalar count = static_cast<Scalar>(records.size());
  stats.mean /= count;
  stats.mse /= count;
  return stats;
}

}  // namespace affinedp

#endif  // AFFINEDP_CONTROL_HPP_

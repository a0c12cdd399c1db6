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

#ifndef AFFINEDP_MECHANISM_HPP_
#define AFFINEDP_MECHANISM_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

#include <Eigen/Dense>

#include "affinedp/calibration.hpp"
#include "affinedp/errors.hpp"
#include "affinedp/rng.hpp"

namespace affinedp {

/// Linear query with structured noise: M(x) = F x + Lambda eta.
template <class Scalar>
struct LinearQueryMechanism {
  MatrixX<Scalar> F;  // m x n
  NoiseStructure<Scalar> noise;
  std::uint64_t seed = 0;

  LinearQueryMechanism(MatrixX<Scalar> F_in, NoiseStructure<Scalar> noise_in,
                       std::uint64_t seed_in = 0)
      : F(std::move(F_in)), noise(std::move(noise_in)), seed(seed_in) {
    if (noise.effective_lambda.rows() != F.rows())
      throw Error(ErrorCode::kDimensionMismatch,
                  "noise rows must match query output dimension");
  }
};

/// Draws eta with r i.i.d. standard Gaussian or standard Laplace entries and
/// returns Lambda eta.
template <class Scalar>
VectorX<Scalar> sample_noise(const NoiseStructure<Scalar>& noise, CounterRng& rng) {
  const Eigen::Index r = noise.r();
  const VectorX<Scalar> eta = (noise.family == NoiseFamily::kGaussian)
                                  ? rng.template normal_vector<Scalar>(r)
                                  : rng.template laplace_vector<Scalar>(r);
  return noise.effective_lambda * eta;
}

template <class Scalar>
VectorX<Scalar> apply(const LinearQueryMechanism<Scalar>& mech,
                      const VectorX<Scalar>& x, CounterRng& rng) {
  if (x.size() != mech.F.cols())
    throw Error(ErrorCode::kDimensionMismatch, "input dimension must equal n");
  return mech.F * x + sample_noise(mech.noise, rng);
}

/// Deterministic path with a caller-fixed eta; the testing hook for the
/// noiseless query F x (eta = 0).
template <class Scalar>
VectorX<Scalar> apply_with_eta(const LinearQueryMechanism<Scalar>& mech,
                               const VectorX<Scalar>& x,
                               const VectorX<Scalar>& eta) {
  if (x.size() != mech.F.cols())
    throw Error(ErrorCode::kDimensionMismatch, "input dimension must equal n");
  if (eta.size() != mech.noise.r())
    throw Error(ErrorCode::kDimensionMismatch, "eta dimension must equal r");
  return mech.F * x + mech.noise.effective_lambda * eta;
}

/// Exact delta at which a Gaussian pair with squared reduced distance
/// eta_sq = ||pinv(Lambda) F (x - x')||^2 is (epsilon, delta)-indistinguishable.
/// Identical to kappa(epsilon, sqrt(eta_sq)); zero distance gives zero.
template <class Scalar>
Scalar gaussian_privacy_profile(Scalar eta_sq, Scalar epsilon) {
  if (!(eta_sq >= Scalar(0)))
    throw Error(ErrorCode::kInvalidArgument, "eta_sq must be >= 0");
  if (eta_sq == Scalar(0)) return Scalar(0);
  return kappa(epsilon, std::sqrt(eta_sq));
}

template <class Scalar>
struct AuditResult {
  Scalar epsilon = Scalar(0);
  // Monte Carlo estimate of P(L_{x,x'} >= eps) - e^eps P(L_{x',x} <= -eps).
  Scalar lhs_estimate = Scalar(0);
  Scalar std_error = Scalar(0);
  std::uint64_t trials = 0;
  std::optional<Scalar> analytic_delta;  // Gaussian closed form
  // Pair distinguishable with certainty: F(x - x') leaves the column space
  // of Lambda, so the privacy loss is infinite.
  bool kernel_mismatch = false;
  Scalar p_upper = Scalar(0);  // estimate of P(L_{x,x'} >= eps)
  Scalar p_lower = Scalar(0);  // estimate of P(L_{x',x} <= -eps)
};

/// Monte Carlo privacy-loss audit of the pair (x, x'). Densities are
/// evaluated on the reduced mechanism pinv(Lambda) F x + eta, since the raw
/// m-dimensional noise is degenerate when r < m. Each trial uses an
/// independent substream of `seed`, so results are reproducible and
/// parallelizable.
template <class Scalar>
AuditResult<Scalar> audit_empirical(const LinearQueryMechanism<Scalar>& mech,
                                    const VectorX<Scalar>& x,
                                    const VectorX<Scalar>& xp, Scalar epsilon,
                                    std::uint64_t trials, std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorCode::kInvalidArgument, "trials must be positive");
  const MatrixX<Scalar>& lambda = mech.noise.effective_lambda;
  const Eigen::Index r = lambda.cols();

  AuditResult<Scalar> result;
  result.epsilon = epsilon;
  result.trials = trials;

  const VectorX<Scalar> fdiff = mech.F * (x - xp);

  // Kernel check: rows of the orthogonal complement of col(Lambda).
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(lambda, Eigen::ComputeFullU);
  Eigen::Index rank = 0;
  if (lambda.size() > 0 && svd.singularValues().size() > 0) {
    const Scalar smax = svd.singularValues()[0];
    for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
      if (svd.singularValues()[k] > Scalar(1e-12) * smax) ++rank;
    }
  }
  const MatrixX<Scalar> lambda_ker = svd.matrixU().rightCols(lambda.rows() - rank).transpose();
  const Scalar fd_norm = fdiff.template lpNorm<Eigen::Infinity>();
  if (lambda_ker.rows() > 0 && fd_norm > Scalar(0)) {
    const Scalar leak = (lambda_ker * fdiff).template lpNorm<Eigen::Infinity>();
    if (leak > Scalar(1e-8) * fd_norm) {
      result.kernel_mismatch = true;
      result.lhs_estimate = std::numeric_limits<Scalar>::infinity();
      result.analytic_delta = Scalar(1);
      return result;
    }
  }

  // Reduced means b = pinv(Lambda) F x and b' for the r-dimensional
  // mechanism; for Gaussian noise L_{x,x'} ~ N(eta/2, eta) with
  // eta = ||b - b'||^2.
  Eigen::HouseholderQR<MatrixX<Scalar>> qr(lambda);
  const VectorX<Scalar> b = qr.solve(mech.F * x);
  const VectorX<Scalar> bp = qr.solve(mech.F * xp);
  const VectorX<Scalar> shift = b - bp;

  const bool gaussian = mech.noise.family == NoiseFamily::kGaussian;
  if (gaussian) result.analytic_delta = gaussian_privacy_profile(shift.squaredNorm(), epsilon);

  const auto log_ratio = [&](const VectorX<Scalar>& y) -> Scalar {
    // log g(y - b) - log g(y - b').
    if (gaussian)
      return Scalar(0.5) * ((y - bp).squaredNorm() - (y - b).squaredNorm());
    return (y - bp).template lpNorm<1>() - (y - b).template lpNorm<1>();
  };

  std::uint64_t count_upper = 0;  // L_{x,x'} >= eps with Y ~ M2(x)
  std::uint64_t count_lower = 0;  // L_{x',x} <= -eps with Y' ~ M2(x')
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    CounterRng rng = CounterRng::substream(seed, trial);
    const VectorX<Scalar> eta = gaussian ? rng.template normal_vector<Scalar>(r)
                                         : rng.template laplace_vector<Scalar>(r);
    const VectorX<Scalar> etap = gaussian ? rng.template normal_vector<Scalar>(r)
                                          : rng.template laplace_vector<Scalar>(r);
    if (log_ratio(b + eta) >= epsilon) ++count_upper;
    // L_{x',x}(y) = -log_ratio(y); the tail event is log_ratio(Y') >= eps.
    if (log_ratio(bp + etap) >= epsilon) ++count_lower;
  }

  const Scalar n = static_cast<Scalar>(trials);
  const Scalar p1 = static_cast<Scalar>(count_upper) / n;
  const Scalar p2 = static_cast<Scalar>(count_lower) / n;
  const Scalar eeps = std::exp(epsilon);
  result.p_upper = p1;
  result.p_lower = p2;
  result.lhs_estimate = p1 - eeps * p2;
  result.std_error =
      std::sqrt(p1 * (Scalar(1) - p1) / n + eeps * eeps * p2 * (Scalar(1) - p2) / n);
  return result;
}

}  // namespace affinedp

#endif  // AFFINEDP_MECHANISM_HPP_

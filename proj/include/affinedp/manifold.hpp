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

#ifndef AFFINEDP_MANIFOLD_HPP_
#define AFFINEDP_MANIFOLD_HPP_

#include <algorithm>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "affinedp/errors.hpp"

namespace affinedp {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Affine manifold {x in R^n : D x + b = 0} with D of full row rank q < n
/// and no entry of x determined by the constraints alone. Construct through
/// validate_manifold(), which checks both properties numerically.
template <class Scalar>
struct AffineManifold {
  MatrixX<Scalar> D;  // q x n constraint matrix
  VectorX<Scalar> b;  // offset, length q
  Scalar tol = Scalar(1e-10);  // relative rank tolerance used at validation

  Eigen::Index n() const { return D.cols(); }
  Eigen::Index q() const { return D.rows(); }

  VectorX<Scalar> residual(const VectorX<Scalar>& x) const {
    if (q() == 0) return VectorX<Scalar>::Zero(0);
    return D * x + b;
  }

  /// Default membership tolerance: ||Dx+b||_inf <= 1e-8 * (1 + ||b||_inf).
  Scalar membership_tolerance() const {
    const Scalar bn = (q() == 0) ? Scalar(0) : b.template lpNorm<Eigen::Infinity>();
    return Scalar(1e-8) * (Scalar(1) + bn);
  }

  bool contains(const VectorX<Scalar>& x, Scalar membership_tol = Scalar(-1)) const {
    if (q() == 0) return true;
    const Scalar t = membership_tol > Scalar(0) ? membership_tol : membership_tolerance();
    return residual(x).template lpNorm<Eigen::Infinity>() <= t;
  }
};

/// The index sets d_j (|d_j| = q, columns D_{d_j} nonsingular) together with
/// cached factorizations of each D_{d_j}. When `truncated` is false the
/// family is exhaustive over all C(n, q) candidates.
template <class Scalar>
struct IndexSetFamily {
  std::vector<std::vector<Eigen::Index>> sets;         // sorted, each of size q
  std::vector<std::vector<Eigen::Index>> complements;  // sorted, each of size n-q
  std::vector<Eigen::PartialPivLU<MatrixX<Scalar>>> factors;
  bool truncated = false;

  std::size_t size() const { return sets.size(); }

  bool in_basis(std::size_t j, Eigen::Index i) const {
    const auto& d = sets[j];
    return std::binary_search(d.begin(), d.end(), i);
  }
};

/// Adjacency between two points on the manifold: they differ by
/// `magnitude` along `direction`, where direction is the unit-magnitude
/// column with entry `entry` equal to 1, zeros on the rest of the
/// complement of set `set_id`, and the basis entries adjusted to stay on
/// the manifold.
template <class Scalar>
struct AdjacencyWitness {
  Eigen::Index entry = 0;    // i, 0-based
  std::size_t set_id = 0;    // index into the family
  VectorX<Scalar> direction;
  Scalar magnitude = Scalar(0);
};

namespace internal {

template <class Scalar>
MatrixX<Scalar> select_columns(const MatrixX<Scalar>& M,
                               const std::vector<Eigen::Index>& idx) {
  MatrixX<Scalar> out(M.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) out.col(c) = M.col(idx[c]);
  return out;
}

template <class Scalar>
std::vector<Eigen::Index> complement_of(const std::vector<Eigen::Index>& d,
                                        Eigen::Index n) {
  std::vector<Eigen::Index> comp;
  comp.reserve(n - static_cast<Eigen::Index>(d.size()));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (k < d.size() && d[k] == i) {
      ++k;
    } else {
      comp.push_back(i);
    }
  }
  return comp;
}

}  // namespace internal

/// Checks rank(D) = q and that no entry is identifiable, i.e.
/// rank([D; e_i^T]) = q + 1 for every i (equivalently: no row of an
/// orthonormal kernel basis vanishes). Ranks use singular values
/// thresholded at tol * sigma_max.
template <class Scalar>
AffineManifold<Scalar> validate_manifold(const MatrixX<Scalar>& D,
                                         const VectorX<Scalar>& b,
                                         Scalar tol = Scalar(1e-10)) {
  if (tol <= Scalar(0)) throw Error(ErrorCode::kInvalidArgument, "tol must be positive");
  const Eigen::Index q = D.rows();
  const Eigen::Index n = D.cols();
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "input dimension must be >= 1");
  if (b.size() != q) throw Error(ErrorCode::kDimensionMismatch, "b length must equal rows of D");

  AffineManifold<Scalar> m{D, b, tol};
  if (q == 0) return m;

  Eigen::JacobiSVD<MatrixX<Scalar>> svd(D, Eigen::ComputeFullV);
  const Scalar smax = svd.singularValues()[0];
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
    if (svd.singularValues()[k] > tol * smax) ++rank;
  }
  if (rank < q) throw Error(ErrorCode::kRankDeficient, "constraint matrix is not full row rank");

  // Row i of the kernel basis vanishes iff e_i lies in the row space of D,
  // which pins x_i to a single value on the manifold.
  const MatrixX<Scalar> kernel = svd.matrixV().rightCols(n - rank);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (kernel.row(i).norm() <= tol) {
      throw Error(ErrorCode::kEntryIdentifiable,
                  "entry " + std::to_string(i + 1) + " is determined by the manifold", i);
    }
  }
  return m;
}

/// Orthonormal basis of ker(D), n x (n - q).
template <class Scalar>
MatrixX<Scalar> nullspace_basis(const AffineManifold<Scalar>& m, Scalar tol = Scalar(-1)) {
  const Eigen::Index n = m.n();
  const Eigen::Index q = m.q();
  if (q == 0) return MatrixX<Scalar>::Identity(n, n);
  const Scalar t = tol > Scalar(0) ? tol : m.tol;
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(m.D, Eigen::ComputeFullV);
  const Scalar smax = svd.singularValues()[0];
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
    if (svd.singularValues()[k] > t * smax) ++rank;
  }
  return svd.matrixV().rightCols(n - rank);
}

/// Builds a family from explicit index sets (0-based, need not be sorted),
/// verifying nonsingularity of every D_{d_j}. Used by callers that know the
/// bases in closed form and skip enumeration.
template <class Scalar>
IndexSetFamily<Scalar> make_family(const AffineManifold<Scalar>& m,
                                   std::vector<std::vector<Eigen::Index>> sets) {
  const Eigen::Index q = m.q();
  IndexSetFamily<Scalar> family;
  for (auto& d : sets) {
    std::sort(d.begin(), d.end());
    if (static_cast<Eigen::Index>(d.size()) != q)
      throw Error(ErrorCode::kInvalidArgument, "index set size must equal q");
    if (q == 0) {
      family.sets.push_back({});
      family.complements.push_back(internal::complement_of<Scalar>({}, m.n()));
      family.factors.emplace_back();
      continue;
    }
    MatrixX<Scalar> Dd = internal::select_columns(m.D, d);
    Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(Dd);
    qr.setThreshold(m.tol);
    if (qr.rank() < q)
      throw Error(ErrorCode::kNoBasis, "supplied index set has singular submatrix");
    family.complements.push_back(internal::complement_of<Scalar>(d, m.n()));
    family.factors.emplace_back(Dd);
    family.sets.push_back(std::move(d));
  }
  return family;
}

/// Enumerates all size-q subsets with nonsingular D_{d_j} in lexicographic
/// order. Stops after examining `cap` candidate subsets and flags
/// `truncated` when C(n, q) exceeds the cap.
template <class Scalar>
IndexSetFamily<Scalar> enumerate_bases(const AffineManifold<Scalar>& m,
                                       std::size_t cap = 10000) {
  const Eigen::Index n = m.n();
  const Eigen::Index q = m.q();
  IndexSetFamily<Scalar> family;

  if (q == 0) {
    family.sets.push_back({});
    family.complements.push_back(internal::complement_of<Scalar>({}, n));
    family.factors.emplace_back();
    return family;
  }

  std::vector<Eigen::Index> comb(q);
  for (Eigen::Index k = 0; k < q; ++k) comb[k] = k;
  std::size_t examined = 0;
  bool more = true;
  while (more) {
    if (examined == cap) {
      family.truncated = true;
      break;
    }
    ++examined;
    MatrixX<Scalar> Dd = internal::select_columns(m.D, comb);
    Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(Dd);
    qr.setThreshold(m.tol);
    if (qr.rank() == q) {
      family.sets.push_back(comb);
      family.complements.push_back(internal::complement_of<Scalar>(comb, n));
      family.factors.emplace_back(Dd);
    }
    // next lexicographic combination
    more = false;
    for (Eigen::Index k = q - 1; k >= 0; --k) {
      if (comb[k] < n - q + k) {
        ++comb[k];
        for (Eigen::Index l = k + 1; l < q; ++l) comb[l] = comb[l - 1] + 1;
        more = true;
        break;
      }
    }
  }

  if (family.sets.empty())
    throw Error(ErrorCode::kNoBasis, "no nonsingular index set found (tolerance failure?)");
  return family;
}

/// The direction along which entry i can move while the basis entries d_j
/// compensate: e_i - E_{d_j} D_{d_j}^{-1} D e_i. Entry i equals 1, the rest
/// of the complement is zero, and D * direction = 0.
template <class Scalar>
AdjacencyWitness<Scalar> adjacency_direction(const AffineManifold<Scalar>& m,
                                             const IndexSetFamily<Scalar>& family,
                                             Eigen::Index i, std::size_t j) {
  if (j >= family.size()) throw Error(ErrorCode::kInvalidArgument, "set id out of range");
  if (i < 0 || i >= m.n()) throw Error(ErrorCode::kInvalidArgument, "entry index out of range");
  if (family.in_basis(j, i))
    throw Error(ErrorCode::kIndexInBasis, "entry belongs to the index set; no direction defined");

  AdjacencyWitness<Scalar> w;
  w.entry = i;
  w.set_id = j;
  w.direction = VectorX<Scalar>::Zero(m.n());
  w.direction[i] = Scalar(1);
  w.magnitude = Scalar(1);
  if (m.q() > 0) {
    const VectorX<Scalar> z = family.factors[j].solve(m.D.col(i));
    const auto& d = family.sets[j];
    for (std::size_t k = 0; k < d.size(); ++k) w.direction[d[k]] -= z[static_cast<Eigen::Index>(k)];
  }
  return w;
}

/// Searches for a witness that x and x' are mu-adjacent over the manifold:
/// some (i, j) with i in the complement of d_j such that |x_i - x_i'| <= mu,
/// the remaining complement entries agree, and the basis entries satisfy the
/// compensation equation. Search order is i ascending, then family order;
/// the first match is returned. `tol` doubles as the membership and the
/// entry-equality tolerance (defaults to membership_tolerance()).
template <class Scalar>
std::optional<AdjacencyWitness<Scalar>> is_adjacent(const AffineManifold<Scalar>& m,
                                                    const IndexSetFamily<Scalar>& family,
                                                    const VectorX<Scalar>& x,
                                                    const VectorX<Scalar>& xp,
                                                    Scalar mu,
                                                    Scalar tol = Scalar(-1)) {
  if (mu <= Scalar(0)) throw Error(ErrorCode::kInvalidArgument, "mu must be positive");
  if (x.size() != m.n() || xp.size() != m.n())
    throw Error(ErrorCode::kDimensionMismatch, "point dimension must equal n");
  const Scalar t = tol > Scalar(0) ? tol : m.membership_tolerance();
  if (!m.contains(x, t) || !m.contains(xp, t))
    throw Error(ErrorCode::kPointOffManifold, "input point violates D x + b = 0");

  const VectorX<Scalar> diff = x - xp;
  const Scalar eq_tol = t * (Scalar(1) + diff.template lpNorm<Eigen::Infinity>());

  for (Eigen::Index i = 0; i < m.n(); ++i) {
    if (std::abs(diff[i]) > mu + t) continue;
    for (std::size_t j = 0; j < family.size(); ++j) {
      if (family.in_basis(j, i)) continue;
      bool rest_equal = true;
      for (Eigen::Index k : family.complements[j]) {
        if (k == i) continue;
        if (std::abs(diff[k]) > eq_tol) {
          rest_equal = false;
          break;
        }
      }
      if (!rest_equal) continue;
      // Basis compensation: x_d - x'_d = -D_d^{-1} D_{-d} (x_{-d} - x'_{-d}).
      // Automatic for points on the manifold; checked for robustness.
      bool basis_ok = true;
      if (m.q() > 0) {
        const auto& d = family.sets[j];
        const auto& comp = family.complements[j];
        VectorX<Scalar> diff_comp(static_cast<Eigen::Index>(comp.size()));
        for (std::size_t c = 0; c < comp.size(); ++c) diff_comp[static_cast<Eigen::Index>(c)] = diff[comp[c]];
        const VectorX<Scalar> rhs =
            -family.factors[j].solve(internal::select_columns(m.D, comp) * diff_comp);
        for (std::size_t c = 0; c < d.size(); ++c) {
          if (std::abs(diff[d[c]] - rhs[static_cast<Eigen::Index>(c)]) > eq_tol) {
            basis_ok = false;
            break;
          }
        }
      }
      if (!basis_ok) continue;
      AdjacencyWitness<Scalar> w = adjacency_direction(m, family, i, j);
      w.magnitude = diff[i];
      return w;
    }
  }
  return std::nullopt;
}

}  // namespace affinedp

#endif  // AFFINEDP_MANIFOLD_HPP_

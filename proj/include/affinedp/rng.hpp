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

#ifndef AFFINEDP_RNG_HPP_
#define AFFINEDP_RNG_HPP_

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace affinedp {

/// Counter-based generator: the k-th output is a fixed hash of
/// (seed, stream, k), so substreams indexed by (seed, trial) reproduce the
/// same values regardless of interleaving. Core mix is splitmix64, which is
/// stateless per counter value and portable across platforms.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : base_(mix(mix(seed + 0x9e3779b97f4a7c15ULL) ^ stream)), counter_(0) {}

  /// Derives the generator for substream `index` of `seed`; used for
  /// per-trial / per-run parallel-safe streams.
  static CounterRng substream(std::uint64_t seed, std::uint64_t index) {
    return CounterRng(seed, 0x6a09e667f3bcc909ULL + index);
  }

  std::uint64_t next_u64() {
    std::uint64_t z = base_ + (++counter_) * 0x9e3779b97f4a7c15ULL;
    return mix(z);
  }

  /// Uniform draw strictly inside (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; keeps the paired draw as a spare.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Standard Laplace with density exp(-|v|)/2 (variance 2).
  double laplace() {
    const double u = uniform() - 0.5;
    const double sign = (u < 0.0) ? -1.0 : 1.0;
    return -sign * std::log1p(-2.0 * std::abs(u));
  }

  template <class Scalar = double>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> normal_vector(Eigen::Index r) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(r);
    for (Eigen::Index i = 0; i < r; ++i) v[i] = static_cast<Scalar>(normal());
    return v;
  }

  template <class Scalar = double>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> laplace_vector(Eigen::Index r) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(r);
    for (Eigen::Index i = 0; i < r; ++i) v[i] = static_cast<Scalar>(laplace());
    return v;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t base_;
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace affinedp

#endif  // AFFINEDP_RNG_HPP_

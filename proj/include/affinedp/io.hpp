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

#ifndef AFFINEDP_IO_HPP_
#define AFFINEDP_IO_HPP_

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "affinedp/calibration.hpp"
#include "affinedp/consensus.hpp"
#include "affinedp/control.hpp"
#include "affinedp/mechanism.hpp"

namespace affinedp::io {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Problem file for calibrate / verify / audit: nested row-major arrays
/// under "D" and "F", flat arrays under "b", "x", "x_prime"; optional "tol",
/// "lambda" (effective noise matrix), or "lambda_bar" + "sigma".
struct ProblemSpec {
  std::optional<Matrix> F;
  std::optional<Matrix> D;
  std::optional<Vector> b;
  std::optional<double> tol;
  std::optional<Matrix> lambda;
  std::optional<Matrix> lambda_bar;
  std::optional<Matrix> sigma_matrix;
  std::optional<double> sigma_scalar;
  std::optional<Vector> x;
  std::optional<Vector> x_prime;
};

ProblemSpec load_problem(const std::string& path);

/// Graph file: {"n": ..., "edges": [[i, j, w], ...]} with 1-based node
/// indices, or [[i, j], ...] plus "weight_all". Optional "x0" carries
/// initial states for simulations.
struct GraphConfig {
  WeightedGraph<double> graph;
  std::optional<Vector> x0;
};

GraphConfig load_graph(const std::string& path);

/// System file: "A", "B", "C" (nested arrays), "Ts", "K_P", "L_obs", "T",
/// optional "x0", "xhat0", and "private_block" (1-based state indices whose
/// sub-dynamics carry the privacy design; empty means the full state).
struct SystemConfig {
  LtiSystem<double> system;
  Matrix K_P;
  Matrix L_obs;
  Eigen::Index T = 100;
  Vector x0;
  Vector xhat0;
  std::vector<Eigen::Index> private_block;  // 0-based after loading
};

SystemConfig load_system(const std::string& path);

/// Round-trip-safe decimal formatting (17 significant digits).
std::string format_double(double v);

/// Report serialization with the fixed keys delta_N, delta_L, argmax_i,
/// argmax_j, threshold, margin, verdict (indices 1-based on the wire). The
/// argmax pair follows `family`; threshold/margin/verdict come from the
/// verification report when present and are null otherwise.
std::string report_to_json(const SensitivityReport<double>& sens, NoiseFamily family,
                           const VerificationReport<double>* verification = nullptr);

std::string noise_to_json(const NoiseStructure<double>& noise);

const char* verdict_name(Verdict v);

/// CSV row "epsilon, lhs_estimate, std_error, trials, analytic_delta, verdict"
/// (header included). The verdict compares the estimate against
/// `delta_target` plus four standard errors; kernel mismatch always fails.
std::string audit_to_csv(const AuditResult<double>& result, double delta_target);

void write_file(const std::string& path, const std::string& content);

/// Per-run consensus CSV: run, t, node, state, error (sorted run, t, node).
void write_consensus_runs_csv(const std::string& path,
                              const std::vector<ConsensusRun<double>>& runs,
                              double target_average);

/// Aggregate consensus CSV: t, mean_error_node_1..n, mse, mse_bound.
void write_consensus_aggregate_csv(const std::string& path,
                                   const ConsensusStatistics<double>& stats,
                                   double mse_bound);

/// Per-run control CSV: t, x_*, xhat_*, u, yhat, ref_* for each run.
void write_control_runs_csv(const std::string& path,
                            const std::vector<TrajectoryRecord<double>>& records);

/// Aggregate control CSV: t, mean_err_1..n_x, mse_1..n_x.
void write_control_aggregate_csv(const std::string& path,
                                 const TrackingStatistics<double>& stats);

}  // namespace affinedp::io

#endif  // AFFINEDP_IO_HPP_

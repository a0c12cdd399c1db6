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
// Command-line front end: calibrate, verify, audit, sim-consensus,
// sim-control. All randomness flows from --seed; identical invocations
// produce byte-identical outputs. Exit codes: 0 success (and verify pass),
// 1 failed verification, 2 validation/config errors (error name on stderr).

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "affinedp/io.hpp"
#include "affinedp/presets.hpp"

namespace {

using namespace affinedp;
using io::format_double;
using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

constexpr std::uint64_t kDefaultSeed = 20240601;

struct BudgetFlags {
  double eps = 1.0;
  double delta = 0.0;
  double mu = 1.0;

  PrivacyBudget<double> budget() const { return {eps, delta, mu}; }
};

void add_budget_flags(CLI::App* cmd, BudgetFlags* flags) {
  cmd->add_option("--eps", flags->eps, "privacy parameter epsilon");
  cmd->add_option("--delta", flags->delta, "privacy parameter delta");
  cmd->add_option("--mu", flags->mu, "adjacency scale mu");
}

NoiseFamily parse_family(const std::string& name) {
  if (name == "gaussian") return NoiseFamily::kGaussian;
  if (name == "laplace") return NoiseFamily::kLaplace;
  throw Error(ErrorCode::kInvalidArgument, "family must be gaussian or laplace");
}

struct CalibrateArgs {
  std::string input;
  std::string preset;
  std::string family = "gaussian";
  std::string strategy = "isotropic";
  BudgetFlags budget;
  Index horizon = 100;
  std::size_t cap = 10000;
  std::string out;
};

int run_calibrate(const CalibrateArgs& args) {
  const NoiseFamily family = parse_family(args.family);
  const GaussianStrategy strategy = (args.strategy == "trace_min")
                                        ? GaussianStrategy::kTraceMin
                                        : GaussianStrategy::kIsotropic;
  PrivacyBudget<double> budget = args.budget.budget();

  Matrix F;
  AffineManifold<double> manifold;
  if (!args.preset.empty()) {
    if (args.preset != "consensus" && args.preset != "control-vehicle")
      throw Error(ErrorCode::kInvalidArgument, "unknown preset " + args.preset);
    const Index T = args.horizon;
    manifold = build_node_manifold<double>(T, Vector::Zero(T - 1));
    F = Matrix::Identity(T, T);
  } else if (!args.input.empty()) {
    const io::ProblemSpec spec = io::load_problem(args.input);
    if (!spec.F || !spec.D || !spec.b)
      throw Error(ErrorCode::kInvalidArgument, "calibrate input requires F, D, b");
    F = *spec.F;
    manifold = validate_manifold<double>(*spec.D, *spec.b, spec.tol.value_or(1e-10));
  } else {
    throw Error(ErrorCode::kInvalidArgument, "calibrate needs --input or --preset");
  }

  const IndexSetFamily<double> family_sets = enumerate_bases(manifold, args.cap);
  NoiseStructure<double> noise;
  VerificationReport<double> verification;
  if (family == NoiseFamily::kGaussian) {
    noise = design_gaussian(F, manifold, family_sets, budget, strategy);
    verification = verify_gaussian(F, manifold, family_sets, noise, budget);
  } else {
    noise = design_laplace(F, manifold, family_sets, budget);
    verification = verify_laplace(F, manifold, family_sets, noise, budget);
  }
  const SensitivityReport<double> sens =
      sensitivity(F, manifold, family_sets, noise.effective_lambda);

  // Per-coordinate noise level; for the presets this is the sigma of the
  // reference experiments.
  double sigma_per_coordinate = 0.0;
  for (Index r = 0; r < noise.effective_lambda.rows(); ++r)
    sigma_per_coordinate =
        std::max(sigma_per_coordinate, noise.effective_lambda.row(r).norm());
  std::cout << "family = " << args.family << "\n";
  std::cout << "r = " << noise.r() << "\n";
  std::cout << "sigma = " << format_double(sigma_per_coordinate) << "\n";
  if (!args.preset.empty() && args.preset == "control-vehicle") {
    const auto design = design_control_noise(presets::vehicle_private_subsystem(),
                                             args.horizon, budget, strategy);
    std::cout << "sqrt_Sigma = " << format_double(design.sigma_sqrt(0, 0)) << "\n";
  }
  std::cout << "delta_N = " << format_double(sens.delta_N) << "\n";
  std::cout << "delta_L = " << format_double(sens.delta_L) << "\n";
  std::cout << "verdict = " << io::verdict_name(verification.verdict) << "\n";

  if (!args.out.empty()) {
    io::write_file(args.out + "_noise.json", io::noise_to_json(noise));
    io::write_file(args.out + "_report.json",
                   io::report_to_json(sens, family, &verification));
  }
  return 0;
}

struct VerifyArgs {
  std::string input;
  std::string family = "gaussian";
  BudgetFlags budget;
  std::size_t cap = 10000;
  std::string out;
};

int run_verify(const VerifyArgs& args) {
  const NoiseFamily family = parse_family(args.family);
  const io::ProblemSpec spec = io::load_problem(args.input);
  if (!spec.F || !spec.D || !spec.b)
    throw Error(ErrorCode::kInvalidArgument, "verify input requires F, D, b");
  const AffineManifold<double> manifold =
      validate_manifold<double>(*spec.D, *spec.b, spec.tol.value_or(1e-10));
  const Matrix F = *spec.F;

  NoiseStructure<double> noise;
  if (spec.lambda) {
    // Effective noise matrix supplied directly.
    noise = (family == NoiseFamily::kGaussian)
                ? make_gaussian_noise<double>(
                      *spec.lambda,
                      Matrix::Identity(spec.lambda->cols(), spec.lambda->cols()))
                : make_laplace_noise<double>(*spec.lambda, 1.0);
  } else if (spec.lambda_bar && family == NoiseFamily::kGaussian && spec.sigma_matrix) {
    noise = make_gaussian_noise<double>(*spec.lambda_bar, *spec.sigma_matrix);
  } else if (spec.lambda_bar && family == NoiseFamily::kGaussian && spec.sigma_scalar) {
    Matrix sigma(1, 1);
    sigma << *spec.sigma_scalar * *spec.sigma_scalar;
    if (spec.lambda_bar->cols() != 1)
      throw Error(ErrorCode::kInvalidArgument, "scalar sigma needs a single-column lambda_bar");
    noise = make_gaussian_noise<double>(*spec.lambda_bar, sigma);
  } else if (spec.lambda_bar && family == NoiseFamily::kLaplace && spec.sigma_scalar) {
    noise = make_laplace_noise<double>(*spec.lambda_bar, *spec.sigma_scalar);
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "verify input requires lambda, or lambda_bar with sigma");
  }

  const IndexSetFamily<double> family_sets = enumerate_bases(manifold, args.cap);
  const PrivacyBudget<double> budget = args.budget.budget();
  const VerificationReport<double> report =
      (family == NoiseFamily::kGaussian)
          ? verify_gaussian(F, manifold, family_sets, noise, budget)
          : verify_laplace(F, manifold, family_sets, noise, budget);
  const SensitivityReport<double> sens =
      sensitivity(F, manifold, family_sets, noise.effective_lambda);

  std::cout << "verdict = " << io::verdict_name(report.verdict) << "\n";
  std::cout << "measured = " << format_double(report.measured_sensitivity) << "\n";
  std::cout << "threshold = " << format_double(report.threshold) << "\n";
  std::cout << "margin = " << format_double(report.margin) << "\n";
  if (report.verdict == Verdict::kIndeterminate)
    std::cout << "note: index-set family truncated; sensitivity is a lower bound\n";
  if (!args.out.empty())
    io::write_file(args.out, io::report_to_json(sens, family, &report));
  return report.verdict == Verdict::kPass ? 0 : 1;
}

struct AuditArgs {
  std::string input;
  std::string family = "gaussian";
  double eps = 1.0;
  double delta_target = -1.0;
  std::uint64_t trials = 100000;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

int run_audit(const AuditArgs& args) {
  const NoiseFamily family = parse_family(args.family);
  const io::ProblemSpec spec = io::load_problem(args.input);
  if (!spec.F || !spec.x || !spec.x_prime)
    throw Error(ErrorCode::kInvalidArgument, "audit input requires F, x, x_prime");
  if (!spec.lambda)
    throw Error(ErrorCode::kInvalidArgument, "audit input requires the effective lambda");
  NoiseStructure<double> noise =
      (family == NoiseFamily::kGaussian)
          ? make_gaussian_noise<double>(
                *spec.lambda, Matrix::Identity(spec.lambda->cols(), spec.lambda->cols()))
          : make_laplace_noise<double>(*spec.lambda, 1.0);
  const LinearQueryMechanism<double> mech(*spec.F, noise, args.seed);
  const AuditResult<double> result =
      audit_empirical(mech, *spec.x, *spec.x_prime, args.eps, args.trials, args.seed);

  double target = args.delta_target;
  if (target < 0.0) target = result.analytic_delta.value_or(0.0);
  const std::string csv = io::audit_to_csv(result, target);
  std::cout << csv;
  if (!args.out.empty()) io::write_file(args.out, csv);
  return 0;
}

struct SimConsensusArgs {
  std::string input;
  std::string preset;
  std::string family = "gaussian";
  BudgetFlags budget;
  Index T = 100;
  Index runs = 500;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

int run_sim_consensus(const SimConsensusArgs& args) {
  const NoiseFamily family = parse_family(args.family);

  WeightedGraph<double> graph;
  Vector x0;
  if (args.preset == "paper10") {
    graph = presets::paper10_graph();
    x0 = presets::paper10_initial_states();
  } else if (!args.input.empty()) {
    const io::GraphConfig config = io::load_graph(args.input);
    graph = config.graph;
    if (!config.x0)
      throw Error(ErrorCode::kInvalidArgument, "graph file needs x0 for simulation");
    x0 = *config.x0;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "sim-consensus needs --preset paper10 or --input");
  }

  const Vector sigma = design_consensus_noise(args.budget.budget(), family, graph.n);
  const SpectralSummary<double> spec = laplacian_and_spectrum(graph);
  const ConsensusBounds<double> bounds = theoretical_bounds(spec, sigma, family);
  const ConsensusStatistics<double> stats =
      monte_carlo_accuracy(graph, x0, args.T, sigma, family, args.runs, args.seed);

  std::cout << "sigma = " << format_double(sigma[0]) << "\n";
  std::cout << "alpha = " << format_double(bounds.alpha) << "\n";
  std::cout << "terminal_mse = " << format_double(stats.mse[args.T - 1]) << "\n";
  std::cout << "mse_bound = " << format_double(bounds.mse_bound) << "\n";

  if (!args.out.empty()) {
    std::vector<ConsensusRun<double>> runs;
    runs.reserve(static_cast<std::size_t>(args.runs));
    for (Index k = 0; k < args.runs; ++k) {
      CounterRng child = CounterRng::substream(args.seed, static_cast<std::uint64_t>(k));
      runs.push_back(run_consensus(graph, x0, args.T, sigma, family, child.next_u64()));
    }
    io::write_consensus_runs_csv(args.out + "_runs.csv", runs, x0.mean());
    io::write_consensus_aggregate_csv(args.out + "_aggregate.csv", stats, bounds.mse_bound);
  }
  return 0;
}

struct SimControlArgs {
  std::string input;
  std::string preset;
  std::string noise_kind = "structured";
  BudgetFlags budget{1.0, 0.01, 1.0};
  Index runs = 500;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

int run_sim_control(const SimControlArgs& args) {
  LtiSystem<double> sys;
  OutputFeedbackController<double> ctrl;
  LtiSystem<double> private_sys;
  Index T = 100;
  Vector x0, xhat0;

  if (args.preset == "vehicle") {
    sys = presets::vehicle_system();
    ctrl = presets::vehicle_controller();
    private_sys = presets::vehicle_private_subsystem();
    x0 = Vector::Zero(2);
    xhat0 = Vector::Zero(2);
  } else if (!args.input.empty()) {
    const io::SystemConfig config = io::load_system(args.input);
    sys = config.system;
    ctrl.K_P = config.K_P;
    ctrl.L_obs = config.L_obs;
    ctrl.reference = [nx = sys.nx()](Index) { return Vector::Zero(nx); };
    T = config.T;
    x0 = config.x0;
    xhat0 = config.xhat0;
    if (config.private_block.empty()) {
      private_sys = sys;
    } else {
      const auto& blk = config.private_block;
      Matrix Ab(static_cast<Index>(blk.size()), static_cast<Index>(blk.size()));
      for (std::size_t r = 0; r < blk.size(); ++r)
        for (std::size_t c = 0; c < blk.size(); ++c) Ab(r, c) = sys.A(blk[r], blk[c]);
      Matrix Cb(sys.ny(), static_cast<Index>(blk.size()));
      for (std::size_t c = 0; c < blk.size(); ++c) Cb.col(static_cast<Index>(c)) = sys.C.col(blk[c]);
      private_sys.A = Ab;
      private_sys.B = Matrix::Zero(Ab.rows(), 1);
      private_sys.C = Cb;
    }
  } else {
    throw Error(ErrorCode::kInvalidArgument, "sim-control needs --preset vehicle or --input");
  }

  const PrivacyBudget<double> budget = args.budget.budget();
  ControlNoiseModel<double> model;
  if (args.noise_kind == "structured") {
    model = design_control_noise(private_sys, T, budget).model;
  } else if (args.noise_kind == "iid") {
    model = iid_baseline_noise(private_sys, T, budget);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "--noise must be structured or iid");
  }

  std::vector<TrajectoryRecord<double>> records;
  records.reserve(static_cast<std::size_t>(args.runs));
  for (Index k = 0; k < args.runs; ++k) {
    CounterRng child = CounterRng::substream(args.seed, static_cast<std::uint64_t>(k));
    records.push_back(run_closed_loop(sys, ctrl, model, T, child.next_u64(), x0, xhat0));
  }
  const TrackingStatistics<double> stats = tracking_statistics(records, ctrl.reference);

  std::cout << "noise = " << args.noise_kind << "\n";
  if (model.kind == ControlNoiseModel<double>::Kind::kStructured) {
    std::cout << "sqrt_Sigma_trace = " << format_double(model.sigma_sqrt.trace()) << "\n";
  } else {
    std::cout << "sigma_iid = " << format_double(model.sigma_iid) << "\n";
  }
  for (Index c = 0; c < stats.mse.cols(); ++c)
    std::cout << "terminal_mse_" << c + 1 << " = " << format_double(stats.mse(T - 1, c))
              << "\n";

  if (!args.out.empty()) {
    io::write_control_runs_csv(args.out + "_runs.csv", records);
    io::write_control_aggregate_csv(args.out + "_aggregate.csv", stats);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differential privacy over affine manifolds"};
  app.require_subcommand(1);

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "design structured noise for a budget");
  cal_cmd->add_option("--input", cal.input, "problem JSON with F, D, b");
  cal_cmd->add_option("--preset", cal.preset, "consensus or control-vehicle");
  cal_cmd->add_option("--family", cal.family, "gaussian or laplace");
  cal_cmd->add_option("--strategy", cal.strategy, "isotropic or trace_min");
  cal_cmd->add_option("--T", cal.horizon, "preset horizon");
  cal_cmd->add_option("--cap", cal.cap, "index-set enumeration cap");
  cal_cmd->add_option("--out", cal.out, "output file prefix");
  add_budget_flags(cal_cmd, &cal.budget);

  VerifyArgs ver;
  auto* ver_cmd = app.add_subcommand("verify", "check a noise structure against a budget");
  ver_cmd->add_option("--input", ver.input, "problem JSON with F, D, b, lambda")->required();
  ver_cmd->add_option("--family", ver.family, "gaussian or laplace");
  ver_cmd->add_option("--cap", ver.cap, "index-set enumeration cap");
  ver_cmd->add_option("--out", ver.out, "report JSON path");
  add_budget_flags(ver_cmd, &ver.budget);

  AuditArgs aud;
  auto* aud_cmd = app.add_subcommand("audit", "Monte Carlo privacy-loss audit of a pair");
  aud_cmd->add_option("--input", aud.input, "problem JSON with F, lambda, x, x_prime")->required();
  aud_cmd->add_option("--family", aud.family, "gaussian or laplace");
  aud_cmd->add_option("--eps", aud.eps, "epsilon under audit");
  aud_cmd->add_option("--delta", aud.delta_target, "target delta for the verdict");
  aud_cmd->add_option("--trials", aud.trials, "Monte Carlo trials");
  aud_cmd->add_option("--seed", aud.seed, "random seed");
  aud_cmd->add_option("--out", aud.out, "CSV output path");

  SimConsensusArgs simc;
  auto* simc_cmd = app.add_subcommand("sim-consensus", "private average consensus experiment");
  simc_cmd->add_option("--input", simc.input, "graph JSON");
  simc_cmd->add_option("--preset", simc.preset, "paper10");
  simc_cmd->add_option("--family", simc.family, "gaussian or laplace");
  simc_cmd->add_option("--T", simc.T, "steps");
  simc_cmd->add_option("--runs", simc.runs, "Monte Carlo runs");
  simc_cmd->add_option("--seed", simc.seed, "random seed");
  simc_cmd->add_option("--out", simc.out, "output file prefix");
  add_budget_flags(simc_cmd, &simc.budget);

  SimControlArgs simk;
  auto* simk_cmd = app.add_subcommand("sim-control", "private cloud-based control experiment");
  simk_cmd->add_option("--input", simk.input, "system JSON");
  simk_cmd->add_option("--preset", simk.preset, "vehicle");
  simk_cmd->add_option("--noise", simk.noise_kind, "structured or iid");
  simk_cmd->add_option("--runs", simk.runs, "Monte Carlo runs");
  simk_cmd->add_option("--seed", simk.seed, "random seed");
  simk_cmd->add_option("--out", simk.out, "output file prefix");
  add_budget_flags(simk_cmd, &simk.budget);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cal_cmd) return run_calibrate(cal);
    if (*ver_cmd) return run_verify(ver);
    if (*aud_cmd) return run_audit(aud);
    if (*simc_cmd) return run_sim_consensus(simc);
    if (*simk_cmd) return run_sim_control(simk);
  } catch (const affinedp::Error& e) {
    std::cerr << e.name() << "\n" << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

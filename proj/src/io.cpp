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

#include "affinedp/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace affinedp::io {

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, "malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

Matrix matrix_from_json(const json& j, const std::string& key) {
  if (!j.is_array()) throw Error(ErrorCode::kInvalidArgument, key + " must be a nested array");
  const auto rows = j.size();
  if (rows == 0) return Matrix(0, 0);
  if (!j[0].is_array()) {
    // flat array: a single row
    Matrix m(1, static_cast<Eigen::Index>(rows));
    for (std::size_t c = 0; c < rows; ++c) m(0, static_cast<Eigen::Index>(c)) = j[c].get<double>();
    return m;
  }
  const auto cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols)
      throw Error(ErrorCode::kInvalidArgument, key + " rows have inconsistent lengths");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

Vector vector_from_json(const json& j, const std::string& key) {
  if (!j.is_array()) throw Error(ErrorCode::kInvalidArgument, key + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

json json_from_matrix(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

ProblemSpec load_problem(const std::string& path) {
  const json j = load_json(path);
  ProblemSpec spec;
  if (j.contains("F")) spec.F = matrix_from_json(j["F"], "F");
  if (j.contains("D")) spec.D = matrix_from_json(j["D"], "D");
  if (j.contains("b")) spec.b = vector_from_json(j["b"], "b");
  if (j.contains("tol")) spec.tol = j["tol"].get<double>();
  if (j.contains("lambda")) spec.lambda = matrix_from_json(j["lambda"], "lambda");
  if (j.contains("lambda_bar")) spec.lambda_bar = matrix_from_json(j["lambda_bar"], "lambda_bar");
  if (j.contains("sigma")) {
    if (j["sigma"].is_number()) {
      spec.sigma_scalar = j["sigma"].get<double>();
    } else {
      spec.sigma_matrix = matrix_from_json(j["sigma"], "sigma");
    }
  }
  if (j.contains("x")) spec.x = vector_from_json(j["x"], "x");
  if (j.contains("x_prime")) spec.x_prime = vector_from_json(j["x_prime"], "x_prime");
  return spec;
}

GraphConfig load_graph(const std::string& path) {
  const json j = load_json(path);
  if (!j.contains("n")) throw Error(ErrorCode::kInvalidGraph, "graph file requires n");
  const Eigen::Index n = j["n"].get<Eigen::Index>();
  const double weight_all = j.value("weight_all", 0.0);

  std::vector<WeightedGraph<double>::Edge> edges;
  if (!j.contains("edges")) throw Error(ErrorCode::kInvalidGraph, "graph file requires edges");
  for (const auto& e : j["edges"]) {
    if (!e.is_array() || e.size() < 2)
      throw Error(ErrorCode::kInvalidGraph, "edges must be [i, j] or [i, j, w]");
    const Eigen::Index i = e[0].get<Eigen::Index>() - 1;  // 1-based on the wire
    const Eigen::Index k = e[1].get<Eigen::Index>() - 1;
    double w = weight_all;
    if (e.size() >= 3) w = e[2].get<double>();
    if (w <= 0.0)
      throw Error(ErrorCode::kInvalidGraph, "edge weight missing (set weight_all or per-edge w)");
    edges.push_back({i, k, w});
  }

  GraphConfig config{WeightedGraph<double>::from_edges(n, edges), std::nullopt};
  if (j.contains("x0")) config.x0 = vector_from_json(j["x0"], "x0");
  return config;
}

SystemConfig load_system(const std::string& path) {
  const json j = load_json(path);
  SystemConfig config;
  for (const char* key : {"A", "B", "C", "K_P", "L_obs"}) {
    if (!j.contains(key))
      throw Error(ErrorCode::kInvalidArgument, std::string("system file requires ") + key);
  }
  config.system.A = matrix_from_json(j["A"], "A");
  config.system.B = matrix_from_json(j["B"], "B");
  config.system.C = matrix_from_json(j["C"], "C");
  config.system.sampling_period = j.value("Ts", 1.0);
  config.K_P = matrix_from_json(j["K_P"], "K_P");
  if (config.K_P.cols() == config.system.nx() && config.K_P.rows() == config.system.nu())
    config.K_P.transposeInPlace();  // accept the row convention
  config.L_obs = matrix_from_json(j["L_obs"], "L_obs");
  if (config.L_obs.cols() == config.system.nx() && config.L_obs.rows() == config.system.ny())
    config.L_obs.transposeInPlace();
  config.T = j.value("T", 100);
  config.x0 = j.contains("x0") ? vector_from_json(j["x0"], "x0")
                               : Vector::Zero(config.system.nx());
  config.xhat0 = j.contains("xhat0") ? vector_from_json(j["xhat0"], "xhat0")
                                     : Vector::Zero(config.system.nx());
  if (j.contains("private_block")) {
    for (const auto& idx : j["private_block"])
      config.private_block.push_back(idx.get<Eigen::Index>() - 1);
  }
  return config;
}

std::string format_double(double v) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "true";
    case Verdict::kFail: return "false";
    case Verdict::kIndeterminate: return "indeterminate";
  }
  return "unknown";
}

std::string report_to_json(const SensitivityReport<double>& sens, NoiseFamily family,
                           const VerificationReport<double>* verification) {
  json j;
  j["delta_N"] = sens.delta_N;
  j["delta_L"] = sens.delta_L;
  const bool gaussian = family == NoiseFamily::kGaussian;
  const Eigen::Index argmax_i = gaussian ? sens.argmax_i_gaussian : sens.argmax_i_laplace;
  const std::size_t argmax_j = gaussian ? sens.argmax_j_gaussian : sens.argmax_j_laplace;
  j["argmax_i"] = argmax_i + 1;  // 1-based on the wire
  j["argmax_j"] = static_cast<long>(argmax_j) + 1;
  if (verification != nullptr) {
    j["threshold"] = verification->threshold;
    j["margin"] = verification->margin;
    j["verdict"] = verdict_name(verification->verdict);
  } else {
    j["threshold"] = nullptr;
    j["margin"] = nullptr;
    j["verdict"] = nullptr;
  }
  return j.dump(2);
}

std::string noise_to_json(const NoiseStructure<double>& noise) {
  json j;
  j["family"] = (noise.family == NoiseFamily::kGaussian) ? "gaussian" : "laplace";
  j["lambda_bar"] = json_from_matrix(noise.lambda_bar);
  if (noise.family == NoiseFamily::kGaussian) {
    j["sigma"] = json_from_matrix(noise.sigma_matrix);
  } else {
    j["sigma"] = noise.sigma_scalar;
  }
  j["effective_lambda"] = json_from_matrix(noise.effective_lambda);
  j["truncated_family"] = noise.truncated_family;
  return j.dump(2);
}

std::string audit_to_csv(const AuditResult<double>& result, double delta_target) {
  std::ostringstream out;
  out << "epsilon,lhs_estimate,std_error,trials,analytic_delta,verdict\n";
  const bool pass = !result.kernel_mismatch &&
                    result.lhs_estimate <= delta_target + 4.0 * result.std_error;
  out << format_double(result.epsilon) << ',' << format_double(result.lhs_estimate) << ','
      << format_double(result.std_error) << ',' << result.trials << ','
      << (result.analytic_delta ? format_double(*result.analytic_delta) : std::string(""))
      << ',' << (pass ? "pass" : "fail") << '\n';
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path);
  out << content;
}

void write_consensus_runs_csv(const std::string& path,
                              const std::vector<ConsensusRun<double>>& runs,
                              double target_average) {
  std::ostringstream out;
  out << "run,t,node,state,error\n";
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& traj = runs[k].trajectory;
    for (Eigen::Index t = 0; t < traj.rows(); ++t) {
      for (Eigen::Index i = 0; i < traj.cols(); ++i) {
        out << k + 1 << ',' << t << ',' << i + 1 << ',' << format_double(traj(t, i)) << ','
            << format_double(traj(t, i) - target_average) << '\n';
      }
    }
  }
  write_file(path, out.str());
}

void write_consensus_aggregate_csv(const std::string& path,
                                   const ConsensusStatistics<double>& stats,
                                   double mse_bound) {
  std::ostringstream out;
  out << "t";
  for (Eigen::Index i = 0; i < stats.mean_error.cols(); ++i) out << ",mean_error_node_" << i + 1;
  out << ",mse,mse_bound\n";
  for (Eigen::Index t = 0; t < stats.mean_error.rows(); ++t) {
    out << t;
    for (Eigen::Index i = 0; i < stats.mean_error.cols(); ++i)
      out << ',' << format_double(stats.mean_error(t, i));
    out << ',' << format_double(stats.mse[t]) << ',' << format_double(mse_bound) << '\n';
  }
  write_file(path, out.str());
}

void write_control_runs_csv(const std::string& path,
                            const std::vector<TrajectoryRecord<double>>& records) {
  std::ostringstream out;
  if (records.empty()) {
    write_file(path, "");
    return;
  }
  const Eigen::Index nx = records.front().states.cols();
  const Eigen::Index nu = records.front().controls.cols();
  const Eigen::Index ny = records.front().perturbed_outputs.cols();
  out << "run,t";
  for (Eigen::Index c = 0; c < nx; ++c) out << ",x_" << c + 1;
  for (Eigen::Index c = 0; c < nx; ++c) out << ",xhat_" << c + 1;
  if (nu == 1) {
    out << ",u";
  } else {
    for (Eigen::Index c = 0; c < nu; ++c) out << ",u_" << c + 1;
  }
  if (ny == 1) {
    out << ",yhat";
  } else {
    for (Eigen::Index c = 0; c < ny; ++c) out << ",yhat_" << c + 1;
  }
  for (Eigen::Index c = 0; c < nx; ++c) out << ",ref_" << c + 1;
  out << '\n';

  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& rec = records[k];
    for (Eigen::Index t = 0; t < rec.states.rows(); ++t) {
      out << k + 1 << ',' << t;
      for (Eigen::Index c = 0; c < nx; ++c) out << ',' << format_double(rec.states(t, c));
      for (Eigen::Index c = 0; c < nx; ++c) out << ',' << format_double(rec.estimates(t, c));
      for (Eigen::Index c = 0; c < nu; ++c)
        out << ',' << format_double(t < rec.controls.rows() ? rec.controls(t, c) : 0.0);
      for (Eigen::Index c = 0; c < ny; ++c)
        out << ',' << format_double(rec.perturbed_outputs(t, c));
      for (Eigen::Index c = 0; c < nx; ++c)
        out << ',' << format_double(rec.states(t, c) - rec.tracking_errors(t, c));
      out << '\n';
    }
  }
  write_file(path, out.str());
}

void write_control_aggregate_csv(const std::string& path,
                                 const TrackingStatistics<double>& stats) {
  std::ostringstream out;
  out << "t";
  for (Eigen::Index c = 0; c < stats.mean.cols(); ++c) out << ",mean_err_" << c + 1;
  for (Eigen::Index c = 0; c < stats.mse.cols(); ++c) out << ",mse_" << c + 1;
  out << '\n';
  for (Eigen::Index t = 0; t < stats.mean.rows(); ++t) {
    out << t;
    for (Eigen::Index c = 0; c < stats.mean.cols(); ++c)
      out << ',' << format_double(stats.mean(t, c));
    for (Eigen::Index c = 0; c < stats.mse.cols(); ++c)
      out << ',' << format_double(stats.mse(t, c));
    out << '\n';
  }
  write_file(path, out.str());
}

}  // namespace affinedp::io

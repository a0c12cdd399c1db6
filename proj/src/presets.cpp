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

#include "affinedp/presets.hpp"

#include <cmath>

namespace affinedp::presets {

WeightedGraph<double> paper10_graph() {
  std::vector<WeightedGraph<double>::Edge> edges;
  for (Eigen::Index i = 0; i < 10; ++i) edges.push_back({i, (i + 1) % 10, 0.25});
  return WeightedGraph<double>::from_edges(10, edges);
}

Eigen::VectorXd paper10_initial_states() {
  Eigen::VectorXd x0(10);
  x0 << 10, 100, 20, -30, -20, -60, 70, 0, 80, -70;
  return x0;
}

LtiSystem<double> vehicle_system() {
  const double ts = 0.1;
  LtiSystem<double> sys;
  sys.A.resize(2, 2);
  sys.A << 1.0, ts, 0.0, 1.0;
  sys.B.resize(2, 1);
  sys.B << ts * ts / 2.0, ts;
  sys.C.resize(1, 2);
  sys.C << 1.0, 0.0;
  sys.sampling_period = ts;
  return sys;
}

Eigen::VectorXd vehicle_reference(Eigen::Index t) {
  Eigen::VectorXd r(2);
  const double td = static_cast<double>(t);
  r << std::tanh(td), 1.0 - std::abs(std::tanh(td - 9.0));
  return r;
}

OutputFeedbackController<double> vehicle_controller() {
  OutputFeedbackController<double> ctrl;
  ctrl.K_P.resize(2, 1);
  ctrl.K_P << 3.4240, 4.3095;
  ctrl.L_obs.resize(2, 1);
  ctrl.L_obs << 0.8266, 0.6973;
  ctrl.reference = [](Eigen::Index t) { return vehicle_reference(t); };
  return ctrl;
}

LtiSystem<double> vehicle_private_subsystem() {
  LtiSystem<double> sub;
  sub.A = Eigen::MatrixXd::Identity(1, 1);
  sub.B = Eigen::MatrixXd::Zero(1, 1);
  sub.C = Eigen::MatrixXd::Identity(1, 1);
  sub.sampling_period = 0.1;
  return sub;
}

}  // namespace affinedp::presets

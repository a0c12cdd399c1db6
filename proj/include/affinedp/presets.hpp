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

#ifndef AFFINEDP_PRESETS_HPP_
#define AFFINEDP_PRESETS_HPP_

#include <functional>

#include <Eigen/Core>

#include "affinedp/consensus.hpp"
#include "affinedp/control.hpp"

// Built-in experiment presets. The same configurations ship as data files
// under data/ (paper10.json, vehicle.json); tests pin the two sources to
// each other.
namespace affinedp::presets {

/// Ten-node ring with uniform edge weight 1/4.
WeightedGraph<double> paper10_graph();

/// Initial states averaging exactly 10.
Eigen::VectorXd paper10_initial_states();

/// Double-integrator vehicle sampled at Ts = 0.1: states (position,
/// velocity), position measured.
LtiSystem<double> vehicle_system();

/// Static output feedback with a Luenberger observer and the reference
/// (tanh(t), 1 - |tanh(t - 9)|).
OutputFeedbackController<double> vehicle_controller();

Eigen::VectorXd vehicle_reference(Eigen::Index t);

/// Scalar reduction used for the vehicle privacy design: the position
/// sub-dynamics with A = C = 1 (velocity and input enter as known offsets).
LtiSystem<double> vehicle_private_subsystem();

}  // namespace affinedp::presets

#endif  // AFFINEDP_PRESETS_HPP_

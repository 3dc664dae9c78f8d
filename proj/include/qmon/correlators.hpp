/*
   Copyright 2026 The qmon Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

// Stationary signal-qubit correlators for identical detectors. The output of
// one detector correlates with the later value of its own Bloch component as
//   <u_z(t - dt) z(t)> = (delta_u / 2) e^{-dt / (eta tau_meas)},
// with vanishing cross-axis correlators. The equal-time value contains the
// detector's own back-action kick, which is why it saturates at delta_u/2
// rather than (delta_u/2) <z^2>.

#include <cmath>
#include <stdexcept>

#include "qmon/detector.hpp"

namespace qmon {

/// <u_k(t - delta_t) r_k(t)> in the stationary regime (identical detectors).
inline double same_axis_correlator(double delta_t, const DetectorParams& params) {
    if (!params.identical()) throw config_error("correlator formula assumes identical detectors");
    if (delta_t < 0.0) throw std::domain_error("correlator lag must be non-negative");
    const double eta = params.efficiency(0);
    const double tau_meas = params.meas_time(0);
    return 0.5 * params.delta_u[0] * std::exp(-delta_t / (eta * tau_meas));
}

/// <u_k(t - delta_t) r_l(t)> for k != l.
inline double cross_axis_correlator(double /*delta_t*/, const DetectorParams& /*params*/) {
    return 0.0;
}

}  // namespace qmon

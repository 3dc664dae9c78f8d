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

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "qmon/errors.hpp"
#include "qmon/state.hpp"
#include "qmon/vec3.hpp"

namespace qmon {

enum class Axis : int { x = 0, y = 1, z = 2 };

/// Parameters of the three linear detectors monitoring sigma_x, sigma_y,
/// sigma_z. Each detector k is characterized by its response delta_u_k (mean
/// signal difference between the two eigenstates), the one-sided spectral
/// density s_k of its output noise, and an intrinsic dephasing rate gamma_k.
/// Classical back-action is assumed absent throughout (it is not a parameter).
///
/// Derived per-axis quantities:
///   coupling        a_k      = delta_u_k / s_k
///   gamma0          G0_k     = delta_u_k^2 / (4 s_k)   (= 1 / (2 tau_meas,k))
///   measurement time tau_k   = 2 s_k / delta_u_k^2
///   ensemble rate   Gamma_k  = gamma_k + G0_k
///   efficiency      eta_k    = G0_k / Gamma_k
struct DetectorParams {
    std::array<double, 3> delta_u{2.0, 2.0, 2.0};
    std::array<double, 3> s{2.0, 2.0, 2.0};
    std::array<double, 3> gamma{0.0, 0.0, 0.0};

    double coupling(int k) const { return delta_u[k] / s[k]; }
    double gamma0(int k) const { return delta_u[k] * delta_u[k] / (4.0 * s[k]); }
    double meas_time(int k) const {
        if (delta_u[k] == 0.0) return std::numeric_limits<double>::infinity();
        return 2.0 * s[k] / (delta_u[k] * delta_u[k]);
    }
    double ensemble_rate(int k) const { return gamma[k] + gamma0(k); }
    /// eta_k = gamma0_k / Gamma_k; a fully inactive axis (Gamma_k = 0) is
    /// treated as ideal by convention.
    double efficiency(int k) const {
        const double g = ensemble_rate(k);
        return g == 0.0 ? 1.0 : gamma0(k) / g;
    }

    bool identical() const {
        return delta_u[0] == delta_u[1] && delta_u[1] == delta_u[2] && s[0] == s[1] &&
               s[1] == s[2] && gamma[0] == gamma[1] && gamma[1] == gamma[2];
    }

    void validate() const {
        for (int k = 0; k < 3; ++k) {
            if (!(s[k] > 0.0)) throw config_error("noise density s must be positive");
            if (gamma[k] < 0.0) throw config_error("dephasing rate gamma must be >= 0");
            if (!std::isfinite(delta_u[k])) throw config_error("detector response must be finite");
        }
    }
};

/// Canonical identical-detector normalization: delta_u = 2, s = 2, so the
/// coupling is 1, gamma0 = 1/2 and tau_meas = 1 (all times in units of
/// tau_meas). The intrinsic dephasing is set from the requested efficiency,
/// gamma = gamma0 (1/eta - 1).
inline DetectorParams identical_detectors_from_eta(double eta) {
    if (!(eta > 0.0) || eta > 1.0) {
        throw std::domain_error("efficiency must lie in (0, 1], got " + std::to_string(eta));
    }
    DetectorParams p;
    p.delta_u = {2.0, 2.0, 2.0};
    p.s = {2.0, 2.0, 2.0};
    const double g = 0.5 * (1.0 / eta - 1.0);
    p.gamma = {g, g, g};
    return p;
}

/// Noiseless mean detector output (delta_u_k / 2) r_k.
inline double expected_signal(const QubitState& state, Axis axis, const DetectorParams& params) {
    const int k = static_cast<int>(axis);
    return 0.5 * params.delta_u[k] * state.bloch[k];
}

}  // namespace qmon

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

// Quantum Bayes update for a finite integrated measurement result along one
// axis. Writing the density matrix in the measurement eigenbasis,
//   rho_ii -> rho_ii P_i(u_bar) / P_tot,
//   rho_12 -> rho_12 e^{-gamma tau} sqrt(P_1 P_2) / P_tot,
// with Gaussian likelihoods P_i centered at +-delta_u/2 of variance s/(2 tau).
// In Bloch form with p = n.r and the transverse part q = r - p n this reduces
// to the log-likelihood-stable expressions
//   p' = (p + T) / (1 + p T),          T = tanh(u_bar delta_u tau / s),
//   q' = q e^{-gamma tau} sech(theta) / (1 + p T),
// which saturate gracefully for arbitrarily large |u_bar| (no 0/0 from
// underflowing Gaussians). The transverse direction is untouched, so no
// explicit transverse frame is needed. Trace is preserved exactly and the
// update maps the unit ball into itself; at gamma = 0 it maps pure states to
// pure states exactly.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "qmon/detector.hpp"
#include "qmon/state.hpp"
#include "qmon/vec3.hpp"

namespace qmon {

/// Measurement direction; the update acts in the eigenbasis of n.sigma.
struct BayesBasis {
    Vec3 axis;

    explicit BayesBasis(const Vec3& n) : axis(n) {
        if (std::abs(norm(n) - 1.0) > 1e-12) {
            throw std::domain_error("measurement axis must be a unit vector");
        }
    }
    static BayesBasis along(const Vec3& v) { return BayesBasis(normalized(v)); }
};

/// Response/noise/dephasing triple of the (possibly virtual) detector behind
/// a single-axis update.
struct MeasurementChannel {
    double delta_u = 2.0;
    double s = 2.0;
    double gamma = 0.0;
};

inline MeasurementChannel channel_of_axis(const DetectorParams& params, int k) {
    return {params.delta_u[k], params.s[k], params.gamma[k]};
}

/// Distribution of the time-averaged result u_bar of one single-axis
/// measurement of duration tau: a two-component Gaussian mixture with weights
/// given by the eigenstate populations.
struct OutcomeDistribution {
    double weight_plus = 0.5;   // population of the +delta_u/2 eigenstate
    double weight_minus = 0.5;  // population of the -delta_u/2 eigenstate
    double mean_plus = 1.0;
    double mean_minus = -1.0;
    double variance = 1.0;

    double component_pdf(double u, double mean) const {
        const double d = u - mean;
        return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * M_PI * variance);
    }
    double pdf(double u) const {
        return weight_plus * component_pdf(u, mean_plus) +
               weight_minus * component_pdf(u, mean_minus);
    }
};

inline OutcomeDistribution outcome_pdf(const QubitState& state, const BayesBasis& basis,
                                       double tau, const MeasurementChannel& ch) {
    if (!(tau > 0.0)) throw std::domain_error("measurement duration must be positive");
    const double p = dot(basis.axis, state.bloch);
    OutcomeDistribution d;
    d.weight_plus = 0.5 * (1.0 + p);
    d.weight_minus = 0.5 * (1.0 - p);
    d.mean_plus = 0.5 * ch.delta_u;
    d.mean_minus = -0.5 * ch.delta_u;
    d.variance = ch.s / (2.0 * tau);
    return d;
}

/// Bayes update of the state for result u_bar over duration tau.
inline QubitState bayes_update(const QubitState& state, const BayesBasis& basis, double u_bar,
                               double tau, const MeasurementChannel& ch) {
    if (!(tau > 0.0)) throw std::domain_error("measurement duration must be positive");
    if (!std::isfinite(u_bar)) throw std::domain_error("measurement result must be finite");
    const Vec3& n = basis.axis;
    const double p = dot(n, state.bloch);
    const double theta = u_bar * ch.delta_u * tau / ch.s;
    const double t = std::tanh(theta);
    const double denom = 1.0 + p * t;
    if (denom <= 0.0) {
        // Only reachable when the likelihood of the single populated
        // eigenstate underflows to zero (p = -+1 with a saturated opposite
        // outcome).
        throw std::runtime_error(
            "posterior underflow: outcome is incompatible with a pole state at this precision");
    }
    const double p_new = (p + t) / denom;
    const double transverse_scale =
        std::exp(-ch.gamma * tau) * std::sqrt((1.0 - t) * (1.0 + t)) / denom;
    const Vec3 q = state.bloch - n * p;
    return {n * p_new + q * transverse_scale};
}

/// Sequential single-axis updates, each of duration tau. `order` lists the
/// Cartesian axes in application order; u_bars is indexed by axis (not by
/// position in the order).
inline QubitState chained_update(const QubitState& state, const std::array<int, 3>& order,
                                 const Vec3& u_bars, double tau, const DetectorParams& params) {
    static const Vec3 kAxes[3] = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
    QubitState q = state;
    for (int k : order) {
        q = bayes_update(q, BayesBasis(kAxes[k]), u_bars[k], tau, channel_of_axis(params, k));
    }
    return q;
}

}  // namespace qmon

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

// Conditional qubit evolution under simultaneous weak measurement of the
// three Pauli observables, integrated per trajectory together with the
// detector record that produced it.
//
// Two step schemes are provided:
//  * an Ito-form Euler-Maruyama step for identical detectors,
//      dr = -2 Gamma r dt + a [dw - r (r . dw)],
//  * a record-driven Stratonovich drift with a Heun (trapezoidal)
//    predictor-corrector, valid for anisotropic detectors,
//      dr_i = a_i w_i - r_i sum_j a_j w_j r_j - (gamma_tot - gamma_i) r_i dt,
//    where w is the integrated record over the step. The same drift doubles
//    as the causal filter for replaying a stored record.
//
// A scalar integrator for the Bloch radius,
//      dr = 2 G0 (1/r - r/eta) dt + a (1 - r^2) dw_r,
// backs distribution-level validation of the 3-D schemes.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qmon/config.hpp"
#include "qmon/detector.hpp"
#include "qmon/errors.hpp"
#include "qmon/noise.hpp"
#include "qmon/record.hpp"
#include "qmon/state.hpp"

namespace qmon {

namespace detail {

inline void require_identical(const DetectorParams& params) {
    if (!params.identical()) {
        throw config_error("this operation requires three identical detectors");
    }
}

}  // namespace detail

/// Per-step overshoot budget on r^2. An Euler step at the sphere picks up a
/// positive radial kick of order a^2 s dt times a chi-square(2) variate; the
/// factor 40 puts the error threshold far beyond any statistically plausible
/// excursion while still catching genuine integrator blow-ups.
inline double radius_overshoot_budget(const DetectorParams& params, double dt) {
    double scale = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double c = params.coupling(k);
        scale = std::max(scale, c * c * params.s[k]);
    }
    return 40.0 * scale * dt + 1e-9;
}

/// Renormalize a state that discretization pushed off the unit ball back onto
/// the sphere; throws when the overshoot exceeds the per-step budget.
inline void clamp_to_ball(QubitState& q, double budget2) {
    const double r2 = q.radius2();
    if (r2 <= 1.0) return;
    if (r2 > 1.0 + budget2) {
        throw physicality_error("Bloch radius overshoot " + std::to_string(std::sqrt(r2) - 1.0) +
                                " exceeds the discretization budget; the step size is likely too "
                                "large for these parameters");
    }
    q.bloch *= 1.0 / std::sqrt(r2);
}

/// Ito-form Euler-Maruyama step for three identical detectors. Returns the
/// raw (unclamped) updated state.
inline QubitState step_ito_identical(const QubitState& state, const NoiseIncrement& noise,
                                     const DetectorParams& params, double dt) {
    detail::require_identical(params);
    const double a = params.coupling(0);
    const double big_gamma = params.ensemble_rate(0);
    const Vec3& r = state.bloch;
    const Vec3& dw = noise.dw;
    const double rdw = dot(r, dw);
    return {r * (1.0 - 2.0 * big_gamma * dt) + (dw - r * rdw) * a};
}

/// Record-driven Stratonovich drift over one step; w holds the integrated
/// outputs int u_k dt. Works for arbitrary (anisotropic) detectors.
inline Vec3 filter_drift(const Vec3& r, const Vec3& w, const DetectorParams& params, double dt) {
    const Vec3 g{params.coupling(0) * w.x, params.coupling(1) * w.y, params.coupling(2) * w.z};
    const double rg = dot(r, g);
    const double gamma_tot = params.gamma[0] + params.gamma[1] + params.gamma[2];
    Vec3 d = g - r * rg;
    d.x -= (gamma_tot - params.gamma[0]) * r.x * dt;
    d.y -= (gamma_tot - params.gamma[1]) * r.y * dt;
    d.z -= (gamma_tot - params.gamma[2]) * r.z * dt;
    return d;
}

/// Heun predictor-corrector step of the Stratonovich filter equation, driven
/// by the integrated record w of this step. Returns the raw updated state.
inline QubitState step_stratonovich_general(const QubitState& state, const Vec3& w,
                                            const DetectorParams& params, double dt) {
    const Vec3 f1 = filter_drift(state.bloch, w, params, dt);
    const Vec3 predictor = state.bloch + f1;
    const Vec3 f2 = filter_drift(predictor, w, params, dt);
    return {state.bloch + (f1 + f2) * 0.5};
}

/// Euler-Maruyama step of the scalar radius equation (identical detectors).
/// Below r_switch^2 = 40 G0 dt the 1/r drift is integrated in closed form
/// (sqrt(r^2 + 4 G0 dt)) before applying the remaining drift and the noise;
/// a plain Euler step there would overshoot wildly. noise_r is the integrated
/// radial noise, Normal(0, s dt / 2).
inline double step_radial(double r, double noise_r, const DetectorParams& params, double dt) {
    detail::require_identical(params);
    if (!(r > 0.0)) throw std::domain_error("radial integrator requires r > 0");
    const double a = params.coupling(0);
    const double g0 = params.gamma0(0);
    const double big_gamma = params.ensemble_rate(0);
    if (r * r >= 40.0 * g0 * dt) {
        return r + (2.0 * g0 / r - 2.0 * big_gamma * r) * dt + a * (1.0 - r * r) * noise_r;
    }
    const double rd = std::sqrt(r * r + 4.0 * g0 * dt);
    return rd * (1.0 - 2.0 * big_gamma * dt) + a * (1.0 - rd * rd) * noise_r;
}

/// One trajectory: states on the uniform grid t_m = m dt together with the
/// provenance needed to reproduce it bit-exactly.
struct Trajectory {
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t trajectory_index = 0;
    Scheme scheme = Scheme::ito;
    std::vector<QubitState> states;  // states[m] at time m dt, size steps + 1

    std::size_t steps() const { return states.empty() ? 0 : states.size() - 1; }
    double time(std::size_t m) const { return dt * static_cast<double>(m); }
    const QubitState& final_state() const { return states.back(); }
};

/// Integrated record increment emitted over one step, formed from the
/// pre-step state: w_k = (delta_u_k / 2) r_k dt + dw_k.
inline Vec3 record_increment(const QubitState& state, const NoiseIncrement& noise,
                             const DetectorParams& params, double dt) {
    Vec3 w = noise.dw;
    for (int k = 0; k < 3; ++k) w[k] += 0.5 * params.delta_u[k] * state.bloch[k] * dt;
    return w;
}

/// Core integration loop. For each step m in [0, steps) the callback receives
/// (m, state after the step, record increment of the step). Deterministic in
/// (config.seed, sweep_index, trajectory_index).
template <class OnStep>
void simulate_stream(const SimulationConfig& config, std::uint64_t trajectory_index,
                     OnStep&& on_step, std::uint64_t sweep_index = 0) {
    config.validate();
    if (config.scheme == Scheme::ito) detail::require_identical(config.params);
    const std::uint64_t n = config.steps();
    const double dt = config.dt;
    const double budget2 = radius_overshoot_budget(config.params, dt);
    const NoiseSequence noise{RngStream{config.seed, RngPurpose::noise, sweep_index},
                              trajectory_index};
    QubitState state = config.initial_state;
    for (std::uint64_t m = 0; m < n; ++m) {
        const NoiseIncrement dw = noise.at(config.params, dt, m);
        const Vec3 w = record_increment(state, dw, config.params, dt);
        state = config.scheme == Scheme::ito
                    ? step_ito_identical(state, dw, config.params, dt)
                    : step_stratonovich_general(state, w, config.params, dt);
        clamp_to_ball(state, budget2);
        on_step(m, state, w);
    }
}

/// Convenience wrapper materializing the full (trajectory, record) pair.
inline std::pair<Trajectory, MeasurementRecord> simulate_trajectory(
    const SimulationConfig& config, std::uint64_t trajectory_index = 0,
    std::uint64_t sweep_index = 0) {
    Trajectory traj;
    traj.dt = config.dt;
    traj.seed = config.seed;
    traj.trajectory_index = trajectory_index;
    traj.scheme = config.scheme;
    traj.states.reserve(config.steps() + 1);
    traj.states.push_back(config.initial_state);

    MeasurementRecord record;
    record.dt = config.dt;
    record.increments.reserve(config.steps());

    simulate_stream(
        config, trajectory_index,
        [&](std::uint64_t, const QubitState& s, const Vec3& w) {
            traj.states.push_back(s);
            record.increments.push_back(w);
        },
        sweep_index);
    return {std::move(traj), std::move(record)};
}

/// Ideal pure-state mode: for eta = 1 and a pure initial state the exact flow
/// keeps the state on the sphere, while an Euler step leaves it by O(dt).
/// This variant renormalizes the radius after every step (manifold-projection
/// Euler), so emitted states are exactly pure. The callback receives
/// (m, state after the step, record increment of the step).
template <class OnStep>
void simulate_stream_on_sphere(const SimulationConfig& config, std::uint64_t trajectory_index,
                               OnStep&& on_step, std::uint64_t sweep_index = 0) {
    config.validate();
    detail::require_identical(config.params);
    if (config.params.gamma[0] != 0.0) {
        throw config_error("pure-state mode requires ideal detectors (gamma = 0)");
    }
    if (std::abs(config.initial_state.radius() - 1.0) > kRadiusTol) {
        throw config_error("pure-state mode requires a pure initial state");
    }
    const std::uint64_t n = config.steps();
    const double dt = config.dt;
    const NoiseSequence noise{RngStream{config.seed, RngPurpose::noise, sweep_index},
                              trajectory_index};
    QubitState state = config.initial_state;
    for (std::uint64_t m = 0; m < n; ++m) {
        const NoiseIncrement dw = noise.at(config.params, dt, m);
        const Vec3 w = record_increment(state, dw, config.params, dt);
        state = config.scheme == Scheme::ito
                    ? step_ito_identical(state, dw, config.params, dt)
                    : step_stratonovich_general(state, w, config.params, dt);
        state.bloch *= 1.0 / state.radius();
        on_step(m, state, w);
    }
}

/// Causal filter: integrate the record-driven Stratonovich equation from an
/// initial guess, given a stored record. The callback receives (m, state
/// after consuming increment m).
template <class OnState>
void filter_stream(const QubitState& initial_guess, const MeasurementRecord& record,
                   const DetectorParams& params, OnState&& on_state,
                   bool project_to_sphere = false) {
    const double budget2 = radius_overshoot_budget(params, record.dt);
    QubitState state = initial_guess;
    for (std::size_t m = 0; m < record.steps(); ++m) {
        state = step_stratonovich_general(state, record.increments[m], params, record.dt);
        if (project_to_sphere) {
            state.bloch *= 1.0 / state.radius();
        } else {
            clamp_to_ball(state, budget2);
        }
        on_state(m, state);
    }
}

/// Filter a record into a full state series (guess + one state per step).
/// project_to_sphere renormalizes after every step, for the ideal-detector
/// pure-state setting where the conditional state is known to stay pure.
inline std::vector<QubitState> filter_replay(const QubitState& initial_guess,
                                             const MeasurementRecord& record,
                                             const DetectorParams& params,
                                             bool project_to_sphere = false) {
    std::vector<QubitState> states;
    states.reserve(record.steps() + 1);
    states.push_back(initial_guess);
    filter_stream(
        initial_guess, record, params,
        [&](std::size_t, const QubitState& s) { states.push_back(s); }, project_to_sphere);
    return states;
}

/// Scalar-radius trajectory used for distribution-level validation. Starts
/// at r0 (use ~1e-6 to represent the fully mixed state; the closed-form
/// near-zero drift handles the 1/r singularity), reflects at 0 and clamps at
/// the sphere like the 3-D schemes.
inline double simulate_radial(const DetectorParams& params, double r0, double total_time,
                              double dt, const RngStream& stream, std::uint64_t trajectory_index) {
    detail::require_identical(params);
    if (!(r0 > 0.0)) throw std::domain_error("radial start must satisfy r0 > 0");
    const auto n = static_cast<std::uint64_t>(std::llround(total_time / dt));
    const double sigma = std::sqrt(0.5 * params.s[0] * dt);
    double r = r0;
    for (std::uint64_t m = 0; m < n; ++m) {
        const double noise_r = sigma * stream.normals(trajectory_index, m)[0];
        r = step_radial(r, noise_r, params, dt);
        if (r < 0.0) r = -r;  // radial coordinate: reflect at the origin
        if (r > 1.0) {
            if (r * r > 1.0 + radius_overshoot_budget(params, dt)) {
                throw physicality_error("radial integrator left the unit interval");
            }
            r = 1.0;
        }
    }
    return r;
}

}  // namespace qmon

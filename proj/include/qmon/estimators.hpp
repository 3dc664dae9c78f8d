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

// Classically inspired monitoring strategies. Running-window estimators
// smooth the raw record with a trailing kernel and take the direction of the
// smoothed vector as a pure-state estimate; the discrete-time algorithms
// process time-binned records u^(n):
//   1 - quantum Bayes update along the direction of u^(n),
//   2 - rotate the previous estimate towards u^(n) by (delta_u/s) u_perp dt,
//   3 - sequential Bayes updates of the three components,
//   4 - normalized bin vector u^(n)/|u^(n)| (stateless).
// A fidelity functional scores any estimate series against the conditional
// (true) trajectory as the time-averaged overlap <r . r_est>.

#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmon/bayes.hpp"
#include "qmon/csv.hpp"
#include "qmon/detector.hpp"
#include "qmon/record.hpp"
#include "qmon/sde.hpp"
#include "qmon/state.hpp"
#include "qmon/vec3.hpp"

namespace qmon {

// ---------------------------------------------------------------------------
// Running windows
// ---------------------------------------------------------------------------

struct WindowSpec {
    enum class Kind { rectangular, exponential };
    Kind kind = Kind::rectangular;
    double tau = 1.0;

    std::string name() const {
        return (kind == Kind::rectangular ? "rectangular" : "exponential");
    }
};

/// Values on a (possibly strided) sub-grid of the record's time grid:
/// element i belongs to time dt * (first_step + i * stride).
template <class T>
struct SampledSeries {
    double dt = 0.0;
    std::size_t first_step = 0;
    std::size_t stride = 1;
    std::vector<T> values;

    double time(std::size_t i) const {
        return dt * static_cast<double>(first_step + i * stride);
    }
    std::size_t size() const { return values.size(); }
};

using SmoothedRecord = SampledSeries<Vec3>;

/// Smooth a record with a trailing window. Rectangular: boxcar mean of the
/// last round(tau/dt) increments, emitted once the window is full.
/// Exponential: one-pole recursion u~_m = alpha u~_{m-1} + (1-alpha) w_m/dt
/// with alpha = e^{-dt/tau} (unit-mass kernel), emitted from the first step.
inline SmoothedRecord window_filter(const MeasurementRecord& record, const WindowSpec& spec) {
    if (!(spec.tau > 0.0)) throw std::domain_error("window duration must be positive");
    SmoothedRecord out;
    out.dt = record.dt;
    const std::size_t n = record.steps();
    if (spec.kind == WindowSpec::Kind::rectangular) {
        const auto width = static_cast<std::size_t>(std::llround(spec.tau / record.dt));
        if (width < 1 || width > n) {
            throw std::domain_error("record shorter than the rectangular window");
        }
        const double inv_mass = 1.0 / (static_cast<double>(width) * record.dt);
        out.first_step = width;
        out.values.reserve(n - width + 1);
        Vec3 acc{};
        for (std::size_t m = 0; m < width; ++m) acc += record.increments[m];
        out.values.push_back(acc * inv_mass);
        for (std::size_t m = width; m < n; ++m) {
            acc += record.increments[m] - record.increments[m - width];
            out.values.push_back(acc * inv_mass);
        }
    } else {
        if (record.duration() < 10.0 * spec.tau) {
            throw std::domain_error("record shorter than the exponential-window burn-in");
        }
        const double alpha = std::exp(-record.dt / spec.tau);
        const double gain = (1.0 - alpha) / record.dt;
        out.first_step = 1;
        out.values.reserve(n);
        Vec3 state = record.increments[0] * (1.0 / record.dt);
        out.values.push_back(state);
        for (std::size_t m = 1; m < n; ++m) {
            state = state * alpha + record.increments[m] * gain;
            out.values.push_back(state);
        }
    }
    return out;
}

/// Pure-state estimate series: the direction of the smoothed record. A zero
/// smoothed vector (measure-zero event) holds the previous estimate.
struct EstimateSeries {
    double dt = 0.0;
    std::size_t first_step = 0;
    std::size_t stride = 1;
    std::vector<Vec3> estimates;
    std::string tag;

    double time(std::size_t i) const {
        return dt * static_cast<double>(first_step + i * stride);
    }
    std::size_t size() const { return estimates.size(); }
};

inline EstimateSeries window_estimate(const MeasurementRecord& record, const WindowSpec& spec) {
    const SmoothedRecord smoothed = window_filter(record, spec);
    EstimateSeries out;
    out.dt = smoothed.dt;
    out.first_step = smoothed.first_step;
    out.stride = smoothed.stride;
    out.tag = spec.name() + " tau=" + std::to_string(spec.tau);
    out.estimates.reserve(smoothed.size());
    Vec3 prev{0.0, 0.0, 1.0};
    for (const Vec3& u : smoothed.values) {
        prev = normalized(u, prev);
        out.estimates.push_back(prev);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fidelity
// ---------------------------------------------------------------------------

/// Time-averaged overlap <r(t) . r_est(t)> over estimate samples with
/// t >= t_start. The estimate grid must lie on the trajectory grid.
inline double fidelity(const Trajectory& traj, const EstimateSeries& est, double t_start) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        const double t = est.time(i);
        if (t < t_start) continue;
        const double ratio = t / traj.dt;
        const auto m = static_cast<std::size_t>(std::llround(ratio));
        if (m >= traj.states.size() || std::abs(ratio - static_cast<double>(m)) > 1e-6) {
            throw std::domain_error("estimate series is not aligned with the trajectory grid");
        }
        sum += dot(traj.states[m].bloch, est.estimates[i]);
        ++count;
    }
    if (count == 0) throw std::domain_error("no estimate samples after t_start");
    return sum / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// Discrete-time algorithms
// ---------------------------------------------------------------------------

/// Bayes update treating the bin vector u as one measurement of the spin
/// component along u/|u| with result |u| over dt_bin (ideal detectors:
/// gamma = 0). A zero bin vector holds the previous state.
inline QubitState alg1_update(const QubitState& r_prev, const Vec3& u, double dt_bin,
                              const DetectorParams& params) {
    if (!params.identical()) throw config_error("algorithm 1 assumes identical detectors");
    const double mag = norm(u);
    if (mag == 0.0) return r_prev;
    const MeasurementChannel ch{params.delta_u[0], params.s[0], 0.0};
    return bayes_update(r_prev, BayesBasis(u * (1.0 / mag)), mag, dt_bin, ch);
}

/// Rotate the previous (pure) estimate towards the bin vector by the angle
/// (delta_u/s) u_perp dt_bin, where u_perp is the component of u orthogonal
/// to the current estimate.
inline QubitState alg2_update(const QubitState& r_prev, const Vec3& u, double dt_bin,
                              const DetectorParams& params) {
    if (!params.identical()) throw config_error("algorithm 2 assumes identical detectors");
    if (std::abs(r_prev.radius() - 1.0) > 1e-9) {
        throw std::domain_error("algorithm 2 is defined for pure states only");
    }
    const Vec3 r = r_prev.bloch;
    const Vec3 u_perp = u - r * dot(u, r);
    const double mag = norm(u_perp);
    if (mag == 0.0) return r_prev;
    const double angle = params.coupling(0) * mag * dt_bin;
    const Vec3 e_perp = u_perp * (1.0 / mag);
    return {normalized(r * std::cos(angle) + e_perp * std::sin(angle))};
}

/// Sequential Bayes updates of the three spin components (ideal detectors),
/// each of duration dt_bin, applied in the configured axis order.
inline QubitState alg3_update(const QubitState& r_prev, const Vec3& u, double dt_bin,
                              const DetectorParams& params,
                              const std::array<int, 3>& order = {0, 1, 2}) {
    DetectorParams ideal = params;
    ideal.gamma = {0.0, 0.0, 0.0};
    return chained_update(r_prev, order, u, dt_bin, ideal);
}

/// Stateless estimate: the direction of the bin vector (previous estimate on
/// a zero bin).
inline Vec3 alg4_estimate(const Vec3& u, const Vec3& prev = {0.0, 0.0, 1.0}) {
    return normalized(u, prev);
}

enum class DiscreteAlgorithm : int {
    bayes_vector = 1,      // algorithm 1
    rotate_toward = 2,     // algorithm 2
    bayes_sequential = 3,  // algorithm 3
    normalized_bin = 4,    // algorithm 4
};

/// Dump an estimate series next to the true trajectory as CSV with columns
/// (t, rx, ry, rz, ex, ey, ez, dot).
inline void write_estimate_series_csv(const std::filesystem::path& path, const Trajectory& traj,
                                      const EstimateSeries& est) {
    CsvWriter csv(path);
    csv.row({std::string("t"), std::string("rx"), std::string("ry"), std::string("rz"),
             std::string("ex"), std::string("ey"), std::string("ez"), std::string("dot")});
    for (std::size_t i = 0; i < est.size(); ++i) {
        const double t = est.time(i);
        const double ratio = t / traj.dt;
        const auto m = static_cast<std::size_t>(std::llround(ratio));
        if (m >= traj.states.size() || std::abs(ratio - static_cast<double>(m)) > 1e-6) {
            throw std::domain_error("estimate series is not aligned with the trajectory grid");
        }
        const Vec3& r = traj.states[m].bloch;
        const Vec3& e = est.estimates[i];
        csv.row({t, r.x, r.y, r.z, e.x, e.y, e.z, dot(r, e)});
    }
}

/// Run one discrete algorithm over a binned record, starting from the given
/// (wrong, in general) initial estimate. Estimates are emitted at bin ends.
inline EstimateSeries discrete_algorithm_series(const BinnedRecord& binned,
                                                const DetectorParams& params,
                                                DiscreteAlgorithm alg, const Vec3& initial_estimate,
                                                const std::array<int, 3>& order = {0, 1, 2}) {
    EstimateSeries out;
    out.dt = binned.bin_dt;
    out.first_step = 1;
    out.tag = "algorithm " + std::to_string(static_cast<int>(alg));
    out.estimates.reserve(binned.bins());
    QubitState state{initial_estimate};
    for (std::size_t n = 0; n < binned.bins(); ++n) {
        const Vec3 u = binned.average(n);
        switch (alg) {
            case DiscreteAlgorithm::bayes_vector:
                state = alg1_update(state, u, binned.bin_dt, params);
                break;
            case DiscreteAlgorithm::rotate_toward:
                state = alg2_update(state, u, binned.bin_dt, params);
                break;
            case DiscreteAlgorithm::bayes_sequential:
                state = alg3_update(state, u, binned.bin_dt, params, order);
                break;
            case DiscreteAlgorithm::normalized_bin:
                state = QubitState{alg4_estimate(u, state.bloch)};
                break;
        }
        out.estimates.push_back(state.bloch);
    }
    return out;
}

}  // namespace qmon

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

#include <cstdint>
#include <string>

#include <json.hpp>

#include "qmon/detector.hpp"
#include "qmon/errors.hpp"
#include "qmon/state.hpp"

namespace qmon {

enum class Scheme { ito, stratonovich_heun };

inline std::string to_string(Scheme s) {
    return s == Scheme::ito ? "ito" : "stratonovich_heun";
}

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "ito") return Scheme::ito;
    if (s == "stratonovich_heun") return Scheme::stratonovich_heun;
    throw config_error("unknown scheme '" + s + "' (expected 'ito' or 'stratonovich_heun')");
}

/// Full description of one simulation run. Serializes to/from JSON with a
/// strict schema: unknown keys are rejected so that a misspelled field can
/// never be silently ignored.
struct SimulationConfig {
    DetectorParams params;
    QubitState initial_state{{0.0, 0.0, 0.0}};
    double total_time = 10.0;
    double dt = 1e-3;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::ito;
    std::uint64_t ensemble_size = 1;

    void validate() const {
        params.validate();
        if (!is_physical(initial_state)) throw config_error("initial state is outside the Bloch ball");
        if (!(dt > 0.0)) throw config_error("dt must be positive");
        if (!(total_time >= dt)) throw config_error("total_time must be at least dt");
        if (ensemble_size < 1) throw config_error("ensemble_size must be >= 1");
        // keep the fine step well below the fastest measurement time
        for (int k = 0; k < 3; ++k) {
            if (params.delta_u[k] != 0.0 && dt > params.meas_time(k) / 100.0) {
                throw config_error("dt must not exceed tau_meas/100 of any active detector");
            }
        }
    }

    std::uint64_t steps() const { return static_cast<std::uint64_t>(std::llround(total_time / dt)); }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                                const std::string& where) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (item.key() == a) {
                known = true;
                break;
            }
        }
        if (!known) throw config_error("unknown key '" + item.key() + "' in " + where);
    }
}

inline const nlohmann::json& require_key(const nlohmann::json& j, const char* key,
                                         const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw config_error("missing key '" + std::string(key) + "' in " + where);
    return *it;
}

inline std::array<double, 3> triple(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) throw config_error(where + " must be an array of 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace detail

inline nlohmann::json to_json(const DetectorParams& p) {
    return {{"delta_u_k", p.delta_u}, {"s_k", p.s}, {"gamma_k", p.gamma}};
}

inline DetectorParams detector_params_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw config_error("params must be an object");
    detail::reject_unknown_keys(j, {"delta_u_k", "s_k", "gamma_k"}, "params");
    DetectorParams p;
    p.delta_u = detail::triple(detail::require_key(j, "delta_u_k", "params"), "params.delta_u_k");
    p.s = detail::triple(detail::require_key(j, "s_k", "params"), "params.s_k");
    p.gamma = detail::triple(detail::require_key(j, "gamma_k", "params"), "params.gamma_k");
    return p;
}

inline nlohmann::json to_json(const SimulationConfig& c) {
    return {{"params", to_json(c.params)},
            {"initial_state", {{"bloch", c.initial_state.bloch.as_array()}}},
            {"total_time", c.total_time},
            {"dt", c.dt},
            {"seed", c.seed},
            {"scheme", to_string(c.scheme)},
            {"ensemble_size", c.ensemble_size}};
}

inline SimulationConfig simulation_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw config_error("config must be an object");
    detail::reject_unknown_keys(
        j, {"params", "initial_state", "total_time", "dt", "seed", "scheme", "ensemble_size"},
        "config");
    SimulationConfig c;
    c.params = detector_params_from_json(detail::require_key(j, "params", "config"));
    const auto& init = detail::require_key(j, "initial_state", "config");
    if (!init.is_object()) throw config_error("initial_state must be an object");
    detail::reject_unknown_keys(init, {"bloch"}, "initial_state");
    const auto b = detail::triple(detail::require_key(init, "bloch", "initial_state"),
                                  "initial_state.bloch");
    c.initial_state = QubitState{{b[0], b[1], b[2]}};
    c.total_time = detail::require_key(j, "total_time", "config").get<double>();
    c.dt = detail::require_key(j, "dt", "config").get<double>();
    c.seed = detail::require_key(j, "seed", "config").get<std::uint64_t>();
    c.scheme = scheme_from_string(detail::require_key(j, "scheme", "config").get<std::string>());
    c.ensemble_size = detail::require_key(j, "ensemble_size", "config").get<std::uint64_t>();
    c.validate();
    return c;
}

}  // namespace qmon

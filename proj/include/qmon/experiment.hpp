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

// Experiment orchestration: JSON experiment specs, seeded parallel ensembles,
// ensemble statistics with standard errors, and the CSV tables behind each
// sweep. All reductions are ordered by trajectory index and use pairwise
// summation, so a run is byte-identical for any worker count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmon/config.hpp"
#include "qmon/correlators.hpp"
#include "qmon/csv.hpp"
#include "qmon/ensemble.hpp"
#include "qmon/estimators.hpp"
#include "qmon/fokker_planck.hpp"
#include "qmon/purity_law.hpp"
#include "qmon/record.hpp"
#include "qmon/sde.hpp"
#include "qmon/sphere_diffusion.hpp"
#include "qmon/stats.hpp"

namespace qmon {

enum class ExperimentKind {
    fig2_purity,
    fig3_window_fidelity,
    fig4_discrete_algorithms,
    correlator_check,
    sphere_diffusion_check,
    custom,
};

inline std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::fig2_purity: return "fig2_purity";
        case ExperimentKind::fig3_window_fidelity: return "fig3_window_fidelity";
        case ExperimentKind::fig4_discrete_algorithms: return "fig4_discrete_algorithms";
        case ExperimentKind::correlator_check: return "correlator_check";
        case ExperimentKind::sphere_diffusion_check: return "sphere_diffusion_check";
        case ExperimentKind::custom: return "custom";
    }
    return "custom";
}

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
    for (ExperimentKind k :
         {ExperimentKind::fig2_purity, ExperimentKind::fig3_window_fidelity,
          ExperimentKind::fig4_discrete_algorithms, ExperimentKind::correlator_check,
          ExperimentKind::sphere_diffusion_check, ExperimentKind::custom}) {
        if (to_string(k) == s) return k;
    }
    throw config_error("unknown experiment kind '" + s + "'");
}

/// One experiment: a kind, its sweep lists (filled with the standard values
/// when left empty) and the simulation defaults shared by every sweep point.
struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::custom;
    std::vector<double> eta_list;
    std::vector<double> tau_list;
    std::vector<double> delta_t_list;
    SimulationConfig config;
    std::string output_prefix = "out/";

    void apply_defaults() {
        switch (kind) {
            case ExperimentKind::fig2_purity:
                if (eta_list.empty()) eta_list = {1.0, 0.5, 0.1};
                break;
            case ExperimentKind::fig3_window_fidelity:
                if (eta_list.empty()) eta_list = {1.0, 0.5, 0.1};
                if (tau_list.empty()) {
                    for (int i = 0; i < 24; ++i) {
                        tau_list.push_back(0.05 * std::pow(100.0, i / 23.0));
                    }
                }
                break;
            case ExperimentKind::fig4_discrete_algorithms:
                if (eta_list.empty()) eta_list = {1.0};
                if (delta_t_list.empty()) {
                    delta_t_list = {0.02, 0.04, 0.07, 0.12, 0.2, 0.3, 0.45, 0.65,
                                    0.9,  1.0,  1.2,  1.5,  1.8, 2.2, 2.6,  3.0};
                }
                break;
            case ExperimentKind::correlator_check:
                if (eta_list.empty()) eta_list = {0.5, 1.0};
                if (delta_t_list.empty()) delta_t_list = {0.2, 0.5, 1.0, 2.0};
                break;
            case ExperimentKind::sphere_diffusion_check:
                if (eta_list.empty()) eta_list = {1.0};
                if (tau_list.empty()) tau_list = {0.05, 0.25, 1.0, 5.0};
                break;
            case ExperimentKind::custom: break;
        }
    }

    void validate() const {
        config.validate();
        if (kind != ExperimentKind::custom && eta_list.empty() && tau_list.empty() &&
            delta_t_list.empty()) {
            throw config_error("sweep lists are empty after defaulting");
        }
        for (double eta : eta_list) {
            if (!(eta > 0.0) || eta > 1.0) throw config_error("eta values must lie in (0, 1]");
        }
        if (kind == ExperimentKind::sphere_diffusion_check) {
            if (eta_list.size() != 1 || eta_list[0] != 1.0) {
                throw config_error("the sphere-diffusion check is defined for eta = 1 only");
            }
        }
    }
};

inline nlohmann::json to_json(const ExperimentSpec& s) {
    return {{"kind", to_string(s.kind)},         {"eta_list", s.eta_list},
            {"tau_list", s.tau_list},            {"delta_t_list", s.delta_t_list},
            {"config", to_json(s.config)},       {"output_prefix", s.output_prefix}};
}

inline ExperimentSpec experiment_spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw config_error("experiment spec must be an object");
    detail::reject_unknown_keys(
        j, {"kind", "eta_list", "tau_list", "delta_t_list", "config", "output_prefix"},
        "experiment spec");
    ExperimentSpec s;
    s.kind = experiment_kind_from_string(
        detail::require_key(j, "kind", "experiment spec").get<std::string>());
    if (j.contains("eta_list")) s.eta_list = j["eta_list"].get<std::vector<double>>();
    if (j.contains("tau_list")) s.tau_list = j["tau_list"].get<std::vector<double>>();
    if (j.contains("delta_t_list")) s.delta_t_list = j["delta_t_list"].get<std::vector<double>>();
    s.config = simulation_config_from_json(detail::require_key(j, "config", "experiment spec"));
    s.output_prefix =
        detail::require_key(j, "output_prefix", "experiment spec").get<std::string>();
    s.apply_defaults();
    s.validate();
    return s;
}

struct RunOptions {
    unsigned workers = 1;
    bool quick = false;  // divide the trajectory budget by 20 (CI smoke runs)
    bool write_files = true;
};

namespace detail {

inline std::uint64_t effective_ensemble(const ExperimentSpec& spec, const RunOptions& opt) {
    if (!opt.quick) return spec.config.ensemble_size;
    return std::max<std::uint64_t>(1, spec.config.ensemble_size / 20);
}

inline void write_meta(const ExperimentSpec& spec, const RunOptions& opt, const std::string& name,
                       double wall_seconds, std::uint64_t n_traj) {
    if (!opt.write_files) return;
    nlohmann::json meta = {{"experiment", to_string(spec.kind)},
                           {"seed", spec.config.seed},
                           {"dt", spec.config.dt},
                           {"scheme", to_string(spec.config.scheme)},
                           {"total_time", spec.config.total_time},
                           {"trajectories", n_traj},
                           {"workers", opt.workers},
                           {"quick", opt.quick},
                           {"wall_seconds", wall_seconds}};
    const std::filesystem::path path(spec.output_prefix + name + "_meta.json");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    out << meta.dump(2) << "\n";
}

class WallTimer {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Purity evolution (ensemble average vs. Fokker-Planck vs. naive rate ODE)
// ---------------------------------------------------------------------------

struct PurityEvolutionPoint {
    double eta = 0.0;
    double t = 0.0;
    double p_fp = 0.0;
    MeanStderr p_mc;
    double sqrtp_fp = 0.0;
    MeanStderr sqrtp_mc;
    double p_naive = 0.0;
};

struct PurityEvolutionResult {
    std::vector<double> times;
    std::vector<PurityEvolutionPoint> points;           // eta outer, time inner
    std::vector<std::vector<double>> final_purities;    // per eta: P(T) samples
};

inline PurityEvolutionResult run_purity_evolution(const ExperimentSpec& spec,
                                                  const RunOptions& opt) {
    const detail::WallTimer timer;
    const std::uint64_t n_traj = detail::effective_ensemble(spec, opt);
    const double dt = spec.config.dt;
    const auto out_stride = static_cast<std::uint64_t>(std::llround(0.1 / dt));
    const std::uint64_t n_steps = spec.config.steps();

    PurityEvolutionResult result;
    for (std::uint64_t m = 0; m <= n_steps; m += out_stride) {
        result.times.push_back(dt * static_cast<double>(m));
    }
    const std::size_t n_out = result.times.size();

    for (std::size_t e = 0; e < spec.eta_list.size(); ++e) {
        const double eta = spec.eta_list[e];
        SimulationConfig config = spec.config;
        config.params = identical_detectors_from_eta(eta);
        config.initial_state = QubitState{{0.0, 0.0, 0.0}};

        auto per_traj = run_indexed<std::vector<double>>(n_traj, opt.workers, [&](std::size_t i) {
            std::vector<double> purities(n_out, 0.0);
            purities[0] = purity(config.initial_state);
            simulate_stream(config, i, [&](std::uint64_t m, const QubitState& s, const Vec3&) {
                if ((m + 1) % out_stride == 0) purities[(m + 1) / out_stride] = purity(s);
            }, e);
            return purities;
        });

        const auto fp = fp_solve(eta, 0.0, result.times);
        const auto naive = naive_purity_ode(eta, 0.0, result.times);

        std::vector<double> column(n_traj), sqrt_column(n_traj);
        for (std::size_t j = 0; j < n_out; ++j) {
            for (std::uint64_t i = 0; i < n_traj; ++i) {
                column[i] = per_traj[i][j];
                sqrt_column[i] = std::sqrt(per_traj[i][j]);
            }
            PurityEvolutionPoint pt;
            pt.eta = eta;
            pt.t = result.times[j];
            pt.p_fp = fp[j].mean_purity();
            pt.p_mc = mean_stderr(column);
            pt.sqrtp_fp = fp[j].mean_bloch_length();
            pt.sqrtp_mc = mean_stderr(sqrt_column);
            pt.p_naive = naive[j];
            result.points.push_back(pt);
        }
        std::vector<double> finals(n_traj);
        for (std::uint64_t i = 0; i < n_traj; ++i) finals[i] = per_traj[i][n_out - 1];
        result.final_purities.push_back(std::move(finals));
    }

    if (opt.write_files) {
        CsvWriter csv(spec.output_prefix + "purity_evolution.csv");
        csv.row({std::string("eta"), std::string("t"), std::string("p_fp"), std::string("p_mc"),
                 std::string("p_mc_stderr"), std::string("sqrtp_fp"), std::string("sqrtp_mc"),
                 std::string("sqrtp_mc_stderr"), std::string("p_naive")});
        for (const auto& pt : result.points) {
            csv.row({pt.eta, pt.t, pt.p_fp, pt.p_mc.mean, pt.p_mc.stderr_, pt.sqrtp_fp,
                     pt.sqrtp_mc.mean, pt.sqrtp_mc.stderr_, pt.p_naive});
        }
    }
    detail::write_meta(spec, opt, "purity_evolution", timer.seconds(), n_traj);
    return result;
}

// ---------------------------------------------------------------------------
// Window-estimator fidelity sweep
// ---------------------------------------------------------------------------

struct WindowFidelityPoint {
    double eta = 0.0;
    WindowSpec::Kind kind = WindowSpec::Kind::rectangular;
    double tau = 0.0;
    MeanStderr F;
    double mean_r = 0.0;    // stationary <r> over the scored samples
    double mean_cos = 0.0;  // <cos phi> over the scored samples
    double uncorrelated_product = 0.0;
    double r_bound = 0.0;   // stationary <r> from the analytic purity law
};

struct WindowFidelityResult {
    std::vector<WindowFidelityPoint> points;  // eta outer, kind, then tau
    std::vector<std::string> warnings;
};

namespace detail {

struct WindowTrajStats {
    // indexed [kind][tau]
    std::array<std::vector<double>, 2> fidelity;
    std::array<std::vector<double>, 2> mean_r;
    std::array<std::vector<double>, 2> mean_cos;
};

}  // namespace detail

inline WindowFidelityResult run_window_fidelity(const ExperimentSpec& spec,
                                                const RunOptions& opt) {
    const detail::WallTimer timer;
    const std::uint64_t n_traj = detail::effective_ensemble(spec, opt);
    const double dt = spec.config.dt;
    const std::uint64_t n_steps = spec.config.steps();
    // evaluation grid for estimates and truth samples
    const auto stride = static_cast<std::uint64_t>(std::llround(0.01 / dt));
    if (stride < 1 || n_steps % stride != 0) {
        throw config_error("window sweep needs dt dividing the 0.01 evaluation grid");
    }
    const std::uint64_t n_samples = n_steps / stride;
    const double sample_dt = dt * static_cast<double>(stride);
    const std::vector<double>& taus = spec.tau_list;

    WindowFidelityResult result;
    for (std::size_t e = 0; e < spec.eta_list.size(); ++e) {
        const double eta = spec.eta_list[e];
        SimulationConfig config = spec.config;
        config.params = identical_detectors_from_eta(eta);
        config.initial_state = QubitState{{0.0, 0.0, 0.0}};
        const double tau_meas = config.params.meas_time(0);
        // at eta = 1 the true state is exactly pure: integrate on the sphere
        // (projection mode) from a random pure state
        const bool pure_mode = eta == 1.0;
        const RngStream init_stream{config.seed, RngPurpose::initial_state, e};

        auto per_traj = run_indexed<detail::WindowTrajStats>(
            n_traj, opt.workers, [&](std::size_t i) {
                // simulate, keeping the full record and strided truth samples
                std::vector<Vec3> prefix(n_steps + 1, Vec3{});
                std::vector<Vec3> truth(n_samples);
                std::vector<Vec3> coarse(n_samples, Vec3{});
                const auto collect = [&](std::uint64_t m, const QubitState& s, const Vec3& w) {
                    prefix[m + 1] = prefix[m] + w;
                    if ((m + 1) % stride == 0) truth[(m + 1) / stride - 1] = s.bloch;
                };
                if (pure_mode) {
                    SimulationConfig cfg = config;
                    cfg.initial_state = QubitState{random_unit_vector(init_stream, i)};
                    simulate_stream_on_sphere(cfg, i, collect, e);
                } else {
                    simulate_stream(config, i, collect, e);
                }
                for (std::uint64_t sidx = 0; sidx < n_samples; ++sidx) {
                    coarse[sidx] = prefix[(sidx + 1) * stride] - prefix[sidx * stride];
                }

                detail::WindowTrajStats stats;
                for (int kind = 0; kind < 2; ++kind) {
                    stats.fidelity[kind].resize(taus.size());
                    stats.mean_r[kind].resize(taus.size());
                    stats.mean_cos[kind].resize(taus.size());
                }
                std::vector<Vec3> smoothed(n_samples);
                for (std::size_t ti = 0; ti < taus.size(); ++ti) {
                    const double tau = taus[ti];
                    const double t_start = std::max(10.0 * tau, 10.0 * tau_meas);
                    for (int kind = 0; kind < 2; ++kind) {
                        if (kind == 0) {
                            // rectangular boxcar via prefix sums on the fine grid
                            const auto width =
                                static_cast<std::uint64_t>(std::llround(tau / dt));
                            const double inv_mass = 1.0 / (static_cast<double>(width) * dt);
                            for (std::uint64_t sidx = 0; sidx < n_samples; ++sidx) {
                                const std::uint64_t m = (sidx + 1) * stride;
                                smoothed[sidx] = m >= width
                                                     ? (prefix[m] - prefix[m - width]) * inv_mass
                                                     : Vec3{};
                            }
                        } else {
                            // one-pole recursion on the coarse grid
                            const double alpha = std::exp(-sample_dt / tau);
                            const double gain = (1.0 - alpha) / sample_dt;
                            Vec3 ema = coarse[0] * (1.0 / sample_dt);
                            smoothed[0] = ema;
                            for (std::uint64_t sidx = 1; sidx < n_samples; ++sidx) {
                                ema = ema * alpha + coarse[sidx] * gain;
                                smoothed[sidx] = ema;
                            }
                        }
                        double f_sum = 0.0, r_sum = 0.0, c_sum = 0.0;
                        std::size_t count = 0;
                        Vec3 prev_dir{0.0, 0.0, 1.0};
                        const auto first =
                            static_cast<std::uint64_t>(std::ceil(t_start / sample_dt));
                        if (first >= n_samples) {
                            throw config_error("record shorter than the fidelity burn-in");
                        }
                        for (std::uint64_t sidx = first; sidx < n_samples; ++sidx) {
                            prev_dir = normalized(smoothed[sidx], prev_dir);
                            const Vec3& r = truth[sidx];
                            const double rn = norm(r);
                            const double d = dot(r, prev_dir);
                            f_sum += d;
                            r_sum += rn;
                            if (rn > 1e-12) c_sum += d / rn;
                            ++count;
                        }
                        stats.fidelity[kind][ti] = f_sum / static_cast<double>(count);
                        stats.mean_r[kind][ti] = r_sum / static_cast<double>(count);
                        stats.mean_cos[kind][ti] = c_sum / static_cast<double>(count);
                    }
                }
                return stats;
            });

        const double bound =
            eta >= 1.0 ? 1.0 : StationaryPurityDistribution(eta).mean_bloch_length();
        std::vector<double> buf(n_traj);
        for (int kind = 0; kind < 2; ++kind) {
            for (std::size_t ti = 0; ti < taus.size(); ++ti) {
                WindowFidelityPoint pt;
                pt.eta = eta;
                pt.kind = kind == 0 ? WindowSpec::Kind::rectangular : WindowSpec::Kind::exponential;
                pt.tau = taus[ti];
                for (std::uint64_t i = 0; i < n_traj; ++i) buf[i] = per_traj[i].fidelity[kind][ti];
                pt.F = mean_stderr(buf);
                for (std::uint64_t i = 0; i < n_traj; ++i) buf[i] = per_traj[i].mean_r[kind][ti];
                pt.mean_r = mean_stderr(buf).mean;
                for (std::uint64_t i = 0; i < n_traj; ++i) buf[i] = per_traj[i].mean_cos[kind][ti];
                pt.mean_cos = mean_stderr(buf).mean;
                pt.uncorrelated_product = pt.mean_r * pt.mean_cos;
                pt.r_bound = bound;
                result.points.push_back(pt);
            }
        }
    }

    // unimodality diagnostic (warning only): count significant direction
    // changes of F along tau for each (eta, kind) curve
    const std::size_t per_curve = taus.size();
    for (std::size_t c = 0; c + per_curve <= result.points.size(); c += per_curve) {
        int direction_changes = 0;
        int last_sign = 0;
        for (std::size_t i = c + 1; i < c + per_curve; ++i) {
            const double diff = result.points[i].F.mean - result.points[i - 1].F.mean;
            const double sig = 2.0 * (result.points[i].F.stderr_ + result.points[i - 1].F.stderr_);
            if (std::abs(diff) <= sig) continue;
            const int sign = diff > 0.0 ? 1 : -1;
            if (last_sign != 0 && sign != last_sign) ++direction_changes;
            last_sign = sign;
        }
        if (direction_changes > 1) {
            result.warnings.push_back(
                "fidelity curve (eta=" + std::to_string(result.points[c].eta) + ", " +
                (result.points[c].kind == WindowSpec::Kind::rectangular ? "rectangular"
                                                                        : "exponential") +
                ") is not unimodal within error bars");
        }
    }
    for (const std::string& w : result.warnings) {
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    }

    if (opt.write_files) {
        CsvWriter csv(spec.output_prefix + "window_fidelity.csv");
        csv.row({std::string("eta"), std::string("kind"), std::string("tau"), std::string("F"),
                 std::string("stderr"), std::string("uncorrelated_product"),
                 std::string("r_bound")});
        for (const auto& pt : result.points) {
            csv.row({pt.eta,
                     std::string(pt.kind == WindowSpec::Kind::rectangular ? "rectangular"
                                                                          : "exponential"),
                     pt.tau, pt.F.mean, pt.F.stderr_, pt.uncorrelated_product, pt.r_bound});
        }
    }
    detail::write_meta(spec, opt, "window_fidelity", timer.seconds(), n_traj);
    return result;
}

// ---------------------------------------------------------------------------
// Discrete-algorithm fidelity sweep
// ---------------------------------------------------------------------------

struct DiscreteFidelityPoint {
    int algorithm = 1;
    double delta_t = 0.0;
    MeanStderr F;
};

struct DiscreteFidelityResult {
    std::vector<DiscreteFidelityPoint> points;  // algorithm outer, delta_t inner
};

inline DiscreteFidelityResult run_discrete_algorithms(const ExperimentSpec& spec,
                                                      const RunOptions& opt) {
    const detail::WallTimer timer;
    const std::uint64_t n_traj = detail::effective_ensemble(spec, opt);
    const double dt = spec.config.dt;
    const std::uint64_t n_steps = spec.config.steps();
    const auto stride = static_cast<std::uint64_t>(std::llround(0.01 / dt));
    if (stride < 1 || n_steps % stride != 0) {
        throw config_error("discrete sweep needs dt dividing the 0.01 bin grid");
    }
    const double coarse_dt = dt * static_cast<double>(stride);
    const std::uint64_t n_coarse = n_steps / stride;
    const std::vector<double>& dts = spec.delta_t_list;
    for (double bin : dts) {
        steps_per_bin(coarse_dt, bin);  // throws unless commensurate
    }

    SimulationConfig config = spec.config;
    const double eta = spec.eta_list.empty() ? 1.0 : spec.eta_list[0];
    config.params = identical_detectors_from_eta(eta);
    config.initial_state = QubitState{{0.0, 0.0, 0.0}};
    const double tau_meas = config.params.meas_time(0);
    const bool pure_mode = eta == 1.0;  // exactly pure truth at eta = 1
    const RngStream init_stream{config.seed, RngPurpose::estimator_init, 0};
    const RngStream state_stream{config.seed, RngPurpose::initial_state, 0};

    constexpr int kAlgs = 4;
    using TrajFids = std::vector<double>;  // [alg * dts.size() + dt_index]
    auto per_traj = run_indexed<TrajFids>(n_traj, opt.workers, [&](std::size_t i) {
        MeasurementRecord coarse;
        coarse.dt = coarse_dt;
        coarse.increments.assign(n_coarse, Vec3{});
        std::vector<Vec3> truth(n_coarse);
        Vec3 acc{};
        const auto collect = [&](std::uint64_t m, const QubitState& s, const Vec3& w) {
            acc += w;
            if ((m + 1) % stride == 0) {
                coarse.increments[(m + 1) / stride - 1] = acc;
                acc = Vec3{};
                truth[(m + 1) / stride - 1] = s.bloch;
            }
        };
        if (pure_mode) {
            SimulationConfig cfg = config;
            cfg.initial_state = QubitState{random_unit_vector(state_stream, i)};
            simulate_stream_on_sphere(cfg, i, collect);
        } else {
            simulate_stream(config, i, collect);
        }
        const Vec3 wrong_init = random_unit_vector(init_stream, i);

        TrajFids fids(kAlgs * dts.size(), 0.0);
        for (std::size_t di = 0; di < dts.size(); ++di) {
            const double bin_dt = dts[di];
            const BinnedRecord binned = bin_record(coarse, bin_dt);
            const double t_start = std::max(10.0 * bin_dt, 10.0 * tau_meas);
            const auto bins_per_bin = static_cast<std::uint64_t>(binned.steps_per_bin);
            for (int alg = 0; alg < kAlgs; ++alg) {
                const EstimateSeries series = discrete_algorithm_series(
                    binned, config.params, static_cast<DiscreteAlgorithm>(alg + 1), wrong_init);
                double sum = 0.0;
                std::size_t count = 0;
                for (std::size_t n = 0; n < series.size(); ++n) {
                    const double t = series.time(n);
                    if (t < t_start) continue;
                    const std::uint64_t c_index = (n + 1) * bins_per_bin - 1;
                    sum += dot(truth[c_index], series.estimates[n]);
                    ++count;
                }
                fids[alg * dts.size() + di] = sum / static_cast<double>(count);
            }
        }
        return fids;
    });

    DiscreteFidelityResult result;
    std::vector<double> buf(n_traj);
    for (int alg = 0; alg < kAlgs; ++alg) {
        for (std::size_t di = 0; di < dts.size(); ++di) {
            for (std::uint64_t i = 0; i < n_traj; ++i) buf[i] = per_traj[i][alg * dts.size() + di];
            DiscreteFidelityPoint pt;
            pt.algorithm = alg + 1;
            pt.delta_t = dts[di];
            pt.F = mean_stderr(buf);
            result.points.push_back(pt);
        }
    }

    if (opt.write_files) {
        CsvWriter csv(spec.output_prefix + "discrete_fidelity.csv");
        csv.row({std::string("algorithm"), std::string("delta_t"), std::string("F"),
                 std::string("stderr")});
        for (const auto& pt : result.points) {
            csv.row({static_cast<long long>(pt.algorithm), pt.delta_t, pt.F.mean, pt.F.stderr_});
        }
    }
    detail::write_meta(spec, opt, "discrete_fidelity", timer.seconds(), n_traj);
    return result;
}

// ---------------------------------------------------------------------------
// Signal-qubit correlators
// ---------------------------------------------------------------------------

struct CorrelatorPoint {
    double eta = 0.0;
    double delta_t = 0.0;
    MeanStderr same_axis;
    double theory = 0.0;
    MeanStderr cross_x;
    MeanStderr cross_y;
};

struct CorrelatorResult {
    std::vector<CorrelatorPoint> points;  // eta outer, delta_t inner
    std::vector<double> fitted_time_constants;  // one per eta, from ln C fit
};

inline CorrelatorResult run_correlator_check(const ExperimentSpec& spec, const RunOptions& opt) {
    const detail::WallTimer timer;
    const std::uint64_t n_traj = detail::effective_ensemble(spec, opt);
    const double dt = spec.config.dt;
    const std::uint64_t n_steps = spec.config.steps();
    const double burn_in = 20.0;
    const auto burn_steps = static_cast<std::uint64_t>(std::llround(burn_in / dt));
    if (burn_steps >= n_steps) throw config_error("correlator run shorter than its burn-in");

    // lag measured from the end of the record bin to the state sample, so the
    // equal-time point already contains the detector's own back-action kick
    std::vector<std::uint64_t> lags;
    for (double d : spec.delta_t_list) {
        if (d < 0.0) throw config_error("correlator lags must be non-negative");
        lags.push_back(static_cast<std::uint64_t>(std::llround(d / dt)));
    }

    CorrelatorResult result;
    for (std::size_t e = 0; e < spec.eta_list.size(); ++e) {
        const double eta = spec.eta_list[e];
        SimulationConfig config = spec.config;
        config.params = identical_detectors_from_eta(eta);
        config.initial_state = QubitState{{0.0, 0.0, 0.0}};

        using TrajCorr = std::vector<double>;  // [lag] same, then cross_x, cross_y
        auto per_traj = run_indexed<TrajCorr>(n_traj, opt.workers, [&](std::size_t i) {
            std::vector<Vec3> states(n_steps);
            std::vector<double> wz(n_steps);
            simulate_stream(config, i, [&](std::uint64_t m, const QubitState& s, const Vec3& w) {
                states[m] = s.bloch;
                wz[m] = w.z;
            }, e);
            TrajCorr corr(3 * lags.size(), 0.0);
            for (std::size_t li = 0; li < lags.size(); ++li) {
                const std::uint64_t lag = lags[li];
                double sz = 0.0, sx = 0.0, sy = 0.0;
                std::uint64_t count = 0;
                for (std::uint64_t m = burn_steps; m + lag < n_steps; ++m) {
                    const double u = wz[m] / dt;
                    const Vec3& r = states[m + lag];
                    sz += u * r.z;
                    sx += u * r.x;
                    sy += u * r.y;
                    ++count;
                }
                corr[li] = sz / static_cast<double>(count);
                corr[lags.size() + li] = sx / static_cast<double>(count);
                corr[2 * lags.size() + li] = sy / static_cast<double>(count);
            }
            return corr;
        });

        std::vector<double> buf(n_traj);
        std::vector<double> lag_times, log_means;
        for (std::size_t li = 0; li < lags.size(); ++li) {
            CorrelatorPoint pt;
            pt.eta = eta;
            pt.delta_t = spec.delta_t_list[li];
            for (std::uint64_t i = 0; i < n_traj; ++i) buf[i] = per_traj[i][li];
            pt.same_axis = mean_stderr(buf);
            pt.theory = same_axis_correlator(pt.delta_t, config.params);
            for (std::uint64_t i = 0; i < n_traj; ++i) buf[i] = per_traj[i][lags.size() + li];
            pt.cross_x = mean_stderr(buf);
            for (std::uint64_t i = 0; i < n_traj; ++i) buf[i] = per_traj[i][2 * lags.size() + li];
            pt.cross_y = mean_stderr(buf);
            result.points.push_back(pt);
            if (pt.same_axis.mean > 0.0) {
                lag_times.push_back(pt.delta_t);
                log_means.push_back(std::log(pt.same_axis.mean));
            }
        }
        if (lag_times.size() >= 2) {
            const LinearFit fit = linear_fit(lag_times, log_means);
            result.fitted_time_constants.push_back(-1.0 / fit.slope);
        } else {
            result.fitted_time_constants.push_back(0.0);
        }
    }

    if (opt.write_files) {
        CsvWriter csv(spec.output_prefix + "correlators.csv");
        csv.row({std::string("eta"), std::string("delta_t"), std::string("same_axis_mc"),
                 std::string("same_axis_stderr"), std::string("same_axis_theory"),
                 std::string("cross_x_mc"), std::string("cross_x_stderr"),
                 std::string("cross_y_mc"), std::string("cross_y_stderr")});
        for (const auto& pt : result.points) {
            csv.row({pt.eta, pt.delta_t, pt.same_axis.mean, pt.same_axis.stderr_, pt.theory,
                     pt.cross_x.mean, pt.cross_x.stderr_, pt.cross_y.mean, pt.cross_y.stderr_});
        }
    }
    detail::write_meta(spec, opt, "correlators", timer.seconds(), n_traj);
    return result;
}

// ---------------------------------------------------------------------------
// Sphere-diffusion check (ideal detectors, pure state)
// ---------------------------------------------------------------------------

struct SphereHistogramBin {
    double cos_lo = 0.0;
    double cos_hi = 0.0;
    std::size_t observed = 0;
    double expected = 0.0;
};

struct SphereCheckPoint {
    double tau = 0.0;
    Chi2Result chi2_series;
    std::optional<Chi2Result> chi2_uniform;  // only evaluated on the longest times
    MeanStderr theta2;
    double theta2_series = 0.0;
    double min_purity = 1.0;
    std::vector<SphereHistogramBin> histogram;
};

struct SphereCheckResult {
    std::vector<SphereCheckPoint> points;
};

inline SphereCheckResult run_sphere_diffusion_check(const ExperimentSpec& spec,
                                                    const RunOptions& opt) {
    const detail::WallTimer timer;
    const std::uint64_t n_traj = detail::effective_ensemble(spec, opt);
    const double dt = spec.config.dt;
    std::vector<double> taus = spec.tau_list;
    std::sort(taus.begin(), taus.end());
    const double t_max = taus.back();

    SimulationConfig config = spec.config;
    config.params = identical_detectors_from_eta(1.0);
    config.initial_state = QubitState{{0.0, 0.0, 1.0}};
    config.total_time = t_max;

    std::vector<std::uint64_t> sample_steps;
    for (double tau : taus) {
        const auto m = static_cast<std::uint64_t>(std::llround(tau / dt));
        if (std::abs(tau - dt * static_cast<double>(m)) > 1e-9) {
            throw config_error("sphere-check sample times must lie on the step grid");
        }
        sample_steps.push_back(m);
    }

    // cos(theta) at each sample time, followed by the minimal purity
    using TrajSample = std::vector<double>;
    auto per_traj = run_indexed<TrajSample>(n_traj, opt.workers, [&](std::size_t i) {
        TrajSample out(taus.size() + 1, 1.0);
        double min_p = 1.0;
        std::size_t next = 0;
        simulate_stream_on_sphere(config, i, [&](std::uint64_t m, const QubitState& s, const Vec3&) {
            min_p = std::min(min_p, purity(s));
            if (next < sample_steps.size() && m + 1 == sample_steps[next]) {
                out[next] = s.bloch.z / s.radius();
                ++next;
            }
        });
        out[taus.size()] = min_p;
        return out;
    });

    SphereCheckResult result;
    constexpr int kBins = 25;
    for (std::size_t ti = 0; ti < taus.size(); ++ti) {
        SphereCheckPoint pt;
        pt.tau = taus[ti];
        const SphereDiffusionKernel kernel(pt.tau);
        pt.theta2_series = kernel.mean_theta2();

        // equal-probability bin edges in cos(theta), found by bisection on
        // the upper-tail probability
        std::vector<double> edges(kBins + 1);
        edges[0] = -1.0;
        edges[kBins] = 1.0;
        for (int b = 1; b < kBins; ++b) {
            const double target = static_cast<double>(kBins - b) / kBins;  // P(cos > edge)
            double lo = -1.0, hi = 1.0;
            for (int iter = 0; iter < 60; ++iter) {
                const double mid = 0.5 * (lo + hi);
                if (kernel.prob_cos_interval(mid, 1.0) > target) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            edges[b] = 0.5 * (lo + hi);
        }
        std::vector<std::size_t> counts(kBins, 0);
        std::vector<double> theta2_samples(n_traj);
        double min_p = 1.0;
        for (std::uint64_t i = 0; i < n_traj; ++i) {
            const double c = std::clamp(per_traj[i][ti], -1.0, 1.0);
            const double theta = std::acos(c);
            theta2_samples[i] = theta * theta;
            const auto b = std::min<std::size_t>(
                kBins - 1, std::upper_bound(edges.begin(), edges.end(), c) - edges.begin() - 1);
            ++counts[b];
            min_p = std::min(min_p, per_traj[i][taus.size()]);
        }
        pt.min_purity = min_p;
        pt.theta2 = mean_stderr(theta2_samples);

        std::vector<double> probs(kBins);
        for (int b = 0; b < kBins; ++b) {
            probs[b] = kernel.prob_cos_interval(edges[b], edges[b + 1]);
            pt.histogram.push_back({edges[b], edges[b + 1], counts[b], probs[b] * n_traj});
        }
        pt.chi2_series = chi2_test(counts, probs);

        if (ti + 1 == taus.size()) {
            // long-time uniformity in cos(theta)
            constexpr int kU = 16;
            std::vector<std::size_t> ucounts(kU, 0);
            for (std::uint64_t i = 0; i < n_traj; ++i) {
                const double c = std::clamp(per_traj[i][ti], -1.0, 1.0);
                const auto b = std::min<int>(kU - 1, static_cast<int>((c + 1.0) / 2.0 * kU));
                ++ucounts[b];
            }
            std::vector<double> uprobs(kU, 1.0 / kU);
            pt.chi2_uniform = chi2_test(ucounts, uprobs);
        }
        result.points.push_back(pt);
    }

    if (opt.write_files) {
        CsvWriter hist(spec.output_prefix + "sphere_histogram.csv");
        hist.row({std::string("tau"), std::string("cos_lo"), std::string("cos_hi"),
                  std::string("observed"), std::string("expected")});
        for (const auto& pt : result.points) {
            for (const auto& bin : pt.histogram) {
                hist.row({pt.tau, bin.cos_lo, bin.cos_hi, static_cast<long long>(bin.observed),
                          bin.expected});
            }
        }
        CsvWriter summary(spec.output_prefix + "sphere_summary.csv");
        summary.row({std::string("tau"), std::string("chi2"), std::string("dof"),
                     std::string("p_value"), std::string("theta2_mc"),
                     std::string("theta2_stderr"), std::string("theta2_series"),
                     std::string("min_purity")});
        for (const auto& pt : result.points) {
            summary.row({pt.tau, pt.chi2_series.chi2, static_cast<long long>(pt.chi2_series.dof),
                         pt.chi2_series.p_value, pt.theta2.mean, pt.theta2.stderr_,
                         pt.theta2_series, pt.min_purity});
        }
    }
    detail::write_meta(spec, opt, "sphere_diffusion", timer.seconds(), n_traj);
    return result;
}

// ---------------------------------------------------------------------------
// Custom runs: dump trajectory 0 as CSV (t, x, y, z, w_x, w_y, w_z)
// ---------------------------------------------------------------------------

inline void run_custom_dump(const ExperimentSpec& spec, const RunOptions& opt) {
    const detail::WallTimer timer;
    const auto [traj, record] = simulate_trajectory(spec.config, 0);
    if (opt.write_files) {
        CsvWriter csv(spec.output_prefix + "trajectory.csv");
        csv.row({std::string("t"), std::string("x"), std::string("y"), std::string("z"),
                 std::string("w_x"), std::string("w_y"), std::string("w_z")});
        csv.row({0.0, traj.states[0].bloch.x, traj.states[0].bloch.y, traj.states[0].bloch.z, 0.0,
                 0.0, 0.0});
        for (std::size_t m = 0; m < record.steps(); ++m) {
            const Vec3& r = traj.states[m + 1].bloch;
            const Vec3& w = record.increments[m];
            csv.row({traj.time(m + 1), r.x, r.y, r.z, w.x, w.y, w.z});
        }
    }
    detail::write_meta(spec, opt, "custom", timer.seconds(), 1);
}

/// Dispatch an experiment spec to its runner.
inline void run_experiment(const ExperimentSpec& spec, const RunOptions& opt) {
    switch (spec.kind) {
        case ExperimentKind::fig2_purity: run_purity_evolution(spec, opt); break;
        case ExperimentKind::fig3_window_fidelity: run_window_fidelity(spec, opt); break;
        case ExperimentKind::fig4_discrete_algorithms: run_discrete_algorithms(spec, opt); break;
        case ExperimentKind::correlator_check: run_correlator_check(spec, opt); break;
        case ExperimentKind::sphere_diffusion_check: run_sphere_diffusion_check(spec, opt); break;
        case ExperimentKind::custom: run_custom_dump(spec, opt); break;
    }
}

}  // namespace qmon

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

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qmon/experiment.hpp"

using namespace qmon;
using Catch::Approx;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentSpec small_window_spec(const std::string& prefix) {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::fig3_window_fidelity;
    spec.eta_list = {1.0, 0.5};
    spec.tau_list = {0.3, 1.0};
    spec.config.params = identical_detectors_from_eta(1.0);
    spec.config.total_time = 60.0;
    spec.config.dt = 1e-3;
    spec.config.seed = 4242;
    spec.config.scheme = Scheme::stratonovich_heun;
    spec.config.ensemble_size = 8;
    spec.output_prefix = prefix;
    return spec;
}

}  // namespace

TEST_CASE("experiment spec JSON") {
    SECTION("defaults fill the sweep lists per kind") {
        nlohmann::json j = {
            {"kind", "fig3_window_fidelity"},
            {"config", to_json(small_window_spec("x").config)},
            {"output_prefix", "out/"},
        };
        const ExperimentSpec spec = experiment_spec_from_json(j);
        CHECK(spec.eta_list == std::vector<double>{1.0, 0.5, 0.1});
        CHECK(spec.tau_list.size() == 24);
        CHECK(spec.tau_list.front() == Approx(0.05));
        CHECK(spec.tau_list.back() == Approx(5.0));

        j["kind"] = "fig4_discrete_algorithms";
        CHECK(experiment_spec_from_json(j).delta_t_list.size() == 16);
        j["kind"] = "correlator_check";
        CHECK(experiment_spec_from_json(j).eta_list == std::vector<double>{0.5, 1.0});
        j["kind"] = "sphere_diffusion_check";
        CHECK(experiment_spec_from_json(j).tau_list ==
              std::vector<double>{0.05, 0.25, 1.0, 5.0});
    }
    SECTION("unknown keys and kinds are rejected") {
        nlohmann::json j = {
            {"kind", "fig2_purity"},
            {"config", to_json(small_window_spec("x").config)},
            {"output_prefix", "out/"},
        };
        CHECK_NOTHROW(experiment_spec_from_json(j));
        nlohmann::json bad = j;
        bad["etas"] = {1.0};
        CHECK_THROWS_AS(experiment_spec_from_json(bad), config_error);
        bad = j;
        bad["kind"] = "fig5_everything";
        CHECK_THROWS_AS(experiment_spec_from_json(bad), config_error);
    }
    SECTION("sphere check demands ideal detectors") {
        nlohmann::json j = {
            {"kind", "sphere_diffusion_check"},
            {"eta_list", {0.5}},
            {"config", to_json(small_window_spec("x").config)},
            {"output_prefix", "out/"},
        };
        CHECK_THROWS_AS(experiment_spec_from_json(j), config_error);
    }
    SECTION("eta values must be efficiencies") {
        nlohmann::json j = {
            {"kind", "fig2_purity"},
            {"eta_list", {1.5}},
            {"config", to_json(small_window_spec("x").config)},
            {"output_prefix", "out/"},
        };
        CHECK_THROWS_AS(experiment_spec_from_json(j), config_error);
    }
}

TEST_CASE("runs are byte-identical for any worker count") {
    namespace fs = std::filesystem;
    fs::remove_all("harness_out");

    SECTION("window fidelity sweep") {
        RunOptions opt;
        opt.workers = 1;
        run_window_fidelity(small_window_spec("harness_out/w1_"), opt);
        opt.workers = 3;
        run_window_fidelity(small_window_spec("harness_out/w3_"), opt);
        CHECK(slurp("harness_out/w1_window_fidelity.csv") ==
              slurp("harness_out/w3_window_fidelity.csv"));
        // and a repeat run with the same seed reproduces the bytes
        opt.workers = 2;
        run_window_fidelity(small_window_spec("harness_out/w2_"), opt);
        CHECK(slurp("harness_out/w2_window_fidelity.csv") ==
              slurp("harness_out/w1_window_fidelity.csv"));
    }
    SECTION("purity evolution") {
        ExperimentSpec spec;
        spec.kind = ExperimentKind::fig2_purity;
        spec.eta_list = {0.5};
        spec.config.total_time = 2.0;
        spec.config.dt = 1e-3;
        spec.config.seed = 99;
        spec.config.ensemble_size = 64;
        RunOptions opt;
        spec.output_prefix = "harness_out/p1_";
        opt.workers = 1;
        run_purity_evolution(spec, opt);
        spec.output_prefix = "harness_out/p4_";
        opt.workers = 4;
        run_purity_evolution(spec, opt);
        CHECK(slurp("harness_out/p1_purity_evolution.csv") ==
              slurp("harness_out/p4_purity_evolution.csv"));
    }
}

TEST_CASE("purity evolution run shape") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::fig2_purity;
    spec.eta_list = {1.0, 0.5};
    spec.config.total_time = 3.0;
    spec.config.dt = 1e-3;
    spec.config.seed = 5;
    spec.config.scheme = Scheme::stratonovich_heun;
    spec.config.ensemble_size = 200;
    spec.output_prefix = "harness_out/shape_";
    RunOptions opt;
    const auto res = run_purity_evolution(spec, opt);

    REQUIRE(res.times.size() == 31);
    REQUIRE(res.points.size() == 2 * res.times.size());
    for (const auto& pt : res.points) {
        CHECK(pt.p_mc.mean >= 0.0);
        CHECK(pt.p_mc.mean <= 1.0);
        CHECK(pt.p_fp >= -1e-9);
        CHECK(pt.p_fp <= 1.0 + 1e-9);
        CHECK(std::isfinite(pt.p_naive));
        if (pt.t > 0.0) CHECK(pt.p_mc.stderr_ > 0.0);
    }
    // every trajectory contributes one final-purity sample per eta
    REQUIRE(res.final_purities.size() == 2);
    CHECK(res.final_purities[0].size() == 200);
    // the eta = 1 ensemble is nearly pure by t = 3
    CHECK(res.points[res.times.size() - 1].p_mc.mean > 0.95);
    // files written
    CHECK(std::filesystem::exists("harness_out/shape_purity_evolution.csv"));
    CHECK(std::filesystem::exists("harness_out/shape_purity_evolution_meta.json"));
    const std::string head = slurp("harness_out/shape_purity_evolution.csv").substr(0, 70);
    CHECK(head.rfind("eta,t,p_fp,p_mc,p_mc_stderr,sqrtp_fp,sqrtp_mc,sqrtp_mc_stderr", 0) == 0);
}

TEST_CASE("correlator decay constant") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::correlator_check;
    spec.eta_list = {1.0};
    spec.delta_t_list = {0.0, 0.2, 0.5, 1.0, 2.0};
    spec.config.total_time = 250.0;
    spec.config.dt = 1e-3;
    spec.config.seed = 8080;
    spec.config.scheme = Scheme::stratonovich_heun;
    spec.config.ensemble_size = 64;
    spec.output_prefix = "harness_out/corr_";
    RunOptions opt;
    const auto res = run_correlator_check(spec, opt);
    REQUIRE(res.fitted_time_constants.size() == 1);
    // exponential-fit time constant is eta tau_meas = 1 within 5%
    CHECK(res.fitted_time_constants[0] == Approx(1.0).epsilon(0.05));
    // the equal-time value contains the back-action kick: delta_u / 2, up to
    // an O(Gamma dt) discretization allowance
    REQUIRE(res.points.front().delta_t == 0.0);
    CHECK(std::abs(res.points.front().same_axis.mean - 1.0) <
          3.0 * res.points.front().same_axis.stderr_ + 0.01);
    for (const auto& pt : res.points) {
        CHECK(std::abs(pt.cross_x.mean) < 4.0 * pt.cross_x.stderr_ + 1e-3);
        CHECK(std::abs(pt.cross_y.mean) < 4.0 * pt.cross_y.stderr_ + 1e-3);
    }
}

TEST_CASE("window sweep diagnostics at low efficiency") {
    // near the optimal window, fidelity factorizes into <r><cos phi>
    ExperimentSpec spec;
    spec.kind = ExperimentKind::fig3_window_fidelity;
    spec.eta_list = {0.1};
    spec.tau_list = {0.04, 0.06, 0.09, 0.13, 0.2};
    spec.config.total_time = 150.0;
    spec.config.dt = 1e-3;
    spec.config.seed = 66;
    spec.config.scheme = Scheme::stratonovich_heun;
    spec.config.ensemble_size = 48;
    spec.output_prefix = "harness_out/loweta_";
    RunOptions opt;
    const auto res = run_window_fidelity(spec, opt);

    const WindowFidelityPoint* best = nullptr;
    for (const auto& pt : res.points) {
        if (pt.kind != WindowSpec::Kind::exponential) continue;
        if (!best || pt.F.mean > best->F.mean) best = &pt;
    }
    REQUIRE(best != nullptr);
    CHECK(std::abs(best->F.mean - best->uncorrelated_product) < 3.0 * best->F.stderr_ + 2e-3);
    // fidelity never exceeds the stationary Bloch length bound
    for (const auto& pt : res.points) {
        CHECK(pt.F.mean <= pt.r_bound + 2.0 * pt.F.stderr_);
    }
}

TEST_CASE("custom dump") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::custom;
    spec.config.params = identical_detectors_from_eta(0.5);
    spec.config.initial_state = QubitState{{0.0, 0.0, 1.0}};
    spec.config.total_time = 0.5;
    spec.config.dt = 1e-3;
    spec.config.seed = 3;
    spec.output_prefix = "harness_out/dump_";
    RunOptions opt;
    run_experiment(spec, opt);
    const std::string csv = slurp("harness_out/dump_trajectory.csv");
    CHECK(csv.rfind("t,x,y,z,w_x,w_y,w_z", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 1 + 500);  // header + t=0 + steps
}

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

// Command-line harness: run or validate JSON experiment specs.
//
//   qmon simulate <spec.json> [--quick] [--workers N] [--out PREFIX] [--seed S]
//   qmon validate <spec.json>
//
// On failure a machine-readable JSON error object is printed to stdout and
// the exit code is nonzero.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qmon/experiment.hpp"

namespace {

qmon::ExperimentSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw qmon::config_error("cannot open spec file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw qmon::config_error(std::string("spec is not valid JSON: ") + e.what());
    }
    return qmon::experiment_spec_from_json(j);
}

int fail(const std::string& category, const std::string& message) {
    const nlohmann::json err = {{"error", category}, {"message", message}};
    std::cout << err.dump() << std::endl;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo harness for continuously monitored qubit experiments"};
    app.require_subcommand(1);

    std::string spec_path;
    unsigned workers = 1;
    bool quick = false;
    std::string out_prefix;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto* simulate = app.add_subcommand("simulate", "run an experiment spec");
    simulate->add_option("spec", spec_path, "experiment spec (JSON)")->required();
    simulate->add_flag("--quick", quick, "divide the trajectory budget by 20");
    simulate->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    simulate->add_option("--out", out_prefix, "override the output path prefix");
    simulate->add_option("--seed", seed, "override the master seed")
        ->each([&](const std::string&) { seed_set = true; });

    auto* validate = app.add_subcommand("validate", "check a spec without running it");
    validate->add_option("spec", spec_path, "experiment spec (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        qmon::ExperimentSpec spec = load_spec(spec_path);
        if (validate->parsed()) {
            std::cout << nlohmann::json({{"valid", true},
                                         {"kind", qmon::to_string(spec.kind)},
                                         {"trajectories", spec.config.ensemble_size}})
                             .dump()
                      << std::endl;
            return 0;
        }
        if (seed_set) spec.config.seed = seed;
        if (!out_prefix.empty()) spec.output_prefix = out_prefix;
        qmon::RunOptions opt;
        opt.workers = workers;
        opt.quick = quick;
        qmon::run_experiment(spec, opt);
        return 0;
    } catch (const qmon::config_error& e) {
        return fail("config_error", e.what());
    } catch (const qmon::physicality_error& e) {
        return fail("physicality_error", e.what());
    } catch (const std::exception& e) {
        return fail("runtime_error", e.what());
    }
}

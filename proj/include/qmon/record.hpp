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

#include <cmath>
#include <cstdint>
#include <vector>

#include "qmon/errors.hpp"
#include "qmon/vec3.hpp"

namespace qmon {

/// Detector record of one trajectory: per fine step the integrated output
/// increments w_k = int u_k dt, one Vec3 per step. increments[m] covers
/// (m dt, (m+1) dt].
struct MeasurementRecord {
    double dt = 0.0;
    std::vector<Vec3> increments;

    std::size_t steps() const { return increments.size(); }
    double duration() const { return dt * static_cast<double>(increments.size()); }
};

/// Record coarse-grained over windows of width bin_dt. Bins store the exact
/// sums of the fine increments they cover, so u_bar(n) * bin_dt recovers the
/// underlying integral without rounding slack.
struct BinnedRecord {
    double bin_dt = 0.0;
    std::size_t steps_per_bin = 0;
    std::vector<Vec3> sums;

    std::size_t bins() const { return sums.size(); }
    /// Time-averaged output over bin n: u_bar_k = (sum of increments) / bin_dt.
    Vec3 average(std::size_t n) const { return sums[n] * (1.0 / bin_dt); }
    /// End time of bin n on the fine grid.
    double end_time(std::size_t n) const { return bin_dt * static_cast<double>(n + 1); }
};

/// Number of fine steps per bin; throws when bin_dt is not a multiple of dt.
inline std::size_t steps_per_bin(double dt, double bin_dt) {
    const double ratio = bin_dt / dt;
    const auto n = static_cast<std::int64_t>(std::llround(ratio));
    if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio) {
        throw config_error("bin width must be a positive integer multiple of the fine step");
    }
    return static_cast<std::size_t>(n);
}

/// Coarse-grain a record into bins of width bin_dt (an exact multiple of the
/// fine step). A trailing partial bin is dropped.
inline BinnedRecord bin_record(const MeasurementRecord& record, double bin_dt) {
    BinnedRecord out;
    out.bin_dt = bin_dt;
    out.steps_per_bin = steps_per_bin(record.dt, bin_dt);
    const std::size_t nbins = record.steps() / out.steps_per_bin;
    out.sums.reserve(nbins);
    std::size_t m = 0;
    for (std::size_t n = 0; n < nbins; ++n) {
        Vec3 acc{};
        for (std::size_t j = 0; j < out.steps_per_bin; ++j) acc += record.increments[m++];
        out.sums.push_back(acc);
    }
    return out;
}

}  // namespace qmon

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
#include <stdexcept>

#include "qmon/detector.hpp"
#include "qmon/philox.hpp"
#include "qmon/vec3.hpp"

namespace qmon {

/// Integrated detector noise over one fine step: dw_k = int xi_k dt, a
/// zero-mean Gaussian with variance s_k dt / 2, independent across axes and
/// across steps.
struct NoiseIncrement {
    Vec3 dw;
};

/// Random-access view of the noise sequence of one trajectory. Increments are
/// a pure function of (stream key, trajectory index, step index).
struct NoiseSequence {
    RngStream stream;
    std::uint64_t trajectory = 0;

    NoiseIncrement at(const DetectorParams& params, double dt, std::uint64_t step) const {
        if (!(dt > 0.0)) throw std::domain_error("noise step size must be positive");
        const auto n = stream.normals(trajectory, step);
        Vec3 dw;
        for (int k = 0; k < 3; ++k) {
            // exact zero for a detector with vanishing spectral density
            dw[k] = params.s[k] == 0.0 ? 0.0 : std::sqrt(0.5 * params.s[k] * dt) * n[k];
        }
        return {dw};
    }
};

/// Stateful cursor over a NoiseSequence; each call consumes one step.
class NoiseGenerator {
  public:
    explicit NoiseGenerator(NoiseSequence seq) : seq_(seq) {}
    NoiseGenerator(RngStream stream, std::uint64_t trajectory) : seq_{stream, trajectory} {}

    NoiseIncrement sample(const DetectorParams& params, double dt) {
        return seq_.at(params, dt, next_step_++);
    }

    std::uint64_t steps_consumed() const { return next_step_; }

  private:
    NoiseSequence seq_;
    std::uint64_t next_step_ = 0;
};

/// Uniformly distributed direction on the unit sphere (used for random
/// initial states).
inline Vec3 random_unit_vector(const RngStream& stream, std::uint64_t traj,
                               std::uint64_t slot = 0) {
    const auto n = stream.normals(traj, /*step=*/0, slot);
    const Vec3 v{n[0], n[1], n[2]};
    return normalized(v);
}

}  // namespace qmon

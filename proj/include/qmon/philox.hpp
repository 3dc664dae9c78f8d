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

// Counter-based random number generation (Philox4x64-10).
// Salmon et al. SC 2011. Parallel random numbers: as easy as 1, 2, 3.
//
// Every draw is a pure function of (key, counter), so ensembles can be
// evaluated by any number of workers in any order and still produce
// bit-identical streams. The counter layout used throughout this project is
//   counter = { step index, trajectory index, draw slot, 0 }
//   key     = { master seed, (purpose tag << 56) | sweep-point index }

#include <array>
#include <cmath>
#include <cstdint>

namespace qmon {

namespace detail {

inline constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ull;
inline constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ull;
inline constexpr std::uint64_t kPhiloxW0 = 0x9E3779B97F4A7C15ull;  // golden ratio
inline constexpr std::uint64_t kPhiloxW1 = 0xBB67AE8584CAA73Bull;  // sqrt(3) - 1

inline std::uint64_t mulhilo64(std::uint64_t a, std::uint64_t b, std::uint64_t* hi) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    *hi = static_cast<std::uint64_t>(p >> 64);
    return static_cast<std::uint64_t>(p);
}

}  // namespace detail

using Counter4 = std::array<std::uint64_t, 4>;
using Key2 = std::array<std::uint64_t, 2>;

/// One 256-bit Philox4x64 block (10 rounds).
inline Counter4 philox4x64(Counter4 ctr, Key2 key) {
    using namespace detail;
    for (int round = 0;; ++round) {
        std::uint64_t hi0, hi1;
        const std::uint64_t lo0 = mulhilo64(kPhiloxM0, ctr[0], &hi0);
        const std::uint64_t lo1 = mulhilo64(kPhiloxM1, ctr[2], &hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        if (round == 9) break;
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

/// Map a 64-bit word to a uniform double in (0, 1]; the open lower end keeps
/// log() in the Gaussian transform finite.
inline double uniform_open(std::uint64_t w) {
    return (static_cast<double>(w >> 11) + 1.0) * 0x1.0p-53;
}

/// Four standard normal deviates obtained from one Philox block via the
/// Box-Muller transform.
inline std::array<double, 4> normal_quad(const Counter4& ctr, const Key2& key) {
    const Counter4 w = philox4x64(ctr, key);
    const double u0 = uniform_open(w[0]);
    const double u1 = uniform_open(w[1]);
    const double u2 = uniform_open(w[2]);
    const double u3 = uniform_open(w[3]);
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double m0 = std::sqrt(-2.0 * std::log(u0));
    const double m1 = std::sqrt(-2.0 * std::log(u2));
    return {m0 * std::cos(two_pi * u1), m0 * std::sin(two_pi * u1), m1 * std::cos(two_pi * u3),
            m1 * std::sin(two_pi * u3)};
}

/// Purpose tags keep independent uses of the generator on disjoint streams.
enum class RngPurpose : std::uint64_t {
    noise = 1,           // detector noise increments
    initial_state = 2,   // random initial true states
    estimator_init = 3,  // random wrong initial filter states
    radial_noise = 4,    // scalar noise for the radial validation integrator
    misc = 5,
};

/// A keyed view of the generator: one (master seed, purpose, sweep point)
/// triple. Draws are addressed by (trajectory, step, slot).
struct RngStream {
    std::uint64_t master_seed = 0;
    RngPurpose purpose = RngPurpose::noise;
    std::uint64_t sweep_index = 0;

    Key2 key() const {
        return {master_seed,
                (static_cast<std::uint64_t>(purpose) << 56) | (sweep_index & 0x00FFFFFFFFFFFFFFull)};
    }

    std::array<double, 4> normals(std::uint64_t traj, std::uint64_t step,
                                  std::uint64_t slot = 0) const {
        return normal_quad({step, traj, slot, 0}, key());
    }

    std::array<double, 4> uniforms(std::uint64_t traj, std::uint64_t step,
                                   std::uint64_t slot = 0) const {
        const Counter4 w = philox4x64({step, traj, slot, 0}, key());
        return {uniform_open(w[0]), uniform_open(w[1]), uniform_open(w[2]), uniform_open(w[3])};
    }
};

}  // namespace qmon

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

#include <cmath>
#include <vector>

#include "qmon/noise.hpp"
#include "qmon/philox.hpp"
#include "qmon/stats.hpp"

using namespace qmon;
using Catch::Approx;

TEST_CASE("philox blocks are deterministic and key-sensitive") {
    const Counter4 c{12, 34, 56, 78};
    const Key2 k{0xdeadbeef, 0x12345678};
    CHECK(philox4x64(c, k) == philox4x64(c, k));
    CHECK(philox4x64(c, k) != philox4x64({12, 34, 56, 79}, k));
    CHECK(philox4x64(c, k) != philox4x64(c, {0xdeadbeef, 0x12345679}));
    // single-bit counter change flips roughly half of the output bits
    const Counter4 a = philox4x64(c, k);
    const Counter4 b = philox4x64({13, 34, 56, 78}, k);
    int flipped = 0;
    for (int w = 0; w < 4; ++w) flipped += __builtin_popcountll(a[w] ^ b[w]);
    CHECK(flipped > 64);
    CHECK(flipped < 192);
}

TEST_CASE("uniform words fill (0, 1] evenly") {
    const RngStream stream{2024, RngPurpose::misc, 0};
    constexpr int kBins = 64;
    std::vector<std::size_t> counts(kBins, 0);
    constexpr std::size_t kDraws = 250000;
    for (std::size_t i = 0; i < kDraws; ++i) {
        const auto u = stream.uniforms(0, i);
        for (double x : u) {
            REQUIRE(x > 0.0);
            REQUIRE(x <= 1.0);
            ++counts[std::min(kBins - 1, static_cast<int>(x * kBins))];
        }
    }
    const std::vector<double> probs(kBins, 1.0 / kBins);
    const Chi2Result r = chi2_test(counts, probs);
    CHECK(r.p_value > 0.01);
}

TEST_CASE("normal deviates have the right moments") {
    const RngStream stream{7, RngPurpose::misc, 0};
    constexpr std::size_t kDraws = 250000;  // 1e6 normals
    double sum = 0.0, sum2 = 0.0, sum3 = 0.0, sum4 = 0.0;
    for (std::size_t i = 0; i < kDraws; ++i) {
        const auto n = stream.normals(1, i);
        for (double x : n) {
            sum += x;
            sum2 += x * x;
            sum3 += x * x * x;
            sum4 += x * x * x * x;
        }
    }
    const double n = 4.0 * kDraws;
    CHECK(sum / n == Approx(0.0).margin(4.0 / std::sqrt(n)));
    CHECK(sum2 / n == Approx(1.0).margin(6.0 / std::sqrt(n)));
    CHECK(sum3 / n == Approx(0.0).margin(16.0 / std::sqrt(n)));
    CHECK(sum4 / n == Approx(3.0).margin(40.0 / std::sqrt(n)));
}

TEST_CASE("noise increments variance s dt / 2") {
    DetectorParams p = identical_detectors_from_eta(1.0);  // s = 2
    const double dt = 1e-3;
    const NoiseSequence seq{RngStream{12, RngPurpose::noise, 0}, 0};
    constexpr std::size_t kDraws = 1000000;
    std::vector<double> dx(kDraws), dy(kDraws);
    for (std::size_t m = 0; m < kDraws; ++m) {
        const NoiseIncrement inc = seq.at(p, dt, m);
        dx[m] = inc.dw.x;
        dy[m] = inc.dw.y;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t m = 0; m < kDraws; ++m) {
        mx += dx[m];
        my += dy[m];
    }
    mx /= kDraws;
    my /= kDraws;
    double var = 0.0, cov = 0.0;
    for (std::size_t m = 0; m < kDraws; ++m) {
        var += (dx[m] - mx) * (dx[m] - mx);
        cov += (dx[m] - mx) * (dy[m] - my);
    }
    var /= kDraws - 1;
    cov /= kDraws - 1;
    CHECK(var == Approx(1e-3).margin(3e-6));
    CHECK(cov == Approx(0.0).margin(3e-6));
}

TEST_CASE("zero spectral density gives exactly zero increments") {
    DetectorParams p;
    p.delta_u = {0.0, 2.0, 2.0};
    p.s = {0.0, 2.0, 2.0};
    const NoiseSequence seq{RngStream{13, RngPurpose::noise, 0}, 0};
    for (int m = 0; m < 100; ++m) {
        const NoiseIncrement inc = seq.at(p, 1e-3, m);
        CHECK(inc.dw.x == 0.0);
        CHECK(inc.dw.y != 0.0);
    }
}

TEST_CASE("noise generator cursor consumes steps") {
    const DetectorParams p = identical_detectors_from_eta(1.0);
    NoiseGenerator gen(RngStream{17, RngPurpose::noise, 0}, 5);
    const NoiseIncrement a = gen.sample(p, 1e-3);
    const NoiseIncrement b = gen.sample(p, 1e-3);
    CHECK(gen.steps_consumed() == 2);
    CHECK(a.dw != b.dw);
    // matches random access
    const NoiseSequence seq{RngStream{17, RngPurpose::noise, 0}, 5};
    CHECK(a.dw == seq.at(p, 1e-3, 0).dw);
    CHECK(b.dw == seq.at(p, 1e-3, 1).dw);
}

TEST_CASE("streams with different purposes or trajectories are distinct") {
    const RngStream noise{42, RngPurpose::noise, 0};
    const RngStream init{42, RngPurpose::initial_state, 0};
    CHECK(noise.normals(0, 0) != init.normals(0, 0));
    CHECK(noise.normals(0, 0) != noise.normals(1, 0));
    CHECK(noise.normals(0, 0) != noise.normals(0, 1));
    const RngStream sweep1{42, RngPurpose::noise, 1};
    CHECK(noise.normals(0, 0) != sweep1.normals(0, 0));
}

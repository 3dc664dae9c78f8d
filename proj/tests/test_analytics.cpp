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

#include "qmon/correlators.hpp"
#include "qmon/fokker_planck.hpp"
#include "qmon/purity_law.hpp"
#include "qmon/sphere_diffusion.hpp"
#include "qmon/stats.hpp"

using namespace qmon;
using Catch::Approx;

TEST_CASE("stationary purity distribution") {
    SECTION("normalization, checked against an independent trapezoid sum") {
        for (double eta : {0.1, 0.5, 0.9}) {
            StationaryPurityDistribution d(eta);
            const std::size_t n = 200000;
            double mass = 0.0;
            const double hi = 0.99999;
            for (std::size_t j = 0; j <= n; ++j) {
                const double p = hi * static_cast<double>(j) / n;
                const double w = (j == 0 || j == n) ? 0.5 : 1.0;
                mass += w * d.pdf(p);
            }
            mass *= hi / n;
            CHECK(mass == Approx(1.0).margin(1e-6));
        }
    }
    SECTION("stationary Bloch length") {
        CHECK(StationaryPurityDistribution(0.5).mean_bloch_length() ==
              Approx(0.732).margin(0.002));
        CHECK(StationaryPurityDistribution(0.1).mean_bloch_length() ==
              Approx(0.348).margin(0.002));
    }
    SECTION("ideal detectors have no density branch") {
        CHECK_THROWS_AS(StationaryPurityDistribution(1.0), std::domain_error);
    }
    SECTION("interval probabilities add up") {
        StationaryPurityDistribution d(0.5);
        const double a = d.prob_interval(0.0, 0.3);
        const double b = d.prob_interval(0.3, 0.85);
        const double c = d.prob_interval(0.85, 1.0);
        CHECK(a + b + c == Approx(1.0).margin(1e-8));
    }
}

TEST_CASE("purification rate and its stationary root") {
    SECTION("ideal detectors") {
        CHECK(purity_drift(1.0, 1.0) == 0.0);
        CHECK(purity_drift_stationary_root(1.0) == Approx(1.0));
        // 2 G0 (1 - P)(3 - P) at P = 0 with G0 = 1/2
        CHECK(purity_drift(0.0, 1.0) == Approx(3.0));
        for (double p : {0.0, 0.25, 0.5, 0.9}) {
            CHECK(purity_drift(p, 1.0) == Approx((1.0 - p) * (3.0 - p)).epsilon(1e-14));
        }
    }
    SECTION("closed-form root at eta = 0.5") {
        CHECK(purity_drift_stationary_root(0.5) == Approx(3.0 - std::sqrt(6.0)).epsilon(1e-14));
        CHECK(purity_drift(purity_drift_stationary_root(0.5), 0.5) == Approx(0.0).margin(1e-13));
    }
}

TEST_CASE("Fokker-Planck solver") {
    SECTION("conserves probability at every output time") {
        const auto grids = fp_solve(0.5, 0.0, {0.1, 0.5, 1.0, 5.0, 20.0});
        for (const auto& g : grids) {
            CHECK(g.mass() == Approx(1.0).margin(1e-6));
            for (double p : g.density) CHECK(p >= 0.0);
        }
    }
    SECTION("relaxes to the analytic stationary profile") {
        for (double eta : {0.1, 0.3, 0.5, 0.9}) {
            // the eta = 0.9 profile peaks sharply near P = 1 and needs the
            // finer grid to hit the absolute 1e-3 band
            const std::size_t nodes = eta > 0.8 ? 4001 : 2001;
            const auto grids = fp_solve(eta, 0.0, {20.0}, nodes);
            const PurityGrid& g = grids[0];
            StationaryPurityDistribution d(eta);
            double linf = 0.0;
            for (std::size_t j = 0; j < g.nodes(); ++j) {
                const double p = g.node(j);
                if (p < 0.01 || p > 0.99) continue;
                linf = std::max(linf, std::abs(g.density[j] - d.pdf(p)));
            }
            CHECK(linf <= 1e-3);
        }
    }
    SECTION("stationary mean exceeds the rate-equation root") {
        for (double eta : {0.3, 0.5}) {
            const auto grids = fp_solve(eta, 0.0, {20.0});
            CHECK(grids[0].mean_purity() > purity_drift_stationary_root(eta));
        }
    }
    SECTION("grid refinement leaves the mean unchanged at the 1e-4 level") {
        const double coarse = fp_solve(0.5, 0.0, {2.0}, 1001)[0].mean_purity();
        const double medium = fp_solve(0.5, 0.0, {2.0}, 2001)[0].mean_purity();
        const double fine = fp_solve(0.5, 0.0, {2.0}, 4001)[0].mean_purity();
        CHECK(std::abs(medium - coarse) < 1e-4);
        CHECK(std::abs(fine - medium) < 1e-4);
    }
    SECTION("delta initial condition carries unit mass from the start") {
        FokkerPlanckSolver solver(0.5);
        solver.set_delta_initial(0.37);
        CHECK(solver.grid().mass() == Approx(1.0).margin(1e-12));
        solver.advance_to(0.01);
        CHECK(solver.grid().mass() == Approx(1.0).margin(1e-9));
    }
    SECTION("input validation") {
        CHECK_THROWS_AS(fp_solve(1.5, 0.0, {1.0}), config_error);
        CHECK_THROWS_AS(fp_solve(0.5, 1.0, {1.0}), config_error);
        CHECK_THROWS_AS(fp_solve(0.5, 0.0, {1.0, 0.5}), config_error);
    }
}

TEST_CASE("naive purification-rate ODE") {
    SECTION("ideal detectors purify toward 1") {
        const auto p = naive_purity_ode(1.0, 0.0, {10.0});
        CHECK(p[0] == Approx(1.0).margin(1e-4));
    }
    SECTION("pure start is a fixed point") {
        const auto p = naive_purity_ode(1.0, 1.0, {0.5, 5.0});
        CHECK(p[0] == Approx(1.0).epsilon(1e-12));
        CHECK(p[1] == Approx(1.0).epsilon(1e-12));
    }
    SECTION("eta = 0.5 settles at the closed-form root") {
        const auto p = naive_purity_ode(0.5, 0.0, {30.0});
        CHECK(p[0] == Approx(3.0 - std::sqrt(6.0)).margin(1e-6));
    }
}

TEST_CASE("sphere diffusion kernel") {
    SECTION("normalizes over the sphere") {
        for (double tau : {0.05, 0.25, 1.0, 5.0}) {
            SphereDiffusionKernel k(tau);
            CHECK(k.prob_cos_interval(-1.0, 1.0) == Approx(1.0).margin(1e-8));
        }
    }
    SECTION("forgets the initial state at long times") {
        SphereDiffusionKernel k(50.0);
        const double iso = 1.0 / (4.0 * M_PI);
        for (double theta : {0.0, 0.7, 1.6, 3.0}) {
            CHECK(k.pdf(theta) == Approx(iso).epsilon(1e-10));
        }
    }
    SECTION("small-variance moment approaches the accumulated variance") {
        SphereDiffusionKernel k(0.02);  // V = 0.04
        CHECK(k.mean_theta2() == Approx(0.04).epsilon(0.02));
    }
    SECTION("semigroup property of the coefficients") {
        SphereDiffusionKernel a(0.3), b(0.5), c(0.8);
        for (std::size_t n = 0; n < std::min(c.terms(), std::min(a.terms(), b.terms())); ++n) {
            CHECK(a.coefficient(n) * b.coefficient(n) == Approx(c.coefficient(n)).margin(1e-6));
        }
    }
    SECTION("zero elapsed time is the delta branch") {
        CHECK_THROWS_AS(SphereDiffusionKernel(0.0), std::domain_error);
    }
    SECTION("tiny variance falls back to the tangent-plane Gaussian") {
        SphereDiffusionKernel k(2e-5);  // V = 4e-5 < 1e-4
        CHECK(k.terms() == 0);
        CHECK(k.prob_cos_interval(0.9, 1.0) == Approx(1.0).margin(1e-8));
        CHECK(k.mean_theta2() == Approx(4e-5).epsilon(0.01));
    }
    SECTION("the capped series flags the uncovered variance range") {
        // V in [1e-4, ~7e-3) needs more terms than the cap allows
        CHECK_THROWS_AS(SphereDiffusionKernel(5e-4), std::domain_error);  // V = 1e-3
    }
}

TEST_CASE("signal-qubit correlator formulas") {
    const DetectorParams ideal = identical_detectors_from_eta(1.0);
    CHECK(same_axis_correlator(0.0, ideal) == Approx(1.0));
    CHECK(same_axis_correlator(1.0, ideal) == Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(cross_axis_correlator(0.7, ideal) == 0.0);
    const DetectorParams half = identical_detectors_from_eta(0.5);
    CHECK(same_axis_correlator(1.0, half) == Approx(std::exp(-2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(same_axis_correlator(-0.1, ideal), std::domain_error);
}

TEST_CASE("statistics utilities") {
    SECTION("chi-square tail against the one-degree closed form") {
        for (double x : {0.5, 1.0, 4.0, 9.0}) {
            CHECK(chi2_pvalue(x, 1) == Approx(std::erfc(std::sqrt(0.5 * x))).epsilon(1e-10));
        }
    }
    SECTION("Kolmogorov survival values") {
        CHECK(kolmogorov_q(0.5) == Approx(0.9639).margin(5e-4));
        CHECK(kolmogorov_q(1.36) == Approx(0.049).margin(2e-3));
    }
    SECTION("linear fit recovers an exact line") {
        const std::vector<double> x{0.0, 1.0, 2.0, 3.0};
        const std::vector<double> y{1.0, 0.6, 0.2, -0.2};
        const LinearFit fit = linear_fit(x, y);
        CHECK(fit.slope == Approx(-0.4).epsilon(1e-12));
        CHECK(fit.intercept == Approx(1.0).epsilon(1e-12));
        CHECK(fit.slope_stderr == Approx(0.0).margin(1e-12));
    }
    SECTION("pairwise sum is exact on integers and order-fixed") {
        std::vector<double> v(1000);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i % 7) - 3.0;
        double plain = 0.0;
        for (double x : v) plain += x;
        CHECK(pairwise_sum(v) == plain);
    }
    SECTION("parabola vertex") {
        // y = 2 - (x - 1.5)^2
        auto f = [](double x) { return 2.0 - (x - 1.5) * (x - 1.5); };
        CHECK(parabola_vertex(1.0, f(1.0), 1.4, f(1.4), 2.0, f(2.0)) == Approx(1.5).margin(1e-12));
    }
}

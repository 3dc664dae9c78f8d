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

// Finite-volume solver for the purity Fokker-Planck equation
//   dp/dt = -d/dP [A(P) p] + 1/2 d^2/dP^2 [B(P) p],
//   A(P) = 2 G0 [2 (1 - P/eta) + (1 - P)^2],   B(P) = 8 G0 P (1 - P)^2,
// on [0, 1] with zero-flux boundaries (B vanishes at both ends, so no-flux is
// the natural closure and total probability is conserved exactly).
//
// The flux is written in drift-diffusion form F = (A - B'/2) p - (B/2) p' and
// discretized with Chang-Cooper exponential fitting, which is positivity
// preserving and reproduces the analytic zero-flux stationary profile on the
// grid. Time stepping is backward Euler with a cached tridiagonal
// factorization (the operator is time independent); steps larger than the
// accuracy limit are sub-stepped automatically.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "qmon/errors.hpp"

namespace qmon {

/// Density values on a uniform purity grid.
struct PurityGrid {
    double time = 0.0;
    double h = 0.0;                // node spacing
    std::vector<double> density;   // p_j at P_j = j h, j = 0..J

    std::size_t nodes() const { return density.size(); }
    double node(std::size_t j) const { return h * static_cast<double>(j); }
    double cell_volume(std::size_t j) const {
        return (j == 0 || j + 1 == density.size()) ? 0.5 * h : h;
    }

    /// Trapezoidal mass integral of f(P) p(P).
    template <class F>
    double integral(const F& f) const {
        double s = 0.0;
        for (std::size_t j = 0; j < density.size(); ++j) s += cell_volume(j) * f(node(j)) * density[j];
        return s;
    }
    double mass() const {
        return integral([](double) { return 1.0; });
    }
    double mean_purity() const {
        return integral([](double P) { return P; });
    }
    double mean_bloch_length() const {
        return integral([](double P) { return std::sqrt(P); });
    }
};

class FokkerPlanckSolver {
  public:
    FokkerPlanckSolver(double eta, std::size_t nodes = 2001, double gamma0 = 0.5,
                       double max_step = 5e-4)
        : eta_(eta), gamma0_(gamma0), max_step_(max_step) {
        if (!(eta > 0.0) || eta > 1.0) throw config_error("eta must lie in (0, 1]");
        if (nodes < 11) throw config_error("purity grid needs at least 11 nodes");
        grid_.h = 1.0 / static_cast<double>(nodes - 1);
        grid_.density.assign(nodes, 0.0);
        build_operator();
    }

    /// Reset to the delta initial condition p(P, 0) = delta(P - P0),
    /// represented as a unit-mass hat on the bracketing node pair.
    void set_delta_initial(double p0) {
        if (p0 < 0.0 || p0 >= 1.0) throw config_error("initial purity must lie in [0, 1)");
        std::fill(grid_.density.begin(), grid_.density.end(), 0.0);
        const double x = p0 / grid_.h;
        const auto j = static_cast<std::size_t>(x);
        const double frac = x - static_cast<double>(j);
        grid_.density[j] = (1.0 - frac) / grid_.cell_volume(j);
        if (frac > 0.0) grid_.density[j + 1] += frac / grid_.cell_volume(j + 1);
        grid_.time = 0.0;
    }

    const PurityGrid& grid() const { return grid_; }

    /// Advance to the requested time (sub-stepping as needed).
    void advance_to(double t) {
        while (grid_.time < t - 1e-12) {
            step(std::min(max_step_, t - grid_.time));
        }
        grid_.time = t;
    }

  private:
    // flux through interface j+1/2: F = alpha_j p_j + beta_j p_{j+1}
    void build_operator() {
        const std::size_t n = grid_.density.size();
        alpha_.resize(n - 1);
        beta_.resize(n - 1);
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const double pm = grid_.h * (static_cast<double>(j) + 0.5);
            const double om = 1.0 - pm;
            const double adv = purity_advection(pm);
            const double dif = 4.0 * gamma0_ * pm * om * om;  // B/2, strictly positive here
            const double w = adv * grid_.h / dif;
            const double delta = chang_cooper_weight(w);
            alpha_[j] = adv * delta + dif / grid_.h;
            beta_[j] = adv * (1.0 - delta) - dif / grid_.h;
        }
    }

    // A - B'/2 with B' = 8 G0 (1 - P)(1 - 3P)
    double purity_advection(double P) const {
        const double om = 1.0 - P;
        return 2.0 * gamma0_ * (2.0 * (1.0 - P / eta_) + om * om) -
               4.0 * gamma0_ * om * (1.0 - 3.0 * P);
    }

    static double chang_cooper_weight(double w) {
        if (std::abs(w) < 1e-6) return 0.5 + w / 12.0;
        return 1.0 / (-std::expm1(-w)) - 1.0 / w;
    }

    void step(double dt) {
        const std::size_t n = grid_.density.size();
        if (dt != factored_dt_) factor(dt);
        // backward Euler: (V/dt + L) p_new = V/dt p_old, solved via the
        // cached Thomas factorization
        rhs_.resize(n);
        for (std::size_t j = 0; j < n; ++j) rhs_[j] = grid_.cell_volume(j) / dt * grid_.density[j];
        // forward sweep
        work_[0] = rhs_[0] * inv_diag_[0];
        for (std::size_t j = 1; j < n; ++j) {
            work_[j] = (rhs_[j] - lower_[j] * work_[j - 1]) * inv_diag_[j];
        }
        // back substitution
        grid_.density[n - 1] = work_[n - 1];
        for (std::size_t j = n - 1; j-- > 0;) {
            grid_.density[j] = work_[j] - upper_factor_[j] * grid_.density[j + 1];
        }
        grid_.time += dt;
    }

    void factor(double dt) {
        const std::size_t n = grid_.density.size();
        std::vector<double> diag(n), upper(n - 1);
        lower_.assign(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            diag[j] = grid_.cell_volume(j) / dt;
            if (j + 1 < n) diag[j] += alpha_[j];
            if (j > 0) diag[j] -= beta_[j - 1];
        }
        for (std::size_t j = 0; j + 1 < n; ++j) upper[j] = beta_[j];
        for (std::size_t j = 1; j < n; ++j) lower_[j] = -alpha_[j - 1];

        inv_diag_.resize(n);
        upper_factor_.resize(n - 1);
        double d = diag[0];
        inv_diag_[0] = 1.0 / d;
        upper_factor_[0] = upper[0] * inv_diag_[0];
        for (std::size_t j = 1; j < n; ++j) {
            d = diag[j] - lower_[j] * upper_factor_[j - 1];
            inv_diag_[j] = 1.0 / d;
            if (j + 1 < n) upper_factor_[j] = upper[j] * inv_diag_[j];
        }
        work_.resize(n);
        factored_dt_ = dt;
    }

    double eta_;
    double gamma0_;
    double max_step_;
    PurityGrid grid_;
    std::vector<double> alpha_, beta_;
    std::vector<double> lower_, inv_diag_, upper_factor_, rhs_, work_;
    double factored_dt_ = -1.0;
};

/// Evolve the delta initial condition at P0 and return the density at each
/// requested time (t_grid must be non-decreasing).
inline std::vector<PurityGrid> fp_solve(double eta, double p0, const std::vector<double>& t_grid,
                                        std::size_t nodes = 2001, double gamma0 = 0.5) {
    FokkerPlanckSolver solver(eta, nodes, gamma0);
    solver.set_delta_initial(p0);
    std::vector<PurityGrid> out;
    out.reserve(t_grid.size());
    double prev = 0.0;
    for (double t : t_grid) {
        if (t < prev) throw config_error("fp_solve: time grid must be non-decreasing");
        solver.advance_to(t);
        out.push_back(solver.grid());
        prev = t;
    }
    return out;
}

}  // namespace qmon

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

// Closed-form purity dynamics for three identical detectors.
//
// Ensemble-averaged purification rate, starting from purity P:
//   <dP>/dt = 2 G0 [ 2 (1 - P/eta) + (1 - P)^2 ].
// Its stationary root is (1 + 1/eta) - sqrt((1 + 1/eta)^2 - 3).
//
// The long-time purity distribution for eta < 1:
//   p_st(P) = N^-1 sqrt(P) (1-P)^-3 exp[ -P (1-eta) / ((1-P) eta) ],
// normalized over [0, 1). For eta -> 1 it degenerates to a delta at P = 1.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qmon/quadrature.hpp"

namespace qmon {

/// Ensemble-averaged purification rate <dP>/dt at purity P.
inline double purity_drift(double P, double eta, double gamma0 = 0.5) {
    return 2.0 * gamma0 * (2.0 * (1.0 - P / eta) + (1.0 - P) * (1.0 - P));
}

/// The zero of purity_drift inside [0, 1].
inline double purity_drift_stationary_root(double eta) {
    const double c = 1.0 + 1.0 / eta;
    return c - std::sqrt(c * c - 3.0);
}

/// Stationary purity distribution for 0 < eta < 1. The normalization is
/// computed once at construction; the integrable (1-P)^-3 endpoint is handled
/// with the substitution s = P / (1 - P) on P > 0.9, where the integrand
/// becomes sqrt(s/(1+s)) (1+s) e^{-beta s} with beta = (1-eta)/eta.
class StationaryPurityDistribution {
  public:
    explicit StationaryPurityDistribution(double eta) : eta_(eta), beta_((1.0 - eta) / eta) {
        if (!(eta > 0.0) || eta >= 1.0) {
            throw std::domain_error(
                "stationary purity density exists for 0 < eta < 1 (eta = 1 is a delta at P = 1)");
        }
        norm_ = raw_expectation([](double) { return 1.0; });
    }

    double eta() const { return eta_; }

    /// Normalized density; zero outside [0, 1).
    double pdf(double P) const {
        if (P < 0.0 || P >= 1.0) return 0.0;
        return unnormalized(P) / norm_;
    }

    /// E[f(P)] under the stationary law.
    template <class F>
    double expectation(const F& f) const {
        return raw_expectation(f) / norm_;
    }

    double mean_purity() const {
        return expectation([](double P) { return P; });
    }
    /// Stationary Bloch length <r> = <sqrt(P)>.
    double mean_bloch_length() const {
        return expectation([](double P) { return std::sqrt(P); });
    }
    /// Probability of P in [a, b].
    double prob_interval(double a, double b) const {
        return raw_expectation([](double) { return 1.0; }, a, b) / norm_;
    }

  private:
    double unnormalized(double P) const {
        const double om = 1.0 - P;
        return std::sqrt(P) / (om * om * om) * std::exp(-beta_ * P / om);
    }

    // integrand after s = P/(1-P): f(P(s)) sqrt(s/(1+s)) (1+s) e^{-beta s}
    template <class F>
    double raw_expectation(const F& f, double a = 0.0, double b = 1.0) const {
        constexpr double kSplit = 0.9;
        double total = 0.0;
        if (a < std::min(b, kSplit)) {
            const double hi = std::min(b, kSplit);
            total += integrate([&](double P) { return f(P) * unnormalized(P); }, a, hi, 1e-11);
        }
        if (b > kSplit) {
            const double s_lo = std::max(a, kSplit) / (1.0 - std::max(a, kSplit));
            double s_hi = b >= 1.0 ? tail_cutoff() : b / (1.0 - b);
            s_hi = std::min(s_hi, tail_cutoff());
            if (s_hi > s_lo) {
                total += integrate(
                    [&](double s) {
                        const double P = s / (1.0 + s);
                        return f(P) * std::sqrt(P) * (1.0 + s) * std::exp(-beta_ * s);
                    },
                    s_lo, s_hi, 1e-11);
            }
        }
        return total;
    }

    // point beyond which (1+s) e^{-beta s} is below 1e-18
    double tail_cutoff() const {
        double s = 9.0;
        while ((1.0 + s) * std::exp(-beta_ * s) > 1e-18 && s < 1e9) s *= 2.0;
        return s;
    }

    double eta_;
    double beta_;
    double norm_ = 1.0;
};

/// Integrate <dP>/dt as if it were an ODE for the mean purity (the
/// deliberately naive curve; the true mean obeys the Fokker-Planck equation,
/// not this ODE). Classical RK4 on the requested output grid.
inline std::vector<double> naive_purity_ode(double eta, double p0, const std::vector<double>& t_grid,
                                            double gamma0 = 0.5) {
    std::vector<double> out;
    out.reserve(t_grid.size());
    double p = p0;
    double t = 0.0;
    const auto rhs = [&](double x) { return purity_drift(x, eta, gamma0); };
    for (double target : t_grid) {
        while (t < target - 1e-12) {
            const double h = std::min(1e-3, target - t);
            const double k1 = rhs(p);
            const double k2 = rhs(p + 0.5 * h * k1);
            const double k3 = rhs(p + 0.5 * h * k2);
            const double k4 = rhs(p + h * k3);
            p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
        }
        out.push_back(p);
    }
    return out;
}

}  // namespace qmon

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

// Heat kernel of isotropic diffusion on the unit sphere (the angular motion
// of an ideally monitored pure state). In terms of the angle Theta from the
// initial direction and the accumulated variance V = 4 G0 tau,
//   p(Theta; V) = sum_n (2n+1)/(4 pi) e^{-n(n+1) V/4} P_n(cos Theta),
// a density per solid angle. The series is truncated adaptively from the
// geometric decay of its terms; very small V (< 1e-4) falls back to the
// tangent-plane Gaussian p = e^{-Theta^2 / V} / (pi V), and V = 0 has no
// density (delta distribution).

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qmon/quadrature.hpp"

namespace qmon {

class SphereDiffusionKernel {
  public:
    static constexpr int kMaxTerms = 104;
    static constexpr double kGaussianSwitch = 1e-4;

    explicit SphereDiffusionKernel(double tau, double gamma0 = 0.5)
        : variance_(4.0 * gamma0 * tau) {
        if (!(tau > 0.0)) {
            throw std::domain_error("zero elapsed time: the distribution is a delta");
        }
        if (variance_ >= kGaussianSwitch) {
            coefficients_.push_back(1.0);
            for (int n = 1; n < kMaxTerms; ++n) {
                const double c = std::exp(-0.25 * n * (n + 1) * variance_);
                coefficients_.push_back(c);
                // remaining terms are bounded by a geometric tail with ratio
                // e^{-(n+1) V / 2}
                const double ratio = std::exp(-0.5 * (n + 1) * variance_);
                const double tail = (2.0 * n + 3.0) * c * ratio / (1.0 - ratio);
                if (tail < 1e-12) break;
            }
            if (coefficients_.size() == kMaxTerms) {
                throw std::domain_error(
                    "Legendre series needs more than the capped number of terms; V is too small "
                    "for the series branch");
            }
        }
    }

    /// Accumulated angular variance V = 4 G0 tau.
    double variance() const { return variance_; }

    std::size_t terms() const { return coefficients_.size(); }

    /// e^{-n(n+1)V/4}; the heat semigroup multiplies these under composition.
    double coefficient(std::size_t n) const { return coefficients_[n]; }

    /// Density per solid angle at polar angle Theta from the start direction.
    double pdf(double theta) const { return pdf_cos(std::cos(theta)); }

    /// Same, parameterized by x = cos Theta.
    double pdf_cos(double x) const {
        constexpr double four_pi = 4.0 * M_PI;
        if (coefficients_.empty()) {
            // tangent-plane Gaussian for very small variance
            const double theta = std::acos(std::min(1.0, std::max(-1.0, x)));
            return std::exp(-theta * theta / variance_) / (M_PI * variance_);
        }
        // Legendre recurrence (n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}
        double pm1 = 1.0;
        double sum = coefficients_[0];
        if (coefficients_.size() > 1) {
            double pn = x;
            sum += 3.0 * coefficients_[1] * pn;
            for (std::size_t n = 1; n + 1 < coefficients_.size(); ++n) {
                const double pnext =
                    ((2.0 * n + 1.0) * x * pn - static_cast<double>(n) * pm1) / (n + 1.0);
                pm1 = pn;
                pn = pnext;
                sum += (2.0 * (n + 1.0) + 1.0) * coefficients_[n + 1] * pn;
            }
        }
        return sum / four_pi;
    }

    /// Probability that cos Theta lies in [a, b].
    double prob_cos_interval(double a, double b) const {
        return integrate([&](double x) { return 2.0 * M_PI * pdf_cos(x); }, a, b, 1e-10);
    }

    /// <Theta^2> over the sphere. The integrand concentrates within a few
    /// sqrt(V) of the pole; split there so the quadrature always samples the
    /// core.
    double mean_theta2() const {
        const auto f = [&](double theta) {
            return theta * theta * pdf(theta) * 2.0 * M_PI * std::sin(theta);
        };
        const double width = std::sqrt(variance_);
        double total = 0.0;
        double lo = 0.0;
        for (double hi : {2.0 * width, 8.0 * width, M_PI}) {
            hi = std::min(hi, M_PI);
            if (hi > lo) total += integrate(f, lo, hi, 1e-11);
            lo = hi;
        }
        return total;
    }

  private:
    double variance_;
    std::vector<double> coefficients_;  // empty in the Gaussian branch
};

}  // namespace qmon

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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace qmon {

/// Pairwise (cascade) summation: order-independent accumulation error and a
/// fixed evaluation tree, so ensemble reductions do not depend on how work
/// was scheduled across threads.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 32) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

/// Sample mean with its standard error (sample std / sqrt(n)).
inline MeanStderr mean_stderr(std::span<const double> v) {
    MeanStderr out;
    out.n = v.size();
    if (v.empty()) return out;
    out.mean = pairwise_sum(v) / static_cast<double>(v.size());
    if (v.size() < 2) return out;
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - out.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(v.size() - 1);
    out.stderr_ = std::sqrt(var / static_cast<double>(v.size()));
    return out;
}

// ---------------------------------------------------------------------------
// Special functions for the statistical tests.
// ---------------------------------------------------------------------------

/// Regularized upper incomplete gamma Q(a, x).
inline double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw std::domain_error("gamma_q: invalid arguments");
    if (x == 0.0) return 1.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        // series for P(a, x)
        double ap = a;
        double del = 1.0 / a;
        double sum = del;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - lg);
    }
    // continued fraction for Q(a, x)
    double b = x + 1.0 - a;
    double c = 1e300;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - lg) * h;
}

/// Upper tail of the chi-square distribution with dof degrees of freedom.
inline double chi2_pvalue(double chi2, int dof) { return gamma_q(0.5 * dof, 0.5 * chi2); }

struct Chi2Result {
    double chi2 = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

/// Pearson chi-square test of observed counts against expected probabilities.
inline Chi2Result chi2_test(std::span<const std::size_t> counts, std::span<const double> probs,
                            int constraints = 1) {
    if (counts.size() != probs.size() || counts.empty()) {
        throw std::domain_error("chi2_test: size mismatch");
    }
    double total = 0.0;
    for (std::size_t c : counts) total += static_cast<double>(c);
    Chi2Result r;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double expected = probs[i] * total;
        if (expected <= 0.0) throw std::domain_error("chi2_test: zero expected count");
        const double d = static_cast<double>(counts[i]) - expected;
        r.chi2 += d * d / expected;
    }
    r.dof = static_cast<int>(counts.size()) - constraints;
    r.p_value = chi2_pvalue(r.chi2, r.dof);
    return r;
}

/// Survival function of the Kolmogorov distribution.
inline double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test (asymptotic p-value).
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

/// Ordinary least-squares line y = intercept + slope x, with the residual
/// estimate of the slope standard error.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::domain_error("linear_fit: bad input");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        double ss_res = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            ss_res += r * r;
        }
        fit.slope_stderr = std::sqrt(ss_res / (n - 2.0) / sxx);
    }
    return fit;
}

/// Abscissa of the vertex of the parabola through three points; used to
/// refine the location of a fidelity maximum between sweep grid points.
inline double parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
    const double d01 = (y1 - y0) / (x1 - x0);
    const double d12 = (y2 - y1) / (x2 - x1);
    const double curv = (d12 - d01) / (x2 - x0);
    if (curv == 0.0) return x1;
    return 0.5 * (x0 + x1 - d01 / curv);
}

}  // namespace qmon

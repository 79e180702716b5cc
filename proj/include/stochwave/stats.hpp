#pragma once

#include "stochwave/rng.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace stochwave {

// Fixed-order pairwise summation: the result depends only on the input order.
inline double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

inline double mean(const std::vector<double>& x) {
    if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
    return pairwise_sum(x) / static_cast<double>(x.size());
}

// Unbiased sample variance.
inline double sample_variance(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = (x[i] - m) * (x[i] - m);
    return pairwise_sum(d) / static_cast<double>(x.size() - 1);
}

inline double standard_error(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    return std::sqrt(sample_variance(x) / static_cast<double>(x.size()));
}

// Standard error of the unbiased variance estimator, from the fourth central moment.
inline double variance_standard_error(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    if (n < 4) return std::numeric_limits<double>::infinity();
    const double m = mean(x);
    std::vector<double> d2(x.size()), d4(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - m;
        d2[i] = d * d;
        d4[i] = d2[i] * d2[i];
    }
    const double m2 = pairwise_sum(d2) / n, m4 = pairwise_sum(d4) / n;
    return std::sqrt(std::max(0.0, (m4 - (n - 3.0) / (n - 1.0) * m2 * m2) / n));
}

// Linear interpolated quantile of sorted data, q in [0,1].
inline double quantile_sorted(const std::vector<double>& s, double q) {
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= s.size()) return s.back();
    const double f = pos - static_cast<double>(i);
    return s[i] + f * (s[i + 1] - s[i]);
}

struct ConfidenceInterval {
    double estimate = 0.0, lo = 0.0, hi = 0.0;
};

// Percentile bootstrap of an arbitrary statistic of resampled index sets.
template <class Stat>
ConfidenceInterval bootstrap(std::size_t n, Stat&& stat, RngStream& rng, int B = 1000, double level = 0.95) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    ConfidenceInterval ci;
    ci.estimate = stat(all);
    if (n < 2) {
        ci.lo = ci.hi = ci.estimate;
        return ci;
    }
    std::vector<double> reps(B);
    std::vector<std::size_t> idx(n);
    for (int b = 0; b < B; ++b) {
        for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
        reps[b] = stat(idx);
    }
    std::sort(reps.begin(), reps.end());
    ci.lo = quantile_sorted(reps, 0.5 * (1.0 - level));
    ci.hi = quantile_sorted(reps, 0.5 * (1.0 + level));
    return ci;
}

inline ConfidenceInterval bootstrap_mean(const std::vector<double>& x, RngStream& rng, int B = 1000, double level = 0.95) {
    return bootstrap(
        x.size(),
        [&](const std::vector<std::size_t>& idx) {
            std::vector<double> v(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) v[i] = x[idx[i]];
            return mean(v);
        },
        rng, B, level);
}

struct LinearFit {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
    double slope_se = 0.0;
    double p_value = 1.0; // two-sided test of slope = 0
    std::size_t n = 0;
};

inline LinearFit ols(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ols: need >= 2 paired points");
    const std::size_t n = x.size();
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 1e-300)) throw std::invalid_argument("ols: degenerate abscissae");
    LinearFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        sse += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    if (n > 2) {
        f.slope_se = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
        if (f.slope_se > 0.0) {
            boost::math::students_t dist(static_cast<double>(n - 2));
            f.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(f.slope / f.slope_se)));
        } else {
            f.p_value = f.slope != 0.0 ? 0.0 : 1.0;
        }
    }
    return f;
}

// Least-squares c0 + c1 x + c2 x^2.
inline Eigen::Vector3d quadratic_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("quadratic_fit: need >= 3 points");
    Eigen::MatrixXd A(x.size(), 3);
    Eigen::VectorXd b(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        A(i, 0) = 1.0;
        A(i, 1) = x[i];
        A(i, 2) = x[i] * x[i];
        b(i) = y[i];
    }
    return A.colPivHouseholderQr().solve(b);
}

} // namespace stochwave

#pragma once

#include "stochwave/montecarlo.hpp"
#include "stochwave/rng.hpp"
#include "stochwave/stats.hpp"
#include "stochwave/toy.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace stochwave {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ChainKernel {
    int d = 3;
    explicit ChainKernel(int dim) : d(dim) {
        if (d < 2) throw std::invalid_argument("ChainKernel: d must be >= 2");
    }
    double exponent() const { return 0.25 * static_cast<double>(d - 1); }
};

// int_0^{min(t,s)} (1+t-u)^{-a}(1+s-u)^{-a} du by adaptive Gauss-Kronrod,
// absolute tolerance tol.
inline double covariance_quadrature(double t, double s, int d, double tol = 1e-10) {
    if (t < 0.0 || s < 0.0) throw std::invalid_argument("covariance: times must be >= 0");
    const double a = ChainKernel(d).exponent();
    const double m = std::min(t, s), delta = std::abs(t - s);
    if (m == 0.0) return 0.0;
    // substitute w = min - u
    auto f = [&](double w) { return std::pow((1.0 + delta + w) * (1.0 + w), -a); };
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, m, 30, 1e-13, &err);
    if (!(err <= tol)) throw QuadratureError("covariance quadrature did not converge");
    return v;
}

// d = 3: 2 log((sqrt(1+s) + sqrt(1+t)) / (1 + sqrt(1+|t-s|))).
inline double covariance_d3(double t, double s) {
    if (t < s) std::swap(t, s);
    return 2.0 * std::log((std::sqrt(1.0 + s) + std::sqrt(1.0 + t)) / (1.0 + std::sqrt(1.0 + t - s)));
}

// d = 5: (1/delta) log((1+s)(1+delta)/(1+t)), delta = t - s.
inline double covariance_d5(double t, double s) {
    if (t < s) std::swap(t, s);
    const double delta = t - s, q = 1.0 + s;
    if (delta == 0.0) return s / q;
    // (1+delta)/(1+delta/q) = 1 + delta s/(q+delta), free of cancellation
    return std::log1p(delta * s / (q + delta)) / delta;
}

inline double covariance(double t, double s, int d) {
    if (t < 0.0 || s < 0.0) throw std::invalid_argument("covariance: times must be >= 0");
    if (d == 3) return covariance_d3(t, s);
    if (d == 5) return covariance_d5(t, s);
    return covariance_quadrature(t, s, d);
}

inline double variance_Y(double t, int d) {
    if (d == 3) return std::log1p(t);
    if (d == 5) return t / (1.0 + t);
    return covariance(t, t, d);
}

// Squared canonical metric; the d = 3 and d = 5 branches use the closed forms.
inline double dch2(double t, double s, int d) {
    if (t == s) return 0.0;
    if (t < s) std::swap(t, s);
    if (d == 3) {
        // log(1+t) + log(1+s) - 2 log((sqrt(1+delta)-1)^2 / (sqrt(1+t)-sqrt(1+s))^2)
        const double r = (std::sqrt(1.0 + t) + std::sqrt(1.0 + s)) / (std::sqrt(1.0 + t - s) + 1.0);
        return std::max(0.0, std::log1p(t) + std::log1p(s) - 4.0 * std::log(r));
    }
    if (d == 5) return std::max(0.0, t / (t + 1.0) + s / (s + 1.0) - 2.0 * covariance_d5(t, s));
    return std::max(0.0, variance_Y(t, d) + variance_Y(s, d) - 2.0 * covariance(t, s, d));
}

// Same quantity from quadrature alone.
inline double dch2_quadrature(double t, double s, int d) {
    return covariance_quadrature(t, t, d) + covariance_quadrature(s, s, d) - 2.0 * covariance_quadrature(t, s, d);
}

inline double dch(double t, double s, int d) { return std::sqrt(dch2(t, s, d)); }

// max over sampled pairs; the maximum is attained with one endpoint at T.
inline double dch_diameter(double T, int d, int samples = 400) {
    double best = 0.0;
    for (int i = 0; i <= samples; ++i) best = std::max(best, dch(T, T * i / samples, d));
    return best;
}

struct CoverReport {
    std::size_t N = 0;
    std::size_t repaired = 0; // balls where the endpoint bisection had to be redone
};

// Greedy cover of [0,T] by d_ch balls of radius nu.  From the left end a we
// take the farthest centre c with [a,c] inside B(c,nu), then the farthest b
// with [c,b] inside B(c,nu).  Endpoint bisection assumes the distance to c
// grows with |t-c|; a sampled check of the whole segment repairs the step
// when it does not.
inline CoverReport covering_number_report(double T, int d, double nu, std::size_t limit = 50'000'000) {
    if (!(nu > 0.0)) throw std::invalid_argument("covering_number: nu must be > 0");
    if (!(T >= 0.0)) throw std::invalid_argument("covering_number: T must be >= 0");
    CoverReport rep;
    constexpr int kSamples = 16;
    auto seg_ok = [&](double c, double lo, double hi) {
        for (int i = 0; i <= kSamples; ++i)
            if (dch(c, lo + (hi - lo) * i / kSamples, d) > nu) return false;
        return true;
    };
    // largest x in [from, T] with pred(x), assuming pred holds at from
    auto farthest = [&](double from, double step, auto&& pred) {
        if (pred(T)) return T;
        double lo = from, hi = std::min(T, from + step);
        while (pred(hi)) {
            lo = hi;
            hi = std::min(T, from + 2.0 * (hi - from));
        }
        for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
            const double m = 0.5 * (lo + hi);
            (pred(m) ? lo : hi) = m;
        }
        return lo;
    };
    double a = 0.0, step = std::min(T, nu * nu);
    for (;;) {
        if (++rep.N > limit) throw std::runtime_error("covering_number: cover exceeds limit");
        double c = farthest(a, step, [&](double x) { return dch(a, x, d) <= nu; });
        if (!seg_ok(c, a, c)) {
            ++rep.repaired;
            c = farthest(a, 0.5 * (c - a), [&](double x) { return seg_ok(x, a, x); });
        }
        if (c >= T) break;
        double b = farthest(c, std::max(c - a, 1e-12), [&](double x) { return dch(c, x, d) <= nu; });
        if (!seg_ok(c, c, b)) {
            ++rep.repaired;
            b = farthest(c, 0.5 * (b - c), [&](double x) { return seg_ok(c, c, x); });
        }
        if (b >= T) break;
        step = std::max(b - a, 1e-12);
        a = b;
    }
    return rep;
}

inline std::size_t covering_number(double T, int d, double nu) { return covering_number_report(T, d, nu).N; }

struct DudleyOptions {
    int nodes = 80;              // uniform nu nodes on [nu0, diameter]
    std::size_t max_cover = 200000; // sets nu0: covers finer than this use the tail model
};

// int_0^diam sqrt(log N(T, d_ch, nu)) dnu.  Below nu0 the entropy follows
// N(nu) = N(nu0) (nu0/nu)^2, integrated after nu = nu0 e^{-u}.
inline double dudley_integral(double T, int d, const DudleyOptions& opt = {}) {
    if (!(T >= 2.0)) throw std::invalid_argument("dudley_integral: T must be >= 2");
    const double diam = dch_diameter(T, d);
    // local behaviour d^2 ~ |t-s| fixes the small-nu cover count near T / (2 nu^2)
    double nu0 = std::min(0.5 * diam, std::sqrt(T / (2.0 * static_cast<double>(opt.max_cover))));
    const double N0 = static_cast<double>(covering_number(T, d, nu0));
    const double A = N0 * nu0 * nu0;
    const double L = std::log(A / (nu0 * nu0));
    boost::math::quadrature::exp_sinh<double> es;
    const double tail =
        nu0 * es.integrate([&](double u) { return std::sqrt(std::max(0.0, L + 2.0 * u)) * std::exp(-u); }, 0.0,
                           std::numeric_limits<double>::infinity());
    const int n = std::max(2, opt.nodes);
    const double h = (diam - nu0) / n;
    double body = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double nu = nu0 + h * i;
        const double Nn = i == 0 ? N0 : static_cast<double>(covering_number(T, d, nu));
        body += (i == 0 || i == n ? 0.5 : 1.0) * std::sqrt(std::log(Nn));
    }
    return tail + body * h;
}

// (p^p + log T)^p [int_0^T (1+T-t)^{-(d-1)/2} dt]^p
inline double growth_model(int d, double T, double p = 1.0) {
    const double e = 0.5 * static_cast<double>(d - 1);
    const double I = std::abs(e - 1.0) < 1e-14 ? std::log1p(T) : (std::pow(1.0 + T, 1.0 - e) - 1.0) / (1.0 - e);
    return std::pow(std::pow(p, p) + std::log(T), p) * std::pow(I, p);
}

struct SupGrowthRow {
    double T = 0.0;
    double mean = 0.0, ci_lo = 0.0, ci_hi = 0.0;
};

enum class SupProcess { Y, OU, WeightedOU };

// E sup_{[0,T]} of Y^2, Y_ou^2, or the weighted OU integral I(t).  One path to
// max(T_list) per realisation; RngStream(seed, m, tag).
inline std::vector<SupGrowthRow> empirical_sup_growth(int d, const std::vector<double>& T_list, int M, double dt,
                                                      std::uint64_t seed, int workers, SupProcess which = SupProcess::Y,
                                                      std::uint64_t tag = 3) {
    if (T_list.empty()) return {};
    const double Tmax = *std::max_element(T_list.begin(), T_list.end());
    std::vector<std::size_t> idx;
    for (double T : T_list) idx.push_back(static_cast<std::size_t>(std::llround(T / dt)));
    auto sups = parallel_map<std::vector<double>>(static_cast<std::size_t>(M), workers, [&](std::size_t m) {
        RngStream rng(seed, m, tag);
        std::vector<double> star;
        if (which == SupProcess::Y) {
            star = simulate_Y(d, dt, Tmax, rng).Ystar;
        } else if (which == SupProcess::WeightedOU) {
            star = simulate_I(d, dt, Tmax, rng).Ystar;
        } else {
            ToyConfig c;
            c.dt = dt;
            c.T = Tmax;
            c.sigma = 1.0;
            star = theta_running_sup(simulate_ou(c, rng));
        }
        std::vector<double> out;
        for (std::size_t i : idx) out.push_back(star[std::min(i, star.size() - 1)]);
        return out;
    });
    std::vector<SupGrowthRow> rows;
    RngStream boot(seed, 0, tag + 1000);
    for (std::size_t j = 0; j < T_list.size(); ++j) {
        std::vector<double> x(sups.size());
        for (std::size_t m = 0; m < sups.size(); ++m) x[m] = sups[m][j];
        const auto ci = bootstrap_mean(x, boot);
        rows.push_back({T_list[j], ci.estimate, ci.lo, ci.hi});
    }
    return rows;
}

struct ChernoffRow {
    double t, s, theta, empirical, bound, se;
};

// Empirical P(|Y(t) - Y(s)| > theta) against 2 exp(-theta^2 / d_ch^2).
inline std::vector<ChernoffRow> chernoff_check(int d, double dt, double Tmax,
                                               const std::vector<std::array<double, 3>>& tst, int M,
                                               std::uint64_t seed, int workers) {
    auto paths = parallel_map<std::vector<double>>(static_cast<std::size_t>(M), workers, [&](std::size_t m) {
        RngStream rng(seed, m, 7);
        const auto p = simulate_Y(d, dt, Tmax, rng);
        std::vector<double> out;
        for (const auto& q : tst) {
            const auto i = static_cast<std::size_t>(std::llround(q[0] / dt));
            const auto j = static_cast<std::size_t>(std::llround(q[1] / dt));
            out.push_back(std::abs(p.Y[i] - p.Y[j]));
        }
        return out;
    });
    std::vector<ChernoffRow> rows;
    for (std::size_t k = 0; k < tst.size(); ++k) {
        double hits = 0.0;
        for (const auto& p : paths) hits += p[k] > tst[k][2] ? 1.0 : 0.0;
        const double pe = hits / M;
        const double d2 = dch2(tst[k][0], tst[k][1], d);
        rows.push_back({tst[k][0], tst[k][1], tst[k][2], pe, 2.0 * std::exp(-tst[k][2] * tst[k][2] / d2),
                        std::sqrt(std::max(pe * (1.0 - pe), 1.0 / M) / M)});
    }
    return rows;
}

} // namespace stochwave

#include "stochwave/toy.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace stochwave;

namespace {

ToyConfig cfg_of(int d, double sigma, double dt, double T) {
    ToyConfig c;
    c.d = d;
    c.sigma = sigma;
    c.dt = dt;
    c.T = T;
    return c;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace

TEST(ToyConfig, Validation) {
    EXPECT_THROW(cfg_of(1, 0.1, 0.1, 1).validate(), std::invalid_argument);
    EXPECT_THROW(cfg_of(2, 0.1, 0.0, 1).validate(), std::invalid_argument);
    EXPECT_THROW(cfg_of(2, -0.1, 0.1, 1).validate(), std::invalid_argument);
    EXPECT_NO_THROW(cfg_of(2, 0.1, 0.1, 1).validate());
}

TEST(Toy, ZeroNoiseIsZero) {
    const auto c = cfg_of(2, 0.0, 0.1, 20.0);
    RngStream rng(1, 0);
    const auto v = simulate_ou(c, rng);
    for (double x : v) EXPECT_EQ(x, 0.0);
    const auto p = simulate_hat_theta(c, v);
    for (double x : p.thetahat) EXPECT_EQ(x, 0.0);
    for (double x : p.Theta) EXPECT_EQ(x, 0.0);
}

TEST(Toy, LinearCaseClosedForm) {
    const auto c = cfg_of(5, 0.3, 0.01, 10.0);
    const std::vector<double> v(c.steps() + 1, 0.0);
    const auto p = simulate_hat_theta(c, v);
    for (std::size_t i = 100; i < p.t.size(); i += 100)
        EXPECT_LT(rel(p.thetahat[i], 0.09 * std::log1p(p.t[i])), 1e-5) << p.t[i];
}

TEST(Toy, BlockedMatchesDirect) {
    for (int d : {2, 3}) {
        const auto c = cfg_of(d, 0.2, 0.05, 150.0);
        RngStream rng(7, d);
        const auto v = simulate_ou(c, rng);
        const auto a = simulate_hat_theta(c, v, VolterraMethod::Direct);
        const auto b = simulate_hat_theta(c, v, VolterraMethod::Blocked);
        ASSERT_FALSE(a.overflow);
        for (std::size_t i = 1; i < a.t.size(); ++i) ASSERT_LT(rel(b.thetahat[i], a.thetahat[i]), 1e-11) << i;
    }
}

TEST(Toy, PathInvariants) {
    const auto c = cfg_of(2, 0.1, 0.1, 300.0);
    RngStream rng(3, 0);
    const auto v = simulate_ou(c, rng);
    const auto p = simulate_hat_theta(c, v);
    EXPECT_EQ(p.thetahat[0], 0.0);
    EXPECT_EQ(p.vhat[0], 0.0);
    for (std::size_t i = 0; i < p.t.size(); ++i) {
        EXPECT_GE(p.thetahat[i], 0.0);
        if (i) {
            EXPECT_GE(p.Theta[i], p.Theta[i - 1]);
        }
    }
    EXPECT_EQ(theta_running_sup(p.thetahat), p.Theta);
}

TEST(Toy, MonotoneInSigma) {
    auto c = cfg_of(2, 0.05, 0.1, 200.0);
    RngStream rng(5, 0);
    const auto v = simulate_ou(c, rng);
    const auto lo = simulate_hat_theta(c, v);
    c.sigma = 0.07;
    const auto hi = simulate_hat_theta(c, v);
    for (std::size_t i = 0; i < lo.t.size(); ++i) EXPECT_GE(hi.thetahat[i], lo.thetahat[i]);
}

TEST(Toy, OverflowGuard) {
    const auto c = cfg_of(2, 3.0, 0.1, 200.0);
    RngStream rng(9, 0);
    const auto p = simulate_hat_theta(c, simulate_ou(c, rng));
    ASSERT_TRUE(p.overflow);
    EXPECT_GT(p.overflow_time, 0.0);
    EXPECT_TRUE(std::isinf(p.Theta.back()));
    for (std::size_t i = 1; i < p.t.size(); ++i) EXPECT_GE(p.Theta[i], p.Theta[i - 1]);
}

// Second-order slope of the trapezoid scheme with a smooth forcing path.
TEST(Toy, RichardsonSmoothForcing) {
    auto run = [](double dt) {
        auto c = cfg_of(2, 0.3, dt, 10.0);
        std::vector<double> v(c.steps() + 1);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.5 * (1.0 + std::sin(dt * static_cast<double>(i)));
        return simulate_hat_theta(c, v).thetahat.back();
    };
    const double a = run(0.1), b = run(0.05), c = run(0.025);
    EXPECT_NEAR((a - b) / (b - c), 4.0, 0.2);
    EXPECT_LT(rel(a, c), 1e-2);
}

// The OU path refined by its bridge against the coarse solve, sigma in the
// range of the hitting-time sweep.
TEST(Toy, RichardsonFullSystem) {
    const double sigma = 0.05;
    int ok = 0;
    for (int r = 0; r < 20; ++r) {
        RngStream rng(21, r);
        const auto c = cfg_of(2, sigma, 0.1, 10.0);
        const auto v = simulate_ou(c, rng);
        const auto v2 = ou_refine(v, c.dt, sigma, rng);
        const double a = simulate_hat_theta(c, v).thetahat.back();
        const double ref = simulate_hat_theta(cfg_of(2, sigma, 0.05, 10.0), v2).thetahat.back();
        if (rel(a, ref) < 1e-2) ++ok;
    }
    EXPECT_EQ(ok, 20);
}

TEST(Toy, OuBridgeMoments) {
    const double sigma = 0.7, dt = 0.4;
    const auto c = cfg_of(2, sigma, dt, 0.8);
    std::vector<double> mid;
    for (int m = 0; m < 20000; ++m) {
        RngStream rng(4, m);
        const auto v = simulate_ou(c, rng);
        mid.push_back(ou_refine(v, dt, sigma, rng)[1]);
    }
    // unconditional law of v(dt/2): variance sigma^2 (1 - e^{-dt}) / 2
    const double want = 0.5 * sigma * sigma * -std::expm1(-dt);
    EXPECT_NEAR(sample_variance(mid), want, 3.0 * variance_standard_error(mid));
    EXPECT_NEAR(mean(mid), 0.0, 3.0 * standard_error(mid));
}

TEST(Ou, StationaryVariance) {
    const auto c = cfg_of(2, 0.3, 0.1, 50.0);
    std::vector<double> end, lag;
    const std::size_t k = 5; // tau = 0.5
    for (int m = 0; m < 10000; ++m) {
        RngStream rng(11, m);
        const auto v = simulate_ou(c, rng);
        end.push_back(v.back());
        lag.push_back(v[v.size() - 1 - k]);
    }
    EXPECT_NEAR(sample_variance(end), 0.045, 3.0 * variance_standard_error(end));
    const double mx = mean(end), my = mean(lag);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < end.size(); ++i) {
        sxy += (end[i] - mx) * (lag[i] - my);
        sxx += (end[i] - mx) * (end[i] - mx);
        syy += (lag[i] - my) * (lag[i] - my);
    }
    const double rho = sxy / std::sqrt(sxx * syy), want = std::exp(-0.5);
    EXPECT_NEAR(rho, want, 3.0 * (1.0 - want * want) / std::sqrt(10000.0));
}

TEST(TauAvg, SentinelAndInterpolation) {
    const std::vector<double> t{0, 1, 2, 3};
    const std::vector<double> m{0, 0.5, 1.5, 3.0};
    EXPECT_TRUE(std::isinf(tau_avg(t, m, 10.0)));
    EXPECT_DOUBLE_EQ(tau_avg(t, m, 1.0), 1.5);
    EXPECT_DOUBLE_EQ(tau_avg(t, m, 0.25), 0.5);
}

TEST(TauAvg, SinglePathIsFirstCrossing) {
    auto c = cfg_of(2, 0.2, 0.1, 400.0);
    c.M = 1;
    const auto e = toy_ensemble(c, 17, 1);
    RngStream rng(17, 0, 1);
    const auto p = simulate_hat_theta(c, simulate_ou(c, rng));
    EXPECT_EQ(e.mean_Theta, p.Theta);
    const double tau = tau_avg(e.t, e.mean_Theta, 1.0);
    ASSERT_TRUE(std::isfinite(tau));
    std::size_t i = 0;
    while (p.Theta[i] <= 1.0) ++i;
    EXPECT_GT(tau, p.t[i - 1]);
    EXPECT_LE(tau, p.t[i]);
}

TEST(ToyEnsemble, DeterministicAcrossWorkers) {
    auto c = cfg_of(2, 0.1, 0.1, 50.0);
    c.M = 12;
    const auto a = toy_ensemble(c, 5, 1), b = toy_ensemble(c, 5, 4);
    EXPECT_EQ(a.mean_Theta, b.mean_Theta);
}

TEST(PowerLaw, ExactData) {
    std::vector<double> s, tau;
    for (int i = 0; i < 8; ++i) {
        s.push_back(0.075 * std::pow(0.8, i));
        tau.push_back(3.0 * std::pow(s.back(), -1.4));
    }
    const auto f = powerlaw_fit(s, tau);
    EXPECT_NEAR(f.exponent, 1.4, 1e-10);
    EXPECT_NEAR(f.intercept, std::log(3.0), 1e-10);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
    for (double q : windowed_exponents(s, tau))
        if (!std::isnan(q)) {
            EXPECT_NEAR(q, 1.4, 1e-10);
        }
}

TEST(PowerLaw, NoisyCalibration) {
    int hits = 0;
    const int trials = 400;
    for (int r = 0; r < trials; ++r) {
        RngStream rng(99, r);
        std::vector<double> s, tau;
        for (int i = 0; i < 10; ++i) {
            s.push_back(0.075 * std::pow(0.8, i));
            tau.push_back(2.0 * std::pow(s.back(), -1.3) * (1.0 + 0.05 * rng.normal()));
        }
        if (std::abs(powerlaw_fit(s, tau).exponent - 1.3) < 0.15) ++hits;
    }
    EXPECT_GE(hits, static_cast<int>(0.95 * trials));
}

TEST(PowerLaw, Degenerate) {
    EXPECT_THROW(powerlaw_fit({0.1, 0.1, 0.1}, {1, 2, 3}), std::invalid_argument);
    EXPECT_THROW(powerlaw_fit({0.1, 0.2}, {1, 2}), std::invalid_argument);
    EXPECT_THROW(powerlaw_fit({0.1, 0.2, 0.3}, {1, INFINITY, 3}), std::invalid_argument);
}

TEST(SimulateY, MatchesDirectSum) {
    RngStream a(8, 0), b(8, 0);
    const double dt = 0.05;
    const auto p = simulate_Y(3, dt, 40.0, a);
    const std::size_t n = p.t.size() - 1;
    std::vector<double> dB(n);
    b.fill_normal(dB.data(), n, std::sqrt(dt));
    const auto K = wiener_kernel(3, dt, n);
    EXPECT_EQ(p.Y[0], 0.0);
    for (std::size_t m = 1; m <= n; m += 37) {
        double s = 0.0;
        for (std::size_t k = 0; k < m; ++k) s += K[m - k] * dB[k];
        EXPECT_NEAR(p.Y[m], s, 1e-12);
    }
    for (std::size_t m = 1; m <= n; ++m) EXPECT_GE(p.Ystar[m], p.Ystar[m - 1]);
}

TEST(SimulateY, VarianceMatchesCovarianceDiagonal) {
    for (int d : {3, 5}) {
        std::vector<std::vector<double>> at(3);
        const double dt = 0.05;
        const std::size_t idx[3] = {20, 200, 2000};
        for (int m = 0; m < 10000; ++m) {
            RngStream rng(31, m, d);
            const auto p = simulate_Y(d, dt, 100.0, rng);
            for (int j = 0; j < 3; ++j) at[j].push_back(p.Y[idx[j]]);
        }
        for (int j = 0; j < 3; ++j) {
            const double t = dt * static_cast<double>(idx[j]);
            const double want = d == 5 ? t / (1.0 + t) : std::log1p(t);
            EXPECT_NEAR(sample_variance(at[j]), want, 3.0 * variance_standard_error(at[j])) << d << " " << t;
        }
    }
}

TEST(SimulateI, MatchesDirectTrapezoid) {
    RngStream a(12, 0), b(12, 0);
    const auto p = simulate_I(2, 0.1, 30.0, a);
    auto c = cfg_of(2, 1.0, 0.1, 30.0);
    const auto y = simulate_ou(c, b);
    for (std::size_t m = 1; m < y.size(); m += 17) {
        double s = 0.0;
        for (std::size_t k = 0; k <= m; ++k) {
            const double w = (k == 0 || k == m) ? 0.5 : 1.0;
            s += w * std::pow(1.0 + 0.1 * static_cast<double>(m - k), -0.25) * std::abs(y[k]);
        }
        EXPECT_NEAR(p.Y[m], 0.1 * s, 1e-12);
    }
}

TEST(SigmaLadder, LargestSigmaCrossesBeforeThreshold) {
    auto c = cfg_of(2, 0.075, 0.1, 5000.0);
    LadderOptions o;
    o.max_steps = 1;
    o.min_steps = 1;
    const auto rows = sigma_ladder(c, o, 2024, 0);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_TRUE(std::isfinite(rows[0].tau[0]));
    EXPECT_LT(rows[0].tau[0], 5000.0);
}

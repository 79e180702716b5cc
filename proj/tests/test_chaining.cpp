#include "stochwave/chaining.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace stochwave;

namespace {

std::vector<double> mesh(double lo, double hi, int n) {
    std::vector<double> m;
    for (int i = 0; i < n; ++i) m.push_back(lo + (hi - lo) * i / (n - 1));
    return m;
}

} // namespace

TEST(Covariance, Basics) {
    for (int d : {2, 3, 4, 5}) {
        EXPECT_EQ(covariance(3.0, 0.0, d), 0.0);
        EXPECT_NEAR(covariance(3.0, 1.5, d), covariance(1.5, 3.0, d), 1e-14);
    }
    EXPECT_NEAR(covariance_d3(7.0, 2.0), covariance_quadrature(7.0, 2.0, 3), 1e-8);
    for (double t : {0.5, 1.0, 10.0, 100.0}) {
        EXPECT_NEAR(covariance(t, t, 5), t / (1.0 + t), 1e-14);
        EXPECT_NEAR(covariance_quadrature(t, t, 5), t / (1.0 + t), 1e-10);
        EXPECT_NEAR(covariance_quadrature(t, t, 3), std::log1p(t), 1e-10);
    }
    EXPECT_THROW(covariance(-1.0, 1.0, 3), std::invalid_argument);
}

TEST(Covariance, D5SmallLagAccurate) {
    for (double s : {0.3, 4.0, 50.0}) {
        for (double f : {1e-3, 1e-6, 1e-9, 1e-12}) {
            const double t = s + f * (1 + s);
            EXPECT_NEAR(covariance_d5(t, s), covariance_quadrature(t, s, 5), 1e-10) << s << " " << f;
        }
    }
}

TEST(Dch, ClosedFormsMatchQuadratureOnMesh) {
    const auto g = mesh(0.0, 100.0, 50);
    for (int d : {3, 5}) {
        double worst = 0.0;
        for (double t : g)
            for (double s : g) worst = std::max(worst, std::abs(dch2(t, s, d) - dch2_quadrature(t, s, d)));
        EXPECT_LT(worst, 1e-8) << d;
    }
}

TEST(Dch, MetricAxioms) {
    RngStream rng(3, 0);
    for (int d : {2, 3, 4, 5}) {
        int bad = 0;
        const int n = d == 3 || d == 5 ? 10000 : 1000;
        for (int i = 0; i < n; ++i) {
            const double a = 50 * rng.uniform(), b = 50 * rng.uniform(), c = 50 * rng.uniform();
            if (dch(a, c, d) > dch(a, b, d) + dch(b, c, d) + 1e-9) ++bad;
            EXPECT_EQ(dch(a, a, d), 0.0);
            EXPECT_EQ(dch(a, b, d), dch(b, a, d));
        }
        EXPECT_EQ(bad, 0) << d;
    }
}

// Greedy covering relies on d(a, x) growing with x >= a.
TEST(Dch, RightMonotoneOnTestedRanges) {
    for (int d : {3, 5})
        for (double a : mesh(0.0, 1000.0, 41)) {
            double prev = 0.0;
            for (double x = a; x <= 1000.0; x += 0.25 + 0.01 * x) {
                const double v = dch(a, x, d);
                ASSERT_GE(v, prev - 1e-12) << d << " " << a << " " << x;
                prev = v;
            }
        }
}

TEST(Dch, D3HalfLagLogBoundOnMesh) {
    const auto g = mesh(0.0, 100.0, 50);
    int violations = 0, checked = 0;
    for (double t : g)
        for (double s : g) {
            if (t <= s) continue;
            ++checked;
            const double v = dch2(t, s, 3), dl = t - s;
            const bool ok = v <= std::log1p(0.5 * dl) && (dl > 2.0 || v <= 0.5 * dl) && (dl < 2.0 || v <= std::log(dl));
            if (!ok) ++violations;
        }
    EXPECT_EQ(violations, 0) << "of " << checked;
}

TEST(Dch, D5MinBoundOnMesh) {
    const auto g = mesh(0.0, 100.0, 50);
    for (double t : g)
        for (double s : g) EXPECT_LE(dch2(t, s, 5), std::min(std::abs(t - s), 2.0) + 1e-14) << t << " " << s;
}

TEST(Covering, TrivialAndValidation) {
    EXPECT_EQ(covering_number(10.0, 3, dch_diameter(10.0, 3) + 0.01), 1u);
    EXPECT_EQ(covering_number(10.0, 3, 100.0), 1u);
    EXPECT_THROW(covering_number(10.0, 3, 0.0), std::invalid_argument);
    std::size_t prev = 1u << 30;
    for (double nu : {0.1, 0.2, 0.4, 0.8, 1.6}) {
        const auto n = covering_number(100.0, 3, nu);
        EXPECT_LE(n, prev);
        prev = n;
    }
}

TEST(Covering, D3SmallRadiusBound) {
    for (double T : {10.0, 100.0, 1000.0})
        for (double nu : {0.1, 0.25, 0.5, 0.75, 1.0}) {
            const double n = static_cast<double>(covering_number(T, 3, nu));
            EXPECT_LE(n, T / (2.0 * nu * nu) * (1.0 + 1e-9)) << T << " " << nu;
        }
}

TEST(Covering, D3LargeRadiusBound) {
    for (double T : {10.0, 100.0, 1000.0})
        for (double nu = 1.0; nu <= std::sqrt(std::log(T)) + 1e-12; nu += 0.25) {
            const double n = static_cast<double>(covering_number(T, 3, nu));
            EXPECT_LE(n, std::max(1.0, T / std::exp(nu * nu))) << T << " " << nu;
        }
}

TEST(Dudley, D3LogBound) {
    double prev = 0.0;
    for (double T : {2.0, 10.0, 100.0, 1e4}) {
        const double v = dudley_integral(T, 3);
        EXPECT_LE(v, 4.0 * std::log(T)) << T;
        EXPECT_GE(v, prev);
        prev = v;
    }
    EXPECT_THROW(dudley_integral(1.0, 3), std::invalid_argument);
}

TEST(Dudley, D5SameLogarithmicRate) {
    for (double T : {10.0, 100.0, 1000.0, 1e4}) {
        const double r = dudley_integral(T, 5) / std::log(T);
        EXPECT_TRUE(std::isfinite(r));
        EXPECT_LE(r, 4.0) << T;
    }
}

TEST(Dudley, NodeRefinementIsStable) {
    DudleyOptions a, b;
    b.nodes = 160;
    EXPECT_NEAR(dudley_integral(100.0, 3, a), dudley_integral(100.0, 3, b), 0.02 * dudley_integral(100.0, 3, b));
}

TEST(Chernoff, EmpiricalTailBelowBound) {
    const std::vector<std::array<double, 3>> q{{{5.0, 4.0, 1.0}}, {{20.0, 10.0, 2.0}}, {{3.0, 2.5, 0.6}}, {{40.0, 1.0, 3.0}}};
    for (const auto& r : chernoff_check(3, 0.05, 40.0, q, 4000, 5, 0)) EXPECT_LE(r.empirical, r.bound + 3.0 * r.se);
}

TEST(SupGrowth, SmallHorizonVanishes) {
    const auto rows = empirical_sup_growth(3, {0.01, 1.0}, 200, 0.01, 8, 0);
    EXPECT_LT(rows[0].mean, 0.05);
    EXPECT_GT(rows[1].mean, rows[0].mean);
    EXPECT_LE(rows[1].ci_lo, rows[1].mean);
    EXPECT_GE(rows[1].ci_hi, rows[1].mean);
}

TEST(SupGrowth, D3WithinFactorTwoOfModel) {
    const std::vector<double> T{10, 50, 250, 1250, 5000};
    const auto rows = empirical_sup_growth(3, T, 200, 0.1, 2024, 0);
    for (const auto& r : rows) {
        const double ratio = r.mean / (1.2 * growth_model(3, r.T));
        EXPECT_GT(ratio, 0.5) << r.T;
        EXPECT_LT(ratio, 2.0) << r.T;
    }
}

TEST(SupGrowth, D5TracksOrnsteinUhlenbeck) {
    const std::vector<double> T{10, 100, 1000, 5000};
    const auto y = empirical_sup_growth(5, T, 200, 0.1, 77, 0);
    const auto ou = empirical_sup_growth(5, T, 200, 0.1, 78, 0, SupProcess::OU);
    std::vector<double> r;
    for (std::size_t i = 0; i < T.size(); ++i) r.push_back(y[i].mean / ou[i].mean);
    EXPECT_LT(*std::max_element(r.begin(), r.end()) / *std::min_element(r.begin(), r.end()), 2.0);
}

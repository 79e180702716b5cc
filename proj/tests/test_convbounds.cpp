#include "stochwave/convbounds.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

using namespace stochwave;

namespace {

const WaveProfile& profile(std::size_t n) {
    static const WaveProfile p64 = build_nagumo_profile(0.25, Grid1D(-16.0, 16.0, 64), 1e-4);
    static const WaveProfile p128 = build_nagumo_profile(0.25, Grid1D(-40.0, 40.0, 128));
    return n == 64 ? p64 : p128;
}

// Simpson's rule for int_0^t e^{As} Q e^{A^T s} ds.
Eigen::MatrixXd simpson_covariance(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q, double t, int panels) {
    const double h = t / panels;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(A.rows(), A.cols());
    for (int i = 0; i <= panels; ++i) {
        const Eigen::MatrixXd E = (A * (h * i)).exp();
        const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        S += w * E * Q * E.transpose();
    }
    return S * (h / 3.0);
}

} // namespace

TEST(Heat, ZeroTimeAndMass) {
    const TransverseGrid gy(3, 40.0, 64);
    const auto w = gaussian_bump(gy, 1.0);
    const auto w0 = apply_heat(w, 0.0);
    EXPECT_EQ(w0.values, w.values);
    const auto w1 = apply_heat(w, 2.0);
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        m0 += w[j];
        m1 += w1[j];
    }
    EXPECT_NEAR(m1, m0, 1e-10 * m0);
    EXPECT_THROW(apply_heat(w, -1.0), std::invalid_argument);
}

TEST(Heat, SemigroupProperty) {
    const TransverseGrid gy(2, 30.0, 128);
    const auto w = gaussian_bump(gy, 0.7);
    const auto a = apply_heat(apply_heat(w, 0.4), 1.1);
    const auto b = apply_heat(w, 1.5);
    for (std::size_t j = 0; j < w.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-13);
}

TEST(Heat, GaussianClosedForm) {
    // exp(-y^2/2) becomes (1+2t)^{-1/2} exp(-y^2/(2(1+2t))) in one dimension
    const TransverseGrid gy(2, 80.0, 512);
    const auto w = apply_heat(gaussian_bump(gy, 1.0), 3.0);
    for (std::size_t j = 0; j < gy.points(); j += 7) {
        const double y = gy.y(j);
        EXPECT_NEAR(w[j], std::exp(-y * y / 14.0) / std::sqrt(7.0), 1e-12);
    }
}

TEST(Heat, DecayExponentTwoDimensions) {
    const TransverseGrid gy(3, 200.0, 512);
    const auto w = gaussian_bump(gy, 1.0);
    std::vector<double> times;
    for (int i = 0; i <= 12; ++i) times.push_back(std::pow(100.0, i / 12.0));
    const auto f = heat_decay_fit(w, times);
    EXPECT_NEAR(f.exponent, -0.5, 0.05);
    EXPECT_GT(f.r2, 0.99);
}

TEST(ExampleA6, ClosedFormsMatchQuadrature) {
    for (int d : {2, 3, 4}) {
        for (double t : {0.1, 1.0, 10.0, 1000.0}) {
            EXPECT_NEAR(example_a6_closed(d, t), example_a6_quadrature(d, t), 1e-8) << d << " " << t;
        }
    }
    EXPECT_THROW(example_a6_closed(5, 1.0), std::invalid_argument);
}

TEST(ExampleA6, BoundedByLimits) {
    const double pi = std::numbers::pi;
    for (double t = 0.0; t < 1e7; t = 2.0 * t + 0.01) {
        EXPECT_LE(example_a6_closed(3, t), pi);
        EXPECT_LE(example_a6_closed(2, t), pi * std::numbers::sqrt2);
        EXPECT_EQ(example_a6_closed(2, t), example_a6_closed(4, t));
    }
    EXPECT_NEAR(example_a6_closed(3, 1e12), pi, 1e-5);
    EXPECT_NEAR(example_a6_closed(2, 1e16), pi * std::numbers::sqrt2, 1e-3);
}

TEST(HistoryDecay, ExponentConstraints) {
    EXPECT_NO_THROW(check_history_exponents(0.25, 0.75, 0.0));
    EXPECT_THROW(check_history_exponents(0.5, 0.5, 0.1), std::invalid_argument);
    EXPECT_THROW(check_history_exponents(2.0, 0.5, 0.6), std::invalid_argument);
    EXPECT_THROW(check_history_exponents(2.0, 1.0, 2.0), std::invalid_argument);
    EXPECT_NO_THROW(check_history_exponents(2.0, 1.0, 0.99));
    EXPECT_THROW(check_history_exponents(1.0, 0.5, 0.5), std::invalid_argument);
    EXPECT_THROW(check_history_exponents(-0.1, 1.0, 0.0), std::invalid_argument);
}

TEST(HistoryDecay, RandomAdmissibleTriplesStable) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.05, 3.0), V(0.0, 1.0);
    std::vector<double> z;
    for (int i = 0; i <= 12; ++i) z.push_back(std::pow(10.0, -1.0 + 0.5 * i));
    int checked = 0;
    while (checked < 30) {
        const double mu = U(rng), nu = U(rng);
        if (std::abs(mu - 1.0) < 0.05 || std::abs(nu - 1.0) < 0.05) continue;
        const double cap = std::min({mu, nu, mu + nu - 1.0});
        if (cap < 0.0) continue;
        const double lambda = cap * V(rng);
        const auto r = verify_lemma_a5(mu, nu, lambda, z);
        EXPECT_TRUE(r.stable) << mu << " " << nu << " " << lambda << " C=" << r.C;
        EXPECT_TRUE(std::isfinite(r.C));
        ++checked;
    }
}

TEST(HistoryDecay, CriticalPairMatchesExample) {
    std::vector<double> z{1, 10, 100, 1e3, 1e4, 1e5, 1e6};
    const auto r = verify_lemma_a5(0.25, 0.75, 0.0, z);
    EXPECT_TRUE(r.stable);
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(r.integral[i], example_a6_closed(2, z[i]), 1e-8);
}

TEST(HistoryDecay, BeyondCriticalGrows) {
    // mu + nu < 1 gives growth like z^{1-mu-nu}: the ratio at lambda = 0 keeps rising
    std::vector<double> z{1, 10, 100, 1e3, 1e4};
    std::vector<double> r;
    for (double x : z) r.push_back(weighted_kernel_integral(0.25, 0.5, x));
    for (std::size_t i = 1; i < r.size(); ++i) EXPECT_GT(r[i], 1.5 * r[i - 1]);
}

TEST(RadialQuadrature, GaussianIntegral) {
    for (int d : {2, 3, 4}) {
        const int m = d - 1;
        const RadialQuadrature q(d, 1e-4, 12.0, 400);
        double s = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) s += q.w[i] * std::exp(-q.r[i] * q.r[i]);
        const double exact = std::pow(std::numbers::pi, 0.5 * m) / std::pow(2.0 * std::numbers::pi, m);
        EXPECT_NEAR(s / exact, 1.0, 1e-4) << d;
    }
    EXPECT_THROW(RadialQuadrature(1, 1e-3, 1.0, 10), std::invalid_argument);
    EXPECT_THROW(RadialQuadrature(2, 1.0, 1.0, 10), std::invalid_argument);
}

TEST(HistoryIntegral, MatchesDirectTrapezoid) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 2.0);
    const double dt = 0.3, mu = 0.4;
    std::vector<double> h(700);
    for (auto& v : h) v = U(rng);
    const auto J = history_integral_series(h, dt, mu);
    std::vector<double> t(h.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = dt * static_cast<double>(i);
    for (std::size_t n : {1ul, 2ul, 57ul, 699ul}) {
        std::vector<double> tt(t.begin(), t.begin() + static_cast<long>(n) + 1), hh(h.begin(), h.begin() + static_cast<long>(n) + 1);
        const double ref = weighted_history_integral(tt, hh, mu);
        EXPECT_NEAR(J[n], ref, 1e-10 * std::max(1.0, std::abs(ref))) << n;
    }
    EXPECT_EQ(J[0], 0.0);
}

TEST(EB, NoiseRootReproducesCovariance) {
    BSpec b;
    b.nodes = 24;
    const double dt = 0.25;
    const EBSimulator sim(3, b, dt);
    const auto& q = sim.quadrature();
    const Eigen::MatrixXd S = sim.noise_root() * sim.noise_root().transpose();
    for (std::size_t i = 0; i < q.size(); i += 5) {
        for (std::size_t j = 0; j < q.size(); j += 3) {
            const double li = q.r[i] * q.r[i], lj = q.r[j] * q.r[j];
            const double bi = std::exp(-0.5 * li), bj = std::exp(-0.5 * lj);
            const double ref = bi * bj * (1.0 - std::exp(-(li + lj) * dt)) / (li + lj);
            EXPECT_NEAR(S(i, j), ref, 1e-9 * dt);
        }
    }
}

TEST(EB, ZeroAmplitudeGivesZero) {
    BSpec b;
    b.amplitude = 0.0;
    const EBSimulator sim(2, b, 0.25);
    RngStream rng(1, 0, 0);
    const auto p = sim.simulate(20.0, rng);
    for (std::size_t i = 0; i < p.t.size(); ++i) {
        EXPECT_EQ(p.norm2[i], 0.0);
        EXPECT_EQ(p.J[i], 0.0);
    }
}

TEST(EB, MeanNormMatchesClosedForm) {
    BSpec b;
    b.nodes = 32;
    const double dt = 0.25, T = 6.0;
    const EBSimulator sim(3, b, dt);
    const auto& q = sim.quadrature();
    double ref = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double l = q.r[i] * q.r[i];
        ref += q.w[i] * std::exp(-l) * (1.0 - std::exp(-2.0 * l * T)) / (2.0 * l);
    }
    EXPECT_NEAR(sim.expected_norm2(T), ref, 1e-12 * ref);
    const int M = 3000;
    std::vector<double> x(M);
    for (int m = 0; m < M; ++m) {
        RngStream rng(9, static_cast<std::uint64_t>(m), 1);
        x[static_cast<std::size_t>(m)] = sim.simulate(T, rng).norm2.back();
    }
    EXPECT_NEAR(mean(x), ref, 4.0 * standard_error(x));
}

TEST(EB, GrowthRatiosFinite) {
    const auto g = simulate_EB_growth(3, {10, 100}, 40, BSpec{}, 0.5, 2, 1);
    ASSERT_EQ(g.norm.size(), 2u);
    ASSERT_EQ(g.J.size(), 2u);
    for (const auto& v : {g.norm, g.J}) {
        for (const auto& r : v) {
            EXPECT_GT(r.E_sup, 0.0);
            EXPECT_LE(r.ci_lo, r.E_sup);
            EXPECT_GE(r.ci_hi, r.E_sup);
            EXPECT_TRUE(std::isfinite(r.ratio));
        }
        EXPECT_GE(v[1].E_sup, v[0].E_sup);
    }
    EXPECT_LT(std::max(g.norm[0].ratio, g.norm[1].ratio) / std::min(g.norm[0].ratio, g.norm[1].ratio), 2.0);
}

TEST(EB, DeterministicAcrossWorkers) {
    const auto a = simulate_EB_growth(2, {5, 10}, 8, BSpec{}, 0.5, 4, 1);
    const auto b = simulate_EB_growth(2, {5, 10}, 8, BSpec{}, 0.5, 4, 3);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(a.J[i].E_sup, b.J[i].E_sup);
        EXPECT_EQ(a.norm[i].E_sup, b.norm[i].E_sup);
    }
}

TEST(ZX, VanLoanMatchesSimpson) {
    const auto& p = profile(64);
    const double dt = 0.4;
    const ZXSimulator sim(p, XSpec{}, dt);
    const auto n = static_cast<Eigen::Index>(p.grid.n);
    const double h = p.grid.dx();
    const Eigen::MatrixXd A = ltw_dense_matrix(p);
    const Eigen::MatrixXd X = (0.5 * fourier_d2_matrix(p.grid)).exp();
    const Eigen::MatrixXd PX = sim.projection() * X;
    const Eigen::MatrixXd ref = simpson_covariance(A, PX * PX.transpose() / h, dt, 400);
    EXPECT_LT((sim.step_covariance() - ref).norm(), 1e-8 * ref.norm());
    EXPECT_LT((sim.semigroup_x() - (A * dt).exp()).norm(), 1e-10 * n);
}

TEST(ZX, ZeroMultiplierGivesZero) {
    XSpec x;
    x.amplitude = 0.0;
    const ZXSimulator sim(profile(64), x, 0.25);
    RngStream rng(1, 0, 0);
    for (double v : sim.simulate(10.0, rng)) EXPECT_EQ(v, 0.0);
}

TEST(ZX, StaysInRangeOfProjection) {
    const auto& p = profile(64);
    const ZXSimulator sim(p, XSpec{}, 0.25);
    // P_perp applied twice changes nothing, and Phase(P_perp w) vanishes
    const Eigen::MatrixXd& P = sim.projection();
    EXPECT_LT((P * P - P).norm(), 1e-10);
    Eigen::Map<const Eigen::VectorXd> psi(p.psi_tw.data(), static_cast<Eigen::Index>(p.grid.n));
    EXPECT_LT((psi.transpose() * P).norm() * p.grid.dx(), 1e-10);
}

TEST(ZX, MeanNormMatchesCovariance) {
    const auto& p = profile(64);
    const double dt = 0.25, T = 5.0;
    const ZXSimulator sim(p, XSpec{}, dt);
    // covariance at time T from the eigen-decomposition of the generator
    const double h = p.grid.dx();
    const Eigen::MatrixXd A = ltw_dense_matrix(p);
    const Eigen::MatrixXd X = (0.5 * fourier_d2_matrix(p.grid)).exp();
    const Eigen::MatrixXd PX = sim.projection() * X;
    const Eigen::MatrixXd Q = PX * PX.transpose() / h;
    Eigen::EigenSolver<Eigen::MatrixXd> es(A);
    const Eigen::MatrixXcd V = es.eigenvectors(), Vi = V.inverse();
    const Eigen::VectorXcd lam = es.eigenvalues();
    Eigen::MatrixXcd Qt = Vi * Q.cast<std::complex<double>>() * Vi.transpose();
    for (Eigen::Index i = 0; i < Qt.rows(); ++i)
        for (Eigen::Index j = 0; j < Qt.cols(); ++j) {
            const std::complex<double> l = lam[i] + lam[j];
            Qt(i, j) *= std::abs(l) < 1e-9 ? std::complex<double>(T) : (std::exp(l * T) - 1.0) / l;
        }
    const Eigen::MatrixXd S = (V * Qt * V.transpose()).real();
    const Eigen::MatrixXd& P = sim.projection();
    const double ref = (sim.gram() * P * S * P.transpose()).trace();
    const int M = 2000;
    std::vector<double> x(M);
    for (int m = 0; m < M; ++m) {
        RngStream rng(4, static_cast<std::uint64_t>(m), 2);
        x[static_cast<std::size_t>(m)] = sim.simulate(T, rng).back();
    }
    EXPECT_NEAR(mean(x), ref, 4.0 * standard_error(x));
}

TEST(ZX, TransverseModesAddAndDecay) {
    const auto& p = profile(64);
    XSpec a, b;
    b.transverse = {0.0, 0.5, 2.0};
    const double dt = 0.25, T = 8.0;
    const ZXSimulator sa(p, a, dt), sb(p, b, dt);
    const int M = 300;
    std::vector<double> xa, xb;
    for (int m = 0; m < M; ++m) {
        RngStream r1(6, static_cast<std::uint64_t>(m), 0), r2(6, static_cast<std::uint64_t>(m), 1);
        xa.push_back(sa.simulate(T, r1).back());
        xb.push_back(sb.simulate(T, r2).back());
    }
    EXPECT_GT(mean(xb), mean(xa));
    EXPECT_LT(mean(xb), 3.0 * mean(xa));
}

TEST(ZX, SemigroupDecayPrecheck) {
    const auto& p = profile(128);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> N;
    std::vector<Eigen::VectorXd> ws;
    for (int k = 0; k < 5; ++k) {
        Eigen::VectorXd w(static_cast<Eigen::Index>(p.grid.n));
        for (std::size_t i = 0; i < p.grid.n; ++i) {
            const double x = p.grid.x(i);
            w[static_cast<Eigen::Index>(i)] = N(rng) * std::exp(-0.05 * x * x);
        }
        ws.push_back(w);
    }
    const auto r = semigroup_decay_check(p, ws, 20.0, 0.25);
    EXPECT_GT(r.gap, 0.0);
    EXPECT_TRUE(std::isfinite(r.M));
    // the weighted ratio is bounded by its early-time maximum
    double early = 0.0, late = 0.0;
    for (std::size_t i = 0; i < r.t.size(); ++i) (r.t[i] <= 10.0 ? early : late) = std::max(r.t[i] <= 10.0 ? early : late, r.ratio[i]);
    EXPECT_LE(late, early * 1.0001);
}

TEST(ZX, GrowthRowsShape) {
    const auto rows = simulate_ZX_growth(profile(64), {5, 20}, 20, XSpec{}, 0.25, 3, 1);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_GE(rows[1].E_sup, rows[0].E_sup);
    EXPECT_NEAR(rows[0].predicted_rate, std::log(5.0), 1e-14);
}

TEST(JG, ZeroForcingGivesZero) {
    GSpec g;
    g.amplitude = 0.0;
    const auto r = verify_deterministic_conv(2, 0.25, g, 50.0);
    EXPECT_EQ(r.sup_J, 0.0);
    EXPECT_EQ(r.theta_star, 0.0);
}

TEST(JG, SingleModeExactStep) {
    // constant forcing: a(t) = (1 - e^{-l t}) / l exactly under the exponential rule
    for (double l : {1e-6, 0.3, 4.0}) {
        const double dt = 0.2, E = std::exp(-l * dt), P = -std::expm1(-l * dt) / l;
        double a = 0.0;
        for (int s = 0; s < 50; ++s) a = E * a + P;
        EXPECT_NEAR(a, -std::expm1(-l * 10.0) / l, 1e-12 * (1.0 + 1.0 / l));
    }
}

TEST(JG, CriticalScaleStableUnderDoubling) {
    GSpec g;
    g.width = 0.5;
    g.r_max = 20.0;
    const auto r = verify_deterministic_conv(2, 0.25, g, 800.0, 0.05);
    const auto sup_at = [&](double T) {
        const auto n = static_cast<std::size_t>(std::llround(T / 0.05));
        return *std::max_element(r.J.begin(), r.J.begin() + static_cast<long>(n) + 1);
    };
    EXPECT_NEAR(sup_at(800.0) / sup_at(100.0), 1.0, 0.05);
    EXPECT_FALSE(r.supercritical);
    EXPECT_GT(r.K_dc, 0.0);
}

TEST(JG, UnitBumpSupSettlesAtLongHorizons) {
    const auto r = verify_deterministic_conv(2, 0.25, GSpec{}, 3200.0, 0.1);
    const auto sup_at = [&](double T) {
        const auto n = static_cast<std::size_t>(std::llround(T / 0.1));
        return *std::max_element(r.J.begin(), r.J.begin() + static_cast<long>(n) + 1);
    };
    EXPECT_NEAR(sup_at(800.0) / sup_at(400.0), 1.0, 0.05);
    EXPECT_NEAR(sup_at(3200.0) / sup_at(1600.0), 1.0, 0.01);
}

TEST(JG, ThetaStarMatchesExampleA6) {
    // for d = 2 and nu = 3/4 the time factor of theta* is the example closed form
    GSpec g;
    const auto r = verify_deterministic_conv(2, 0.25, g, 400.0, 0.01);
    const double pre = std::sqrt(2.0 * std::numbers::pi);
    const RadialQuadrature q(2, g.r_min, g.r_max, g.nodes);
    double hk2 = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double l = q.r[i] * q.r[i];
        hk2 += q.w[i] * (1.0 + l) * 2.0 * std::numbers::pi * std::exp(-l);
    }
    // ||bump||_{H^1}^2 = sqrt(pi) (1 + 1/2) on the real line
    EXPECT_NEAR(hk2, 1.5 * std::sqrt(std::numbers::pi), 1e-4);
    EXPECT_NEAR(r.theta_star / (pre + std::sqrt(hk2)), example_a6_closed(2, 400.0), 2e-3);
}

TEST(JG, SupercriticalGrows) {
    GSpec g;
    g.decay = 0.0;
    std::vector<double> x, y;
    for (double T : {100.0, 200.0, 400.0, 800.0}) {
        const auto r = verify_deterministic_conv(2, 0.5, g, T, 0.1);
        EXPECT_TRUE(r.supercritical);
        x.push_back(std::log(T));
        y.push_back(std::log(r.sup_J));
    }
    const auto f = ols(x, y);
    EXPECT_GT(f.slope, 0.5);
    EXPECT_LT(f.p_value, 0.01);
}

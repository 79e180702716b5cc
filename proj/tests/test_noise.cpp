#include "stochwave/noise.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace stochwave;

namespace {

const WaveProfile& small_profile() {
    static const WaveProfile p = build_nagumo_profile(0.25, Grid1D(-16.0, 16.0, 64), 1e-4);
    return p;
}

NoiseSpec spec_of(NoiseFamily f, std::size_t modes = 0) {
    NoiseSpec s;
    s.family = f;
    // Family 2 Hermite orders are one-dimensional, so the default 27 modes
    // would need a much finer y lattice.
    s.modes = modes ? modes : (f == NoiseFamily::TransverseLocalised ? 8 : 0);
    return s;
}

FieldState front_field(const WaveProfile& p, const TransverseGrid& gy) {
    return FieldState::broadcast(p.grid, gy, p.phi0);
}

struct Moments {
    double mean = 0.0, var = 0.0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    for (double x : v) m.mean += x;
    m.mean /= static_cast<double>(v.size());
    for (double x : v) m.var += (x - m.mean) * (x - m.mean);
    m.var /= static_cast<double>(v.size() - 1);
    return m;
}

} // namespace

TEST(NoiseSpec, Validation) {
    NoiseSpec s;
    EXPECT_NO_THROW(s.validate(0.0, 1.0));
    s.gtilde = Polynomial{{1.0}};
    EXPECT_THROW(s.validate(0.0, 1.0), std::invalid_argument);
    NoiseSpec r = spec_of(NoiseFamily::TraceClass);
    r.rho = 1.0;
    EXPECT_THROW(r.validate(0.0, 1.0), std::invalid_argument);
    EXPECT_EQ(spec_of(NoiseFamily::TraceClass).mode_count(), 27u); // 0.5^27 < 1e-8 <= 0.5^26
}

TEST(Hermite, Orthonormal) {
    const int n = 6;
    const double h = 1e-3;
    std::vector<double> buf(n), gram(n * n, 0.0);
    for (double s = -12.0; s < 12.0; s += h) {
        hermite_functions(s, n, buf.data());
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) gram[a * n + b] += h * buf[a] * buf[b];
    }
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) EXPECT_NEAR(gram[a * n + b], a == b ? 1.0 : 0.0, 1e-10);
}

TEST(Hermite, GradedIndices) {
    const auto mi = graded_multi_indices(2, 6);
    const std::vector<std::vector<int>> want{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    EXPECT_EQ(mi, want);
    EXPECT_EQ(graded_multi_indices(3, 10).size(), 10u);
}

TEST(Noise, GVanishesAtEndStates) {
    const auto& p = small_profile();
    TransverseGrid gy(2, 16.0, 32);
    NoiseSampler ns(spec_of(NoiseFamily::WeightedTranslationInvariant), p.grid, gy);
    RngStream rng(1, 0);
    FieldState dW, out;
    ns.sample_raw(0.1, rng, dW);
    ns.apply_g(FieldState(p.grid, gy, 0.0), dW, out);
    EXPECT_EQ(max_abs(out.values), 0.0);
    ns.apply_g(FieldState(p.grid, gy, 1.0), dW, out);
    EXPECT_EQ(max_abs(out.values), 0.0);
    EXPECT_EQ(hs_norm_estimate(ns, FieldState(p.grid, gy, 0.0), 1.0), 0.0);
    EXPECT_EQ(l1_pairing_estimate(ns, FieldState(p.grid, gy, 1.0), p), 0.0);
}

TEST(Noise, TranslationInvariantCovariance) {
    Grid1D gx(-8.0, 8.0, 32);
    TransverseGrid gy(2, 8.0, 16);
    NoiseSpec s = spec_of(NoiseFamily::WeightedTranslationInvariant);
    s.weighted = false;
    NoiseSampler ns(s, gx, gy);
    RngStream rng(3, 0);
    const double dt = 0.2;
    const int samples = 300;
    std::vector<double> acc(4, 0.0);
    FieldState dW;
    for (int n = 0; n < samples; ++n) {
        ns.sample_raw(dt, rng, dW);
        for (std::size_t j = 0; j < gy.points(); ++j)
            for (std::size_t i = 0; i < gx.n; ++i)
                for (std::size_t lag = 0; lag < acc.size(); ++lag) acc[lag] += dW.at(i, j) * dW.at((i + lag) % gx.n, j);
    }
    for (std::size_t lag = 0; lag < acc.size(); ++lag) {
        const double est = acc[lag] / (samples * dW.size() * dt);
        const double r = static_cast<double>(lag) * gx.dx();
        EXPECT_NEAR(est, std::exp(-r * r), 0.03) << lag;
    }
}

TEST(Noise, RankOneIsFullyCorrelated) {
    const auto& p = small_profile();
    TransverseGrid gy(2, 16.0, 32);
    NoiseSampler ns(spec_of(NoiseFamily::TraceClass, 1), p.grid, gy);
    RngStream rng(5, 0);
    FieldState dW;
    ns.sample_raw(0.1, rng, dW);
    const auto& mu = ns.mode_table();
    const std::size_t ref = p.grid.n / 2 + p.grid.n * (gy.n / 2);
    const double c = dW.values[ref] / mu[ref];
    for (std::size_t z = 0; z < dW.size(); ++z) EXPECT_NEAR(dW.values[z], c * mu[z], 1e-14);
}

TEST(Noise, IncrementsIndependentAcrossSteps) {
    const auto& p = small_profile();
    TransverseGrid gy(2, 16.0, 32);
    NoiseSampler ns(spec_of(NoiseFamily::TransverseLocalised), p.grid, gy);
    RngStream rng(7, 0);
    const std::size_t probe = p.grid.n / 2 + p.grid.n * (gy.n / 2);
    std::vector<double> a;
    FieldState dW;
    for (int n = 0; n < 2001; ++n) {
        ns.sample_raw(0.1, rng, dW);
        a.push_back(dW.values[probe]);
    }
    double c01 = 0.0, c00 = 0.0;
    for (std::size_t n = 0; n + 1 < a.size(); ++n) {
        c01 += a[n] * a[n + 1];
        c00 += a[n] * a[n];
    }
    EXPECT_LT(std::abs(c01 / c00), 4.0 / std::sqrt(2000.0));
}

TEST(Noise, IncrementScalesWithSqrtDt) {
    const auto& p = small_profile();
    TransverseGrid gy(2, 16.0, 32);
    for (auto fam : {NoiseFamily::WeightedTranslationInvariant, NoiseFamily::TransverseLocalised, NoiseFamily::TraceClass}) {
        NoiseSampler ns(spec_of(fam), p.grid, gy);
        FieldState a, b;
        RngStream r1(9, 2), r2(9, 2);
        ns.sample_raw(0.01, r1, a);
        ns.sample_raw(0.64, r2, b);
        for (std::size_t z = 0; z < a.size(); ++z) EXPECT_NEAR(b.values[z], 8.0 * a.values[z], 1e-12) << to_string(fam);
    }
}

TEST(Noise, VarianceLinearInDt) {
    const auto& p = small_profile();
    TransverseGrid gy(2, 16.0, 32);
    NoiseSampler ns(spec_of(NoiseFamily::TraceClass), p.grid, gy);
    const std::size_t probe = p.grid.n / 2 + p.grid.n * (gy.n / 2);
    std::vector<double> lv, ldt;
    for (double dt : {0.01, 0.04, 0.16}) {
        RngStream rng(11, static_cast<std::uint64_t>(dt * 100));
        std::vector<double> a;
        FieldState dW;
        for (int n = 0; n < 4000; ++n) {
            ns.sample_raw(dt, rng, dW);
            a.push_back(dW.values[probe]);
        }
        lv.push_back(std::log(moments(a).var));
        ldt.push_back(std::log(dt));
    }
    const double slope = (lv.back() - lv.front()) / (ldt.back() - ldt.front());
    EXPECT_NEAR(slope, 1.0, 0.05);
}

TEST(Noise, ShiftIsCyclicRoll) {
    const auto& p = small_profile();
    TransverseGrid gy(2, 16.0, 32);
    for (auto fam : {NoiseFamily::TransverseLocalised, NoiseFamily::TraceClass}) {
        NoiseSampler ns(spec_of(fam), p.grid, gy);
        const std::size_t m = 3;
        FieldState a, b;
        RngStream r1(13, 0), r2(13, 0);
        ns.sample_raw(0.1, r1, a);
        ns.sample_raw(0.1, r2, b, static_cast<double>(m) * p.grid.dx());
        for (std::size_t j = 0; j < gy.points(); ++j)
            for (std::size_t i = 0; i < p.grid.n; ++i)
                EXPECT_NEAR(b.at(i, j), a.at((i + m) % p.grid.n, j), 1e-12) << to_string(fam);
    }
}

TEST(Noise, ResolutionGuard) {
    const auto& p = small_profile();
    TransverseGrid gy(2, 16.0, 32);
    NoiseSpec s = spec_of(NoiseFamily::TraceClass);
    s.width_y = 0.1;
    EXPECT_THROW(NoiseSampler(s, p.grid, gy), std::invalid_argument);
    s.width_y = 3.0;
    EXPECT_THROW(NoiseSampler(s, p.grid, gy), std::invalid_argument);
}

TEST(HsNorm, RankOneMatchesDirectNorm) {
    const auto& p = small_profile();
    TransverseGrid gy(2, 16.0, 32);
    NoiseSpec s = spec_of(NoiseFamily::TraceClass, 1);
    NoiseSampler ns(s, p.grid, gy);
    const FieldState u = front_field(p, gy);
    FieldState h(p.grid, gy);
    for (std::size_t z = 0; z < h.size(); ++z) h.values[z] = s.gtilde(u.values[z]) * ns.mode_table()[z];
    for (double k : {0.0, 1.0, 2.0}) EXPECT_NEAR(hs_norm_estimate(ns, u, k), sobolev_norm2(h, k), 1e-12 * sobolev_norm2(h, k));
}

TEST(HsNorm, TruncationConvergesAndMonotone) {
    const auto& p = small_profile();
    TransverseGrid gy(2, 16.0, 32);
    const FieldState u = front_field(p, gy);
    NoiseSpec s = spec_of(NoiseFamily::TraceClass, 20);
    NoiseSampler ns(s, p.grid, gy);
    const double a = hs_norm_estimate(ns, u, 1.0, 10), b = hs_norm_estimate(ns, u, 1.0, 20);
    EXPECT_LT(std::abs(b - a) / b, 0.01);
    EXPECT_GE(b, a);
    double prev = 0.0;
    for (double k : {0.0, 0.5, 1.0, 2.0}) {
        const double v = hs_norm_estimate(ns, u, k);
        EXPECT_GE(v, prev);
        prev = v;
    }
}

// E ||g dW||^2_{H^k} / dt against the mode sum for every family.
TEST(HsNorm, MatchesMonteCarlo) {
    const auto& p = small_profile();
    TransverseGrid gy(2, 16.0, 32);
    const FieldState u = front_field(p, gy);
    for (auto fam : {NoiseFamily::WeightedTranslationInvariant, NoiseFamily::TransverseLocalised, NoiseFamily::TraceClass}) {
        NoiseSampler ns(spec_of(fam), p.grid, gy);
        const double want = hs_norm_estimate(ns, u, 1.0);
        RngStream rng(17, static_cast<std::uint64_t>(fam));
        std::vector<double> v;
        FieldState dW, g;
        const double dt = 0.1;
        for (int n = 0; n < 1500; ++n) {
            ns.sample_raw(dt, rng, dW);
            ns.apply_g(u, dW, g);
            v.push_back(sobolev_norm2(g, 1.0) / dt);
        }
        const auto m = moments(v);
        EXPECT_NEAR(m.mean, want, 5.0 * std::sqrt(m.var / v.size())) << to_string(fam);
    }
}

TEST(PsiTrace, MatchesMonteCarlo) {
    const auto& p = small_profile();
    TransverseGrid gy(2, 16.0, 32);
    const FieldState u = front_field(p, gy);
    const std::size_t row = gy.n / 2;
    for (auto fam : {NoiseFamily::WeightedTranslationInvariant, NoiseFamily::TransverseLocalised, NoiseFamily::TraceClass}) {
        for (double gamma : {0.0, 0.7}) {
            if (fam == NoiseFamily::WeightedTranslationInvariant && gamma != 0.0) continue;
            NoiseSampler ns(spec_of(fam), p.grid, gy);
            const double want = ns.psi_trace(u, p, gamma)[row];
            RngStream rng(19, static_cast<std::uint64_t>(fam));
            std::vector<double> v;
            const double dt = 0.1;
            for (int n = 0; n < 3000; ++n) {
                const auto inc = ns.sample(u, p, dt, rng, gamma);
                v.push_back(inc.psi_proj[row] * inc.psi_proj[row] / dt);
            }
            const auto m = moments(v);
            EXPECT_NEAR(m.mean, want, 5.0 * std::sqrt(m.var / v.size())) << to_string(fam) << " " << gamma;
        }
    }
}

TEST(L1Pairing, RankOneDirect) {
    const auto& p = small_profile();
    TransverseGrid gy(2, 16.0, 32);
    NoiseSpec s = spec_of(NoiseFamily::TraceClass, 1);
    NoiseSampler ns(s, p.grid, gy);
    const FieldState u = front_field(p, gy);
    double l1 = 0.0;
    for (std::size_t j = 0; j < gy.points(); ++j) {
        double a = 0.0;
        for (std::size_t i = 0; i < p.grid.n; ++i)
            a += s.gtilde(u.at(i, j)) * ns.mode_table()[i + p.grid.n * j] * p.psi_tw[i] * p.grid.dx();
        l1 += std::abs(a) * gy.dy();
    }
    EXPECT_NEAR(l1_pairing_estimate(ns, u, p), l1 * l1, 1e-14);
}

TEST(L1Pairing, TranslationInvariantRefines) {
    TransverseGrid gy(2, 16.0, 32);
    std::vector<double> vals;
    for (std::size_t n : {128u, 256u}) {
        const WaveProfile p = build_nagumo_profile(0.25, Grid1D(-40.0, 40.0, n));
        NoiseSampler ns(spec_of(NoiseFamily::WeightedTranslationInvariant), p.grid, gy);
        vals.push_back(l1_pairing_estimate(ns, front_field(p, gy), p));
    }
    EXPECT_GT(vals[0], 0.0);
    EXPECT_LT(std::abs(vals[1] - vals[0]) / vals[1], 0.02);
}

// T_g g(u)[xi] = g(T_g u)[T_g xi] on a lattice translation in x.
TEST(Noise, TranslationCommutesWithG) {
    const auto& p = small_profile();
    TransverseGrid gy(2, 16.0, 32);
    NoiseSampler ns(spec_of(NoiseFamily::WeightedTranslationInvariant), p.grid, gy);
    RngStream rng(23, 0);
    FieldState dW, g;
    ns.sample_raw(0.1, rng, dW);
    FieldState u = front_field(p, gy);
    for (std::size_t z = 0; z < u.size(); ++z) u.values[z] += 0.01 * dW.values[z];
    ns.apply_g(u, dW, g);
    auto roll = [&](const FieldState& a, std::size_t m) {
        FieldState b = a;
        for (std::size_t j = 0; j < a.rows(); ++j)
            for (std::size_t i = 0; i < a.nx(); ++i) b.at((i + m) % a.nx(), j) = a.at(i, j);
        return b;
    };
    FieldState gs;
    ns.apply_g(roll(u, 5), roll(dW, 5), gs);
    EXPECT_EQ(gs.values, roll(g, 5).values);
}

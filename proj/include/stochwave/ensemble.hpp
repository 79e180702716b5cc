#pragma once

#include "stochwave/montecarlo.hpp"
#include "stochwave/spde.hpp"
#include "stochwave/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace stochwave {

// Band-limited phase with max |theta| = amp.
inline TransverseField random_smooth_phase(const TransverseGrid& gy, double amp, std::uint64_t seed, int modes = 3) {
    RngStream rng(seed, 0);
    TransverseField th(gy);
    const double w = 2.0 * std::numbers::pi / gy.L;
    std::vector<double> a, ph;
    for (int m = 0; m < modes * gy.axes(); ++m) {
        a.push_back(rng.normal());
        ph.push_back(2.0 * std::numbers::pi * rng.uniform());
    }
    std::vector<std::size_t> idx(static_cast<std::size_t>(gy.axes()));
    for (std::size_t j = 0; j < gy.points(); ++j) {
        gy.unravel(j, idx.data());
        double s = 0.0;
        for (int ax = 0; ax < gy.axes(); ++ax)
            for (int m = 0; m < modes; ++m)
                s += a[static_cast<std::size_t>(ax * modes + m)] *
                     std::cos(w * (m + 1) * gy.y(idx[static_cast<std::size_t>(ax)]) + ph[static_cast<std::size_t>(ax * modes + m)]);
        th[j] = s;
    }
    const double mx = max_abs(th.values);
    if (mx > 0.0)
        for (double& t : th.values) t *= amp / mx;
    return th;
}

// ------------------------------------------------------------ wave audit

struct WaveAuditRow {
    double a = 0.0;
    double c0 = 0.0;
    double ode_residual = 0.0;
    double normalisation = 0.0; // <Phi0', psi_tw>
    double kernel_residual = 0.0; // ||L_tw Phi0'||_inf
    double gap = 0.0;
    bool pass = false;
};

inline WaveAuditRow wave_audit(double a, const Grid1D& grid) {
    const WaveProfile p = build_nagumo_profile(a, grid);
    WaveAuditRow r;
    r.a = a;
    r.c0 = p.c0;
    r.ode_residual = p.ode_residual;
    r.normalisation = p.inner(p.dphi0.data(), p.psi_tw.data());
    const TransverseGrid gy(2, 1.0, 2);
    r.kernel_residual = max_abs(apply_Ltw(FieldState::broadcast(p.grid, gy, p.dphi0), p).values);
    r.gap = spectral_gap_estimate(p).gap;
    r.pass = r.ode_residual < 1e-8 && std::abs(r.normalisation - 1.0) < 1e-10 && r.kernel_residual < 1e-6 && r.gap > 0.0;
    return r;
}

// ------------------------------------------------------- initial states

struct InitialCondition {
    double v0 = 0.0;     // amplitude of the P_perp-projected bump
    double theta0 = 0.0; // amplitude of cos(2 pi mode y_1 / L)
    int mode = 1;
};

inline PhaseState initial_state(const WaveProfile& p, const TransverseGrid& gy, const InitialCondition& ic) {
    PhaseState s{TransverseField(gy), FieldState(p.grid, gy), 0.0};
    const double kk = 2.0 * std::numbers::pi * ic.mode / gy.L;
    std::vector<std::size_t> idx(static_cast<std::size_t>(gy.axes()));
    for (std::size_t j = 0; j < gy.points(); ++j) {
        gy.unravel(j, idx.data());
        const double c = std::cos(kk * gy.y(idx[0]));
        s.theta[j] = ic.theta0 * c;
        for (std::size_t i = 0; i < p.grid.n; ++i) {
            const double x = p.grid.x(i);
            s.v.at(i, j) = ic.v0 * std::exp(-(x - 1.0) * (x - 1.0)) * (1.0 + 0.5 * c);
        }
    }
    s.v = project_Ptw_perp(s.v, p);
    return s;
}

// ------------------------------------------------------- dual check

struct DualCheckResult {
    std::vector<double> dt, gap; // mean H^k gap at T per dt
    double slope = 0.0;          // log2 of successive gap ratios, averaged
    LinearFit fit;               // log gap against log dt
};

// Same noise stream through the direct SPDE (then extracted) and the frozen
// system (then reconstructed); gap ||u_direct - u_rec||_{H^k} at time T.
inline DualCheckResult dual_check(const WaveProfile& p, const TransverseGrid& gy, const NoiseSpec& spec, double sigma,
                                  const std::vector<double>& dts, double T, int pairs, std::uint64_t seed, double k = 1.0,
                                  const InitialCondition& ic = {0.05, 0.3, 1}, int workers = 1) {
    if (dts.size() < 2) throw std::invalid_argument("dual_check: need at least two time steps");
    const PhaseState init = initial_state(p, gy, ic);
    DualCheckResult out;
    for (double dt : dts) {
        SimConfig cfg;
        cfg.dt = dt;
        cfg.T = T;
        cfg.sigma = sigma;
        cfg.k = k;
        const auto gaps = parallel_map<double>(static_cast<std::size_t>(pairs), workers, [&](std::size_t r) {
            NoiseSampler ns(spec, p.grid, gy);
            SpdeStepper direct(cfg, p, gy, &ns);
            FrozenStepper frozen(cfg, p, gy, &ns);
            PhaseState s = init;
            PhaseWorkspace ws(p);
            FieldState u = reconstruct_u(s, ws);
            RngStream r1(seed, r), r2(seed, r);
            for (std::size_t n = 0; n < cfg.steps(); ++n) {
                direct.step(u, r1);
                frozen.step(s, r2);
            }
            s.gamma = 0.0;
            FieldState d = reconstruct_u(s, ws);
            for (std::size_t z = 0; z < d.size(); ++z) d.values[z] -= u.values[z];
            return sobolev_norm(d, k);
        });
        out.dt.push_back(dt);
        out.gap.push_back(mean(gaps));
    }
    std::vector<double> x, y;
    double s = 0.0;
    for (std::size_t i = 0; i < out.dt.size(); ++i) {
        x.push_back(std::log(out.dt[i]));
        y.push_back(std::log(out.gap[i]));
        if (i) s += std::log(out.gap[i - 1] / out.gap[i]) / std::log(out.dt[i - 1] / out.dt[i]);
    }
    out.slope = s / static_cast<double>(out.dt.size() - 1);
    out.fit = ols(x, y);
    return out;
}

// ------------------------------------------------------- SPDE ensembles

enum class SpdeMode { Direct, Frozen };

struct SpdeEnsembleConfig {
    SimConfig sim;
    NoiseSpec noise;
    TransverseGrid gy{2, 32.0, 32};
    InitialCondition init;
    std::vector<double> etas; // thresholds for exit frequencies; sim.eta when empty
    SpdeMode mode = SpdeMode::Direct;
    int M = 10;
    int histogram_bins = 10;
};

struct RealisationResult {
    std::size_t index = 0;
    std::vector<DiagnosticRecord> records;
    double sup_v2 = 0.0; // sup ||v||^2_{H^k}
    double supN = 0.0;
    std::vector<double> exit_time; // per threshold, NaN if no exit
    bool blowup = false;
    bool left_tube = false;
    double stop_time = 0.0;
};

inline std::vector<double> thresholds(const SpdeEnsembleConfig& c) {
    return c.etas.empty() ? std::vector<double>{c.sim.eta} : c.etas;
}

// One realisation: (v, theta) history on the output cadence, funnelled through
// N_{mu;k}.  In direct mode the phase is extracted from the SPDE solution.
inline RealisationResult run_realisation(const SpdeEnsembleConfig& c, const WaveProfile& p, std::uint64_t seed,
                                         std::size_t m) {
    const SimConfig& cfg = c.sim;
    RealisationResult r;
    r.index = m;
    NoiseSampler ns(c.noise, p.grid, c.gy, p.u_minus, p.u_plus);
    NormWorkspace nw(p.grid, c.gy);
    DiagnosticSeries series(cfg.mu, cfg.eta);
    RngStream rng(seed, m, 7);
    PhaseState s = initial_state(p, c.gy, c.init);
    PhaseWorkspace ws(p);
    auto record = [&](double t, const PhaseState& st) {
        const auto n = state_norms(nw, st, cfg.k);
        series.update(t, n.v, n.theta, n.v1, n.grad);
        r.sup_v2 = std::max(r.sup_v2, n.v * n.v);
    };
    record(0.0, s);
    const std::size_t steps = cfg.steps();
    try {
        if (c.mode == SpdeMode::Frozen) {
            FrozenStepper st(cfg, p, c.gy, &ns);
            for (std::size_t n = 1; n <= steps; ++n) {
                st.step(s, rng);
                if (n % cfg.output_every == 0 || n == steps) record(cfg.dt * static_cast<double>(n), s);
            }
        } else {
            SpdeStepper st(cfg, p, c.gy, &ns);
            FieldState u = reconstruct_u(s, ws);
            TransverseField prev = s.theta;
            for (std::size_t n = 1; n <= steps; ++n) {
                st.step(u, rng);
                if (n % cfg.output_every == 0 || n == steps) {
                    const double t = cfg.dt * static_cast<double>(n);
                    const double gamma = cfg.frame == Frame::Lab ? p.c0 * t : 0.0;
                    auto ex = extract_phase(u, ws, prev, gamma);
                    if (ex.left_tube) {
                        r.left_tube = true;
                        r.stop_time = t;
                        break;
                    }
                    prev = ex.state.theta;
                    record(t, ex.state);
                }
            }
        }
    } catch (const BlowUp&) {
        r.blowup = true;
    }
    r.records = series.records();
    r.supN = series.sup_N();
    if (!r.left_tube) r.stop_time = r.records.back().t;
    for (double eta : thresholds(c)) {
        double te = first_exit_time(r.records, eta);
        // leaving the Newton tube or the blow-up guard counts as an exit
        if (std::isnan(te) && (r.left_tube || r.blowup)) te = r.stop_time;
        r.exit_time.push_back(te);
    }
    return r;
}

struct EnsembleSummary {
    double sigma = 0.0;
    int M = 0;
    ConfidenceInterval sup_v2;
    double supN_mean = 0.0, supN_var = 0.0;
    std::vector<double> supN_quantiles; // 0.05, 0.25, 0.5, 0.75, 0.95
    std::vector<double> p_moments;      // E supN^p for p = 1, 2
    std::vector<double> etas, exit_frequency;
    std::vector<double> hist_edges;  // exit-time histogram for the first threshold
    std::vector<int> hist_counts;
    int blowups = 0, left_tube = 0;
};

inline EnsembleSummary summarise(const SpdeEnsembleConfig& c, const std::vector<RealisationResult>& rs, std::uint64_t seed) {
    EnsembleSummary e;
    e.sigma = c.sim.sigma;
    e.M = static_cast<int>(rs.size());
    std::vector<double> v2, sn, sn2;
    for (const auto& r : rs) {
        v2.push_back(r.sup_v2);
        sn.push_back(r.supN);
        sn2.push_back(r.supN * r.supN);
        e.blowups += r.blowup;
        e.left_tube += r.left_tube;
    }
    RngStream boot(seed, 0, 1017);
    e.sup_v2 = rs.size() >= 2 ? bootstrap_mean(v2, boot) : ConfidenceInterval{v2.empty() ? 0.0 : v2[0], 0.0, 0.0};
    e.supN_mean = mean(sn);
    e.supN_var = rs.size() >= 2 ? sample_variance(sn) : 0.0;
    std::vector<double> sorted = sn;
    std::sort(sorted.begin(), sorted.end());
    for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) e.supN_quantiles.push_back(sorted.empty() ? 0.0 : quantile_sorted(sorted, q));
    e.p_moments = {mean(sn), mean(sn2)};
    e.etas = thresholds(c);
    for (std::size_t q = 0; q < e.etas.size(); ++q) {
        int hits = 0;
        for (const auto& r : rs) hits += !std::isnan(r.exit_time[q]);
        e.exit_frequency.push_back(rs.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(rs.size()));
    }
    const int bins = std::max(1, c.histogram_bins);
    for (int b = 0; b <= bins; ++b) e.hist_edges.push_back(c.sim.T * b / bins);
    e.hist_counts.assign(static_cast<std::size_t>(bins), 0);
    for (const auto& r : rs) {
        const double te = r.exit_time.empty() ? std::numeric_limits<double>::quiet_NaN() : r.exit_time[0];
        if (std::isnan(te)) continue;
        const int b = std::clamp(static_cast<int>(te / c.sim.T * bins), 0, bins - 1);
        ++e.hist_counts[static_cast<std::size_t>(b)];
    }
    return e;
}

// Realisations whose index is in `skip` are not rerun (resume).
inline std::vector<RealisationResult> run_ensemble(const SpdeEnsembleConfig& c, const WaveProfile& p, std::uint64_t seed,
                                                   int workers, const std::vector<std::size_t>& todo = {}) {
    c.sim.validate(c.gy.d);
    std::vector<std::size_t> idx = todo;
    if (idx.empty())
        for (int m = 0; m < c.M; ++m) idx.push_back(static_cast<std::size_t>(m));
    return parallel_map<RealisationResult>(idx.size(), workers,
                                           [&](std::size_t i) { return run_realisation(c, p, seed, idx[i]); });
}

} // namespace stochwave

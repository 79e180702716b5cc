#pragma once

#include "stochwave/fft.hpp"
#include "stochwave/montecarlo.hpp"
#include "stochwave/rng.hpp"
#include "stochwave/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

namespace stochwave {

struct ToyConfig {
    int d = 2;
    double sigma = 0.075;
    double dt = 0.1;
    double T = 100.0;
    int M = 200;
    std::vector<double> etas{1.0};
    double overflow = 1e12;

    double alpha() const { return 0.25 * static_cast<double>(d - 1); }
    std::size_t steps() const { return static_cast<std::size_t>(std::llround(T / dt)); }
    void validate() const {
        if (d < 2) throw std::invalid_argument("toy: d must be >= 2");
        if (!(dt > 0.0)) throw std::invalid_argument("toy: dt must be > 0");
        if (!(T >= 0.0)) throw std::invalid_argument("toy: T must be >= 0");
        if (!(sigma >= 0.0)) throw std::invalid_argument("toy: sigma must be >= 0");
        if (M < 1) throw std::invalid_argument("toy: M must be >= 1");
        for (double e : etas)
            if (!(e > 0.0)) throw std::invalid_argument("toy: eta values must be > 0");
    }
};

struct ToyPath {
    std::vector<double> t, vhat, thetahat, Theta;
    bool overflow = false;
    double overflow_time = std::numeric_limits<double>::quiet_NaN();
};

inline std::vector<double> toy_times(const ToyConfig& cfg) {
    std::vector<double> t(cfg.steps() + 1);
    for (std::size_t n = 0; n < t.size(); ++n) t[n] = cfg.dt * static_cast<double>(n);
    return t;
}

// v(t_{n+1}) = e^{-dt} v(t_n) + sigma sqrt((1 - e^{-2dt})/2) xi_n, exact in law.
inline std::vector<double> simulate_ou(const ToyConfig& cfg, RngStream& rng) {
    const std::size_t n = cfg.steps();
    std::vector<double> v(n + 1, 0.0);
    const double a = std::exp(-cfg.dt), b = cfg.sigma * std::sqrt(-0.5 * std::expm1(-2.0 * cfg.dt));
    for (std::size_t i = 0; i < n; ++i) v[i + 1] = a * v[i] + b * rng.normal();
    return v;
}

// Inserts the OU bridge midpoint between consecutive samples: the returned path
// lives on the lattice with step dt/2 and agrees with v at the old nodes.
inline std::vector<double> ou_refine(const std::vector<double>& v, double dt, double sigma, RngStream& rng) {
    if (v.empty()) return {};
    const double rho = std::exp(-0.5 * dt);
    const double sd = sigma * std::sqrt(0.5 * (1.0 - rho * rho) / (1.0 + rho * rho));
    std::vector<double> w(2 * v.size() - 1);
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        w[2 * i] = v[i];
        w[2 * i + 1] = rho * (v[i] + v[i + 1]) / (1.0 + rho * rho) + sd * rng.normal();
    }
    w.back() = v.back();
    return w;
}

namespace detail {

// Linear convolution helper with cached plans and scratch, one per thread.
class Convolver {
public:
    // out[q] = sum_i a[i] b[q-i] for q < nout.
    void convolve(const double* a, std::size_t na, const double* b, std::size_t nb, double* out, std::size_t nout) {
        std::size_t P = 1;
        while (P < na + nb) P <<= 1;
        Buf& buf = buffers(P);
        spectrum(a, na, P, buf, buf.fa);
        spectrum(b, nb, P, buf, buf.fb);
        mult_inverse(buf, buf.fb, P, out, nout);
    }

    // Same, with the b spectrum cached under `key` (b must not change for a key).
    void convolve_cached(const double* a, std::size_t na, const double* b, std::size_t nb, std::size_t key, double* out,
                         std::size_t nout) {
        std::size_t P = 1;
        while (P < na + nb) P <<= 1;
        Buf& buf = buffers(P);
        auto k = std::make_pair(P, key);
        auto it = kernel_.find(k);
        if (it == kernel_.end()) {
            std::vector<cplx> fb(P / 2 + 1);
            spectrum(b, nb, P, buf, fb);
            it = kernel_.emplace(k, std::move(fb)).first;
        }
        spectrum(a, na, P, buf, buf.fa);
        mult_inverse(buf, it->second, P, out, nout);
    }

private:
    struct Buf {
        std::unique_ptr<double, detail::FftwDeleter> r;
        std::unique_ptr<fftw_complex, detail::FftwDeleter> c;
        std::vector<cplx> fa, fb;
        PlanPair plans;
    };

    Buf& buffers(std::size_t P) {
        auto it = bufs_.find(P);
        if (it != bufs_.end()) return it->second;
        Buf b;
        b.r.reset(fftw_alloc_real(P));
        b.c.reset(fftw_alloc_complex(P / 2 + 1));
        b.fa.resize(P / 2 + 1);
        b.fb.resize(P / 2 + 1);
        b.plans = get_plans({static_cast<int>(P)}, 1);
        return bufs_.emplace(P, std::move(b)).first->second;
    }

    static void spectrum(const double* a, std::size_t na, std::size_t P, Buf& buf, std::vector<cplx>& dst) {
        double* r = buf.r.get();
        std::copy(a, a + na, r);
        std::fill(r + na, r + P, 0.0);
        fftw_execute_dft_r2c(buf.plans.fwd, r, buf.c.get());
        std::memcpy(static_cast<void*>(dst.data()), buf.c.get(), sizeof(cplx) * (P / 2 + 1));
    }

    static void mult_inverse(Buf& buf, const std::vector<cplx>& fb, std::size_t P, double* out, std::size_t nout) {
        auto* c = reinterpret_cast<cplx*>(buf.c.get());
        for (std::size_t m = 0; m <= P / 2; ++m) c[m] = buf.fa[m] * fb[m];
        fftw_execute_dft_c2r(buf.plans.inv, buf.c.get(), buf.r.get());
        const double s = 1.0 / static_cast<double>(P);
        for (std::size_t q = 0; q < nout; ++q) out[q] = buf.r.get()[q] * s;
    }

    std::map<std::size_t, Buf> bufs_;
    std::map<std::pair<std::size_t, std::size_t>, std::vector<cplx>> kernel_;
};

} // namespace detail

enum class VolterraMethod { Direct, Blocked };

// theta(t_n) = dt * trapezoid_k K(t_n - s_k) [sigma^2 + |v_k| theta_k], with the
// k = n node moved to the left-hand side.  Blocked evaluates exactly the same
// sums by divide and conquer with FFT cross terms, O(N log^2 N) work.
class VolterraSolver {
public:
    explicit VolterraSolver(const ToyConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        const std::size_t n = cfg_.steps();
        K_.resize(n + 1);
        for (std::size_t j = 0; j <= n; ++j) K_[j] = std::pow(1.0 + cfg_.dt * static_cast<double>(j), -cfg_.alpha());
    }

    ToyPath solve(const std::vector<double>& v, VolterraMethod method = VolterraMethod::Blocked) {
        const std::size_t n = cfg_.steps();
        if (v.size() != n + 1) throw std::invalid_argument("VolterraSolver: v path length does not match the lattice");
        v_ = &v;
        th_.assign(n + 1, 0.0);
        c_.assign(n + 1, 0.0);
        S_.assign(n + 1, 0.0);
        flagged_ = n + 1;
        c_[0] = 0.5 * cfg_.sigma * cfg_.sigma;
        if (n > 0) {
            if (method == VolterraMethod::Direct)
                direct(1, n + 1);
            else
                recurse(0, n + 1);
        }
        ToyPath p;
        p.t = toy_times(cfg_);
        p.vhat = v;
        p.thetahat = th_;
        p.Theta.resize(n + 1);
        double sup = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            if (i >= flagged_) {
                p.thetahat[i] = std::numeric_limits<double>::infinity();
                sup = std::numeric_limits<double>::infinity();
            } else {
                sup = std::max(sup, th_[i] * th_[i]);
            }
            p.Theta[i] = sup;
        }
        if (flagged_ <= n) {
            p.overflow = true;
            p.overflow_time = p.t[flagged_];
        }
        return p;
    }

private:
    static constexpr std::size_t kBase = 64;

    void finalize(std::size_t i) {
        if (i >= flagged_) return;
        const double dt = cfg_.dt, s2 = cfg_.sigma * cfg_.sigma;
        const double av = std::abs((*v_)[i]);
        const double den = 1.0 - 0.5 * dt * av;
        const double th = dt * (S_[i] + 0.5 * s2) / den;
        if (!(den > 0.0) || !std::isfinite(th) || th > cfg_.overflow) {
            flagged_ = i;
            return;
        }
        th_[i] = th;
        c_[i] = s2 + av * th;
    }

    void direct(std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi && i < flagged_; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < i; ++k) s += K_[i - k] * c_[k];
            S_[i] = s;
            finalize(i);
        }
    }

    // Nodes [lo, hi): contributions of k < lo are already in S_.
    void recurse(std::size_t lo, std::size_t hi) {
        if (lo >= flagged_) return;
        if (hi - lo <= kBase) {
            for (std::size_t i = std::max<std::size_t>(lo, 1); i < hi && i < flagged_; ++i) {
                double s = 0.0;
                for (std::size_t k = lo; k < i; ++k) s += K_[i - k] * c_[k];
                S_[i] += s;
                finalize(i);
            }
            return;
        }
        const std::size_t mid = lo + (hi - lo) / 2;
        recurse(lo, mid);
        if (mid >= flagged_) return;
        cross(lo, mid, hi);
        recurse(mid, hi);
    }

    // S_i += sum_{k in [lo,mid)} K_{i-k} c_k for i in [mid, hi).
    void cross(std::size_t lo, std::size_t mid, std::size_t hi) {
        const std::size_t na = mid - lo, nb = hi - lo;
        tmp_.resize(nb);
        conv_.convolve_cached(c_.data() + lo, na, K_.data(), nb, nb, tmp_.data(), nb);
        for (std::size_t i = mid; i < hi; ++i) S_[i] += tmp_[i - lo];
    }

    ToyConfig cfg_;
    std::vector<double> K_, th_, c_, S_, tmp_;
    const std::vector<double>* v_ = nullptr;
    std::size_t flagged_ = 0;
    detail::Convolver conv_;
};

inline ToyPath simulate_hat_theta(const ToyConfig& cfg, const std::vector<double>& v,
                                  VolterraMethod method = VolterraMethod::Blocked) {
    VolterraSolver s(cfg);
    return s.solve(v, method);
}

inline std::vector<double> theta_running_sup(const std::vector<double>& thetahat) {
    std::vector<double> out(thetahat.size());
    double s = 0.0;
    for (std::size_t i = 0; i < thetahat.size(); ++i) {
        s = std::max(s, thetahat[i] * thetahat[i]);
        out[i] = s;
    }
    return out;
}

// inf{t : mean(t) > eta} with linear interpolation; +inf when never crossed.
inline double tau_avg(const std::vector<double>& times, const std::vector<double>& mean_curve, double eta) {
    for (std::size_t i = 0; i < mean_curve.size(); ++i) {
        if (mean_curve[i] > eta) {
            if (i == 0) return times[0];
            const double m0 = mean_curve[i - 1], m1 = mean_curve[i];
            if (!std::isfinite(m1)) return times[i];
            return times[i - 1] + (eta - m0) / (m1 - m0) * (times[i] - times[i - 1]);
        }
    }
    return std::numeric_limits<double>::infinity();
}

struct ToyEnsemble {
    std::vector<double> t;
    std::vector<double> mean_Theta;
    std::vector<std::vector<double>> Theta; // per realisation
    std::size_t overflowed = 0;

    // Bootstrap CI of the mean at lattice index i.
    ConfidenceInterval ci(std::size_t i, RngStream& rng, int B = 1000) const {
        std::vector<double> x(Theta.size());
        for (std::size_t m = 0; m < Theta.size(); ++m) x[m] = Theta[m][i];
        return bootstrap_mean(x, rng, B);
    }
};

// Realisation m uses RngStream(seed, m, tag); kept paths are reduced in index order.
inline ToyEnsemble toy_ensemble(const ToyConfig& cfg, std::uint64_t seed, int workers, std::uint64_t tag = 1) {
    cfg.validate();
    auto paths = parallel_map<std::vector<double>>(static_cast<std::size_t>(cfg.M), workers, [&](std::size_t m) {
        RngStream rng(seed, m, tag);
        const auto v = simulate_ou(cfg, rng);
        VolterraSolver solver(cfg);
        return solver.solve(v).Theta;
    });
    ToyEnsemble e;
    e.t = toy_times(cfg);
    e.mean_Theta.assign(e.t.size(), 0.0);
    std::vector<double> col(paths.size());
    for (std::size_t i = 0; i < e.t.size(); ++i) {
        for (std::size_t m = 0; m < paths.size(); ++m) col[m] = paths[m][i];
        e.mean_Theta[i] = mean(col);
    }
    for (const auto& p : paths)
        if (!p.empty() && std::isinf(p.back())) ++e.overflowed;
    e.Theta = std::move(paths);
    return e;
}

struct PowerLawFit {
    double exponent = 0.0, intercept = 0.0, r2 = 0.0;
};

// log tau = intercept + exponent * log(1/sigma).
inline PowerLawFit powerlaw_fit(const std::vector<double>& sigma, const std::vector<double>& tau) {
    if (sigma.size() != tau.size() || sigma.size() < 3) throw std::invalid_argument("powerlaw_fit: need >= 3 points");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        if (!(sigma[i] > 0.0) || !(tau[i] > 0.0) || !std::isfinite(tau[i]))
            throw std::invalid_argument("powerlaw_fit: points must be finite and positive");
        x.push_back(-std::log(sigma[i]));
        y.push_back(std::log(tau[i]));
    }
    const LinearFit f = ols(x, y);
    return {f.slope, f.intercept, f.r2};
}

// For each sigma_i, the exponent fitted on the points with sigma in [sigma_i, max sigma].
// NaN where fewer than three points are available.
inline std::vector<double> windowed_exponents(const std::vector<double>& sigma, const std::vector<double>& tau) {
    const double smax = *std::max_element(sigma.begin(), sigma.end());
    std::vector<double> out;
    for (double s : sigma) {
        std::vector<double> xs, ts;
        for (std::size_t j = 0; j < sigma.size(); ++j)
            if (sigma[j] >= s && sigma[j] <= smax && std::isfinite(tau[j])) {
                xs.push_back(sigma[j]);
                ts.push_back(tau[j]);
            }
        out.push_back(xs.size() >= 3 ? powerlaw_fit(xs, ts).exponent : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

struct LadderRow {
    double sigma = 0.0;
    std::vector<double> tau; // one per eta
    double horizon = 0.0;
    std::size_t overflowed = 0;
};

struct LadderOptions {
    double sigma_start = 0.075;
    double factor = 0.8;
    double threshold = 5000.0;
    int min_steps = 6;
    int max_steps = 16;
    double first_horizon = 100.0;
};

// Decreases sigma geometrically until tau_avg exceeds the threshold for every
// eta.  Each ensemble is grown by doubling its horizon up to the threshold;
// prefixes of the paths are identical across horizons.
inline std::vector<LadderRow> sigma_ladder(ToyConfig cfg, const LadderOptions& opt, std::uint64_t seed, int workers) {
    cfg.validate();
    std::vector<LadderRow> rows;
    double horizon = opt.first_horizon;
    for (int k = 0; k < opt.max_steps; ++k) {
        LadderRow row;
        row.sigma = opt.sigma_start * std::pow(opt.factor, k);
        cfg.sigma = row.sigma;
        for (;;) {
            cfg.T = std::min(horizon, opt.threshold);
            const ToyEnsemble e = toy_ensemble(cfg, seed, workers, static_cast<std::uint64_t>(k) + 1);
            row.tau.clear();
            bool all = true;
            for (double eta : cfg.etas) {
                row.tau.push_back(tau_avg(e.t, e.mean_Theta, eta));
                all = all && std::isfinite(row.tau.back());
            }
            row.horizon = cfg.T;
            row.overflowed = e.overflowed;
            if (all || cfg.T >= opt.threshold) break;
            horizon *= 2.0;
        }
        for (double& tau : row.tau)
            if (tau > opt.threshold) tau = std::numeric_limits<double>::infinity();
        rows.push_back(row);
        bool any = false;
        for (double tau : row.tau) any = any || std::isfinite(tau);
        if (!any && k + 1 >= opt.min_steps) break;
    }
    return rows;
}

// Midpoint kernel weights K((j - 1/2) dt), j >= 1, for the Wiener integral.
inline std::vector<double> wiener_kernel(int d, double dt, std::size_t n) {
    std::vector<double> k(n + 1, 0.0);
    const double a = 0.25 * static_cast<double>(d - 1);
    for (std::size_t j = 1; j <= n; ++j) k[j] = std::pow(1.0 + (static_cast<double>(j) - 0.5) * dt, -a);
    return k;
}

struct YPath {
    std::vector<double> t, Y, Ystar;
};

// Y(t_n) = sum_{k<n} K(t_n - s_k) dB_k with the kernel at interval midpoints,
// s_k the midpoint of [t_k, t_{k+1}].
inline YPath simulate_Y(int d, double dt, double T, RngStream& rng) {
    ToyConfig probe;
    probe.d = d;
    probe.dt = dt;
    probe.T = T;
    probe.validate();
    const std::size_t n = probe.steps();
    std::vector<double> dB(n);
    rng.fill_normal(dB.data(), n, std::sqrt(dt));
    const auto K = wiener_kernel(d, dt, n);
    YPath p;
    p.t = toy_times(probe);
    p.Y.assign(n + 1, 0.0);
    if (n > 0) {
        std::vector<double> c(n + 1);
        thread_local detail::Convolver conv;
        conv.convolve(dB.data(), n, K.data(), n + 1, c.data(), n + 1);
        // Y_m = sum_k K_{m-k} dB_k, the K_0 = 0 term drops the k = m increment.
        for (std::size_t m = 1; m <= n; ++m) p.Y[m] = c[m];
    }
    p.Ystar = theta_running_sup(p.Y);
    return p;
}

// I(t) = sup_{s<=t} [int_0^s (1+s-r)^{-(d-1)/4} |Y_ou(r)| dr]^2 by the trapezoid rule.
inline YPath simulate_I(int d, double dt, double T, RngStream& rng) {
    ToyConfig cfg;
    cfg.d = d;
    cfg.dt = dt;
    cfg.T = T;
    cfg.sigma = 1.0;
    cfg.validate();
    const auto y = simulate_ou(cfg, rng);
    const std::size_t n = cfg.steps();
    std::vector<double> a(n + 1), K(n + 1), c(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        a[i] = std::abs(y[i]);
        K[i] = std::pow(1.0 + dt * static_cast<double>(i), -cfg.alpha());
    }
    thread_local detail::Convolver conv;
    conv.convolve(a.data(), n + 1, K.data(), n + 1, c.data(), n + 1);
    YPath p;
    p.t = toy_times(cfg);
    p.Y.assign(n + 1, 0.0);
    for (std::size_t m = 1; m <= n; ++m) p.Y[m] = dt * (c[m] - 0.5 * (K[m] * a[0] + K[0] * a[m]));
    p.Ystar = theta_running_sup(p.Y);
    return p;
}

} // namespace stochwave

#pragma once

#include "stochwave/diagnostics.hpp"
#include "stochwave/field.hpp"
#include "stochwave/montecarlo.hpp"
#include "stochwave/norms.hpp"
#include "stochwave/rng.hpp"
#include "stochwave/spectral.hpp"
#include "stochwave/stats.hpp"
#include "stochwave/toy.hpp"
#include "stochwave/wave.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochwave {

// ---------------------------------------------------------------- heat part

// exp(-|y|^2 / (2 width^2)) on the transverse grid.
inline TransverseField gaussian_bump(const TransverseGrid& gy, double width) {
    TransverseField w(gy);
    const auto axes = static_cast<std::size_t>(gy.axes());
    std::vector<std::size_t> idx(axes);
    for (std::size_t j = 0; j < gy.points(); ++j) {
        gy.unravel(j, idx.data());
        double r2 = 0.0;
        for (std::size_t a = 0; a < axes; ++a) {
            const double y = gy.y(idx[a]);
            r2 += y * y;
        }
        w[j] = std::exp(-0.5 * r2 / (width * width));
    }
    return w;
}

inline TransverseField apply_heat(const TransverseField& w, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("apply_heat: t must be >= 0");
    TransverseField out(w.gy);
    if (t == 0.0) {
        out.values = w.values;
        return out;
    }
    TransverseSpectral ts(w.gy);
    ts.heat(w.values.data(), out.values.data(), t);
    return out;
}

struct DecayFit {
    double exponent = 0.0; // slope of log ||S_H(t) w|| against log(1+t)
    double r2 = 0.0;
    std::vector<double> t, norm;
};

inline DecayFit heat_decay_fit(const TransverseField& w, const std::vector<double>& times) {
    DecayFit f;
    std::vector<double> x, y;
    for (double t : times) {
        const double n = std::sqrt(l2_norm2(apply_heat(w, t)));
        f.t.push_back(t);
        f.norm.push_back(n);
        x.push_back(std::log1p(t));
        y.push_back(std::log(n));
    }
    const auto lf = ols(x, y);
    f.exponent = lf.slope;
    f.r2 = lf.r2;
    return f;
}

// ------------------------------------------------------- history decay

// int_0^z (1+z-z')^{-mu} (1+z')^{-nu} dz'
inline double weighted_kernel_integral(double mu, double nu, double z) {
    if (z <= 0.0) return 0.0;
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    // each half in the log variable 1 + w = e^u about the end where its factor decays
    auto half = [z](double near, double far) {
        auto f = [&](double u) {
            const double e = std::exp(u);
            return std::pow(e, 1.0 - near) * std::pow(2.0 + z - e, -far);
        };
        double err = 0.0;
        const double v = GK::integrate(f, 0.0, std::log1p(0.5 * z), 20, 1e-13, &err);
        if (!(err <= 1e-11 * std::max(1.0, v))) throw std::runtime_error("weighted_kernel_integral: no convergence");
        return v;
    };
    return half(nu, mu) + half(mu, nu);
}

// Closed forms of the d = 2, 3, 4 cases, exponents ((d-1)/4, (5-d)/4).
inline double example_a6_closed(int d, double t) {
    if (d == 3) return 2.0 * std::atan(0.5 * t / std::sqrt(1.0 + t));
    if (d == 2 || d == 4) {
        const double q = (0.5 * t + 1.0) / std::sqrt(1.0 + t) - 1.0;
        return 2.0 * std::numbers::sqrt2 * std::atan(std::sqrt(std::max(0.0, q)));
    }
    throw std::invalid_argument("example_a6_closed: d must be 2, 3 or 4");
}

inline double example_a6_quadrature(int d, double t) {
    return weighted_kernel_integral(0.25 * (d - 1), 0.25 * (5 - d), t);
}

struct HistoryDecayReport {
    double C = 0.0; // max ratio
    std::vector<double> z, integral, ratio;
    bool stable = false; // extending the z list does not raise the max
};

inline void check_history_exponents(double mu, double nu, double lambda) {
    if (!(mu >= 0.0 && nu >= 0.0)) throw std::invalid_argument("history decay: mu, nu must be >= 0");
    if (lambda > std::min(mu, nu) + 1e-15) throw std::invalid_argument("history decay: need lambda <= min(mu, nu)");
    const bool mu1 = std::abs(mu - 1.0) < 1e-15, nu1 = std::abs(nu - 1.0) < 1e-15;
    if (!mu1 && !nu1 && lambda > mu + nu - 1.0 + 1e-15)
        throw std::invalid_argument("history decay: need lambda <= mu + nu - 1 when mu, nu != 1");
    if (nu1 && !(lambda < mu)) throw std::invalid_argument("history decay: need lambda < mu when nu = 1");
    if (mu1 && !(lambda < nu)) throw std::invalid_argument("history decay: need lambda < nu when mu = 1");
}

// Ratio of the integral to (1+z)^{-lambda}; C is the max over z_list (ascending,
// roughly geometric).  Stable means the last two increments of the running max
// contract by at least 3/4, or the max over the first half is within 5% of the total.
inline HistoryDecayReport verify_lemma_a5(double mu, double nu, double lambda, const std::vector<double>& z_list) {
    check_history_exponents(mu, nu, lambda);
    HistoryDecayReport r;
    double half = 0.0;
    for (std::size_t i = 0; i < z_list.size(); ++i) {
        const double z = z_list[i];
        const double I = weighted_kernel_integral(mu, nu, z);
        const double q = I * std::pow(1.0 + z, lambda);
        r.z.push_back(z);
        r.integral.push_back(I);
        r.ratio.push_back(q);
        r.C = std::max(r.C, q);
        if (i < (z_list.size() + 1) / 2) half = r.C;
    }
    const std::size_t n = r.ratio.size();
    bool contracting = false;
    if (n >= 3) {
        const double d1 = std::max(r.ratio[n - 2], 0.0) - r.ratio[n - 3], d2 = r.ratio[n - 1] - r.ratio[n - 2];
        contracting = d2 <= 0.0 || (d1 > 0.0 && d2 <= 0.75 * d1);
    }
    r.stable = std::isfinite(r.C) && (r.C <= 1.05 * half || contracting);
    return r;
}

// --------------------------------------------- transverse Fourier quadrature

// Nodes for int_{R^m} F(|xi|) dxi / (2 pi)^m, m = d - 1, on log-spaced radii.
struct RadialQuadrature {
    std::vector<double> r, w;

    RadialQuadrature() = default;
    RadialQuadrature(int d, double r_min, double r_max, int n) {
        if (d < 2) throw std::invalid_argument("RadialQuadrature: d must be >= 2");
        if (n < 2 || !(r_min > 0.0) || !(r_max > r_min)) throw std::invalid_argument("RadialQuadrature: bad range");
        const int m = d - 1;
        // |S^{m-1}| / (2 pi)^m
        const double area = 2.0 * std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m);
        const double c = area / std::pow(2.0 * std::numbers::pi, m);
        const double h = std::log(r_max / r_min) / (n - 1);
        for (int i = 0; i < n; ++i) {
            const double x = r_min * std::exp(h * i);
            r.push_back(x);
            // trapezoid in log r: dr = r dlog r
            w.push_back(c * std::pow(x, m - 1) * x * h * (i == 0 || i == n - 1 ? 0.5 : 1.0));
        }
        // the disc [0, r_min] with the integrand frozen at r_min
        w[0] += c * std::pow(r_min, m) / m;
    }
    std::size_t size() const { return r.size(); }
};

// History integral int_0^{t_n} (1+t_n-s)^{-mu} h(s) ds on a uniform lattice for every n, by FFT.
inline std::vector<double> history_integral_series(const std::vector<double>& h, double dt, double mu) {
    const std::size_t n = h.size();
    std::vector<double> K(n), c(n), out(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) K[j] = std::pow(1.0 + dt * static_cast<double>(j), -mu);
    thread_local detail::Convolver conv;
    if (n == 0) return out;
    conv.convolve(h.data(), n, K.data(), n, c.data(), n);
    for (std::size_t m = 1; m < n; ++m) out[m] = dt * (c[m] - 0.5 * (K[m] * h[0] + K[0] * h[m]));
    return out;
}

// ------------------------------------------------------------------ E_B

struct GrowthRow {
    double T = 0.0;
    double E_sup = 0.0, ci_lo = 0.0, ci_hi = 0.0;
    double predicted_rate = 0.0; // d(T) log T
    double ratio = 0.0;
    double ratio_1p = 0.0; // against d(T) (1 + log T)
};

// B maps one scalar Brownian motion to the profile b(xi) = amplitude exp(-|xi|^2 / 2)
// in Fourier space; every radial mode is an OU process with rate |xi|^2.
struct BSpec {
    double amplitude = 1.0;
    double r_min = 3e-4;
    double r_max = 8.0;
    int nodes = 48;
    double k = 1.0;          // H^k weight for the gradient norm
    double mu = -1.0;        // history exponent; negative selects decay_weight(d)
};

struct EBPaths {
    std::vector<double> t;
    std::vector<double> norm2;    // ||E_B(t)||^2_{L^2}
    std::vector<double> grad2;    // ||grad E_B(t)||^2_{H^k}
    std::vector<double> J;        // history integral of grad2
};

// Exact joint stepping of the correlated OU modes.
class EBSimulator {
public:
    EBSimulator(int d, const BSpec& spec, double dt) : d_(d), spec_(spec), dt_(dt), quad_(d, spec.r_min, spec.r_max, spec.nodes) {
        if (!(dt > 0.0)) throw std::invalid_argument("EBSimulator: dt must be > 0");
        const std::size_t n = quad_.size();
        decay_.resize(n);
        b_.resize(n);
        Eigen::MatrixXd S(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            const double li = quad_.r[i] * quad_.r[i];
            decay_[i] = std::exp(-li * dt);
            b_[i] = spec.amplitude * std::exp(-0.5 * li);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double l = quad_.r[i] * quad_.r[i] + quad_.r[j] * quad_.r[j];
                S(i, j) = b_[i] * b_[j] * (l * dt < 1e-12 ? dt : -std::expm1(-l * dt) / l);
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        root_ = es.eigenvectors() * ev.asDiagonal();
        mu_ = spec.mu >= 0.0 ? spec.mu : decay_weight(d);
    }

    EBPaths simulate(double T, RngStream& rng) const {
        const std::size_t steps = static_cast<std::size_t>(std::llround(T / dt_));
        const std::size_t n = quad_.size();
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n), z(n);
        EBPaths p;
        p.t.resize(steps + 1);
        p.norm2.assign(steps + 1, 0.0);
        p.grad2.assign(steps + 1, 0.0);
        for (std::size_t s = 1; s <= steps; ++s) {
            for (std::size_t i = 0; i < n; ++i) z[i] = rng.normal();
            x = x.cwiseProduct(Eigen::Map<const Eigen::VectorXd>(decay_.data(), n)) + root_ * z;
            double a = 0.0, g = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double r2 = quad_.r[i] * quad_.r[i];
                const double e = quad_.w[i] * x[i] * x[i];
                a += e;
                g += e * r2 * std::pow(1.0 + r2, spec_.k);
            }
            p.norm2[s] = a;
            p.grad2[s] = g;
        }
        for (std::size_t s = 0; s <= steps; ++s) p.t[s] = dt_ * static_cast<double>(s);
        p.J = history_integral_series(p.grad2, dt_, mu_);
        return p;
    }

    // E ||E_B(t)||^2 from the quadrature, for checks.
    double expected_norm2(double t) const {
        double a = 0.0;
        for (std::size_t i = 0; i < quad_.size(); ++i) {
            const double l = quad_.r[i] * quad_.r[i];
            a += quad_.w[i] * b_[i] * b_[i] * -std::expm1(-2.0 * l * t) / (2.0 * l);
        }
        return a;
    }

    const RadialQuadrature& quadrature() const { return quad_; }
    const Eigen::MatrixXd& noise_root() const { return root_; }
    const std::vector<double>& decay() const { return decay_; }
    double mu() const { return mu_; }

private:
    int d_;
    BSpec spec_;
    double dt_;
    RadialQuadrature quad_;
    std::vector<double> decay_, b_;
    Eigen::MatrixXd root_;
    double mu_ = 0.25;
};

inline double stochastic_rate(int d, double T) {
    if (d >= 4) return 1.0;
    if (d == 3) return std::log(T);
    return std::sqrt(T);
}

inline double deterministic_rate(int d, double T) {
    if (d > 5) return 1.0;
    if (d == 5) return std::log(T);
    return std::pow(T, 0.25 * (5 - d));
}

enum class EBQuantity { Norm, J };

struct EBGrowth {
    std::vector<GrowthRow> norm, J;
};

inline std::vector<GrowthRow> growth_rows(const std::vector<std::vector<double>>& sups, const std::vector<double>& T_list,
                                          const std::function<double(double)>& rate, RngStream& boot) {
    std::vector<GrowthRow> rows;
    for (std::size_t j = 0; j < T_list.size(); ++j) {
        std::vector<double> x(sups.size());
        for (std::size_t m = 0; m < sups.size(); ++m) x[m] = sups[m][j];
        const auto ci = bootstrap_mean(x, boot);
        GrowthRow r;
        r.T = T_list[j];
        r.E_sup = ci.estimate;
        r.ci_lo = ci.lo;
        r.ci_hi = ci.hi;
        const double base = rate(r.T);
        r.predicted_rate = base * std::log(r.T);
        r.ratio = r.E_sup / r.predicted_rate;
        r.ratio_1p = r.E_sup / (base * (1.0 + std::log(r.T)));
        rows.push_back(r);
    }
    return rows;
}

// E sup_{[0,T]} ||E_B||^2 against d_stc(T) log T and E sup J_B against d_det(T) log T.
inline EBGrowth simulate_EB_growth(int d, const std::vector<double>& T_list, int M, const BSpec& spec, double dt,
                                   std::uint64_t seed, int workers) {
    if (T_list.empty()) return {};
    const double Tmax = *std::max_element(T_list.begin(), T_list.end());
    const EBSimulator sim(d, spec, dt);
    auto sups = parallel_map<std::vector<double>>(static_cast<std::size_t>(M), workers, [&](std::size_t m) {
        RngStream rng(seed, m, 11);
        const auto p = sim.simulate(Tmax, rng);
        std::vector<double> out;
        for (double T : T_list) {
            const auto n = static_cast<std::size_t>(std::llround(T / dt));
            out.push_back(*std::max_element(p.norm2.begin(), p.norm2.begin() + static_cast<long>(n) + 1));
        }
        for (double T : T_list) {
            const auto n = static_cast<std::size_t>(std::llround(T / dt));
            out.push_back(*std::max_element(p.J.begin(), p.J.begin() + static_cast<long>(n) + 1));
        }
        return out;
    });
    std::vector<std::vector<double>> a(sups.size()), b(sups.size());
    for (std::size_t m = 0; m < sups.size(); ++m) {
        a[m].assign(sups[m].begin(), sups[m].begin() + static_cast<long>(T_list.size()));
        b[m].assign(sups[m].begin() + static_cast<long>(T_list.size()), sups[m].end());
    }
    RngStream boot(seed, 0, 1011);
    EBGrowth g;
    g.norm = growth_rows(a, T_list, [d](double T) { return stochastic_rate(d, T); }, boot);
    g.J = growth_rows(b, T_list, [d](double T) { return deterministic_rate(d, T); }, boot);
    return g;
}

// ------------------------------------------------------------------ Z_X

// X = Fourier multiplier exp(-k^2 l^2 / 2) on the x lattice, acting on
// cylindrical noise; optional transverse modes xi each carry an independent copy.
struct XSpec {
    double amplitude = 1.0;
    double length = 1.0;
    double k = 1.0;                 // H^k norm in x
    std::vector<double> transverse; // |xi| of extra transverse modes (empty: pure x problem)
};

class ZXSimulator {
public:
    ZXSimulator(const WaveProfile& p, const XSpec& spec, double dt) : spec_(spec), dt_(dt) {
        const auto n = static_cast<Eigen::Index>(p.grid.n);
        if (p.grid.n > 512) throw std::invalid_argument("ZXSimulator: n_x above dense budget 512");
        if (!(dt > 0.0)) throw std::invalid_argument("ZXSimulator: dt must be > 0");
        // the Van Loan block holds exp(+|A| dt); keep its cancellation error below 1e-10
        if (std::pow(std::numbers::pi / p.grid.dx(), 2) * dt > 20.0)
            throw std::invalid_argument("ZXSimulator: dt too large for the lattice spacing");
        const double h = p.grid.dx();
        const Eigen::MatrixXd A = ltw_dense_matrix(p);
        Eigen::Map<const Eigen::VectorXd> dphi(p.dphi0.data(), n), psi(p.psi_tw.data(), n);
        Pperp_ = Eigen::MatrixXd::Identity(n, n) - dphi * psi.transpose() * h;
        // X by its action on lattice unit vectors
        const Eigen::MatrixXd D2 = fourier_d2_matrix(p.grid);
        Eigen::MatrixXd X = (0.5 * spec.length * spec.length * D2).exp() * spec.amplitude;
        const Eigen::MatrixXd PX = Pperp_ * X;
        // cylindrical noise: increments of variance dt / h per cell
        const Eigen::MatrixXd Q = PX * PX.transpose() / h;
        modes_ = spec.transverse;
        if (modes_.empty()) modes_.push_back(0.0);
        // Van Loan: exp([[-A, Q], [0, A^T]] dt)
        Eigen::MatrixXd V = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        V.topLeftCorner(n, n) = -A * dt;
        V.topRightCorner(n, n) = Q * dt;
        V.bottomRightCorner(n, n) = A.transpose() * dt;
        const Eigen::MatrixXd F = V.exp();
        const Eigen::MatrixXd Ex = F.bottomRightCorner(n, n).transpose();
        Eigen::MatrixXd S = Ex * F.topRightCorner(n, n);
        S = 0.5 * (S + S.transpose());
        E_ = Ex * Pperp_;
        Ex_ = Ex;
        // transverse mode factor exp(-xi^2 dt) enters both E and the noise covariance
        roots_.clear();
        for (double xi : modes_) {
            Eigen::MatrixXd Sx = S;
            if (xi != 0.0) {
                // int_0^dt e^{-2 xi^2 s} e^{As} Q e^{A^Ts} ds, exact via the shifted generator
                Eigen::MatrixXd W = V;
                W.topLeftCorner(n, n).diagonal().array() += xi * xi * dt;
                W.bottomRightCorner(n, n).diagonal().array() -= xi * xi * dt;
                const Eigen::MatrixXd G = W.exp();
                Sx = G.bottomRightCorner(n, n).transpose() * G.topRightCorner(n, n);
                Sx = 0.5 * (Sx + Sx.transpose());
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sx);
            roots_.push_back(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
        }
        gram_ = h * (Eigen::MatrixXd::Identity(n, n) - D2);
        if (spec.k != 1.0) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd::Identity(n, n) - D2);
            gram_ = h * es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).array().pow(spec.k).matrix().asDiagonal() *
                    es.eigenvectors().transpose();
        }
        cov_ = S;
    }

    // ||Z_X(t)||^2 summed over the transverse modes, on the lattice t_n = n dt.
    std::vector<double> simulate(double T, RngStream& rng) const {
        const std::size_t steps = static_cast<std::size_t>(std::llround(T / dt_));
        const Eigen::Index n = E_.rows();
        std::vector<Eigen::VectorXd> z(modes_.size(), Eigen::VectorXd::Zero(n));
        Eigen::VectorXd xi(n), tmp(n);
        std::vector<double> out(steps + 1, 0.0);
        for (std::size_t s = 1; s <= steps; ++s) {
            double acc = 0.0;
            for (std::size_t q = 0; q < modes_.size(); ++q) {
                for (Eigen::Index i = 0; i < n; ++i) xi[i] = rng.normal();
                tmp.noalias() = E_ * z[q];
                if (modes_[q] != 0.0) tmp *= std::exp(-modes_[q] * modes_[q] * dt_);
                tmp.noalias() += roots_[q] * xi;
                z[q] = Pperp_ * tmp;
                acc += z[q].dot(gram_ * z[q]);
            }
            out[s] = acc;
        }
        return out;
    }

    const Eigen::MatrixXd& step_matrix() const { return E_; }
    const Eigen::MatrixXd& semigroup_x() const { return Ex_; }
    const Eigen::MatrixXd& projection() const { return Pperp_; }
    const Eigen::MatrixXd& gram() const { return gram_; }
    const Eigen::MatrixXd& step_covariance() const { return cov_; }

private:
    XSpec spec_;
    double dt_;
    std::vector<double> modes_;
    Eigen::MatrixXd Pperp_, E_, Ex_, gram_, cov_;
    std::vector<Eigen::MatrixXd> roots_;
};

inline std::vector<GrowthRow> simulate_ZX_growth(const WaveProfile& p, const std::vector<double>& T_list, int M,
                                                 const XSpec& spec, double dt, std::uint64_t seed, int workers) {
    if (T_list.empty()) return {};
    const double Tmax = *std::max_element(T_list.begin(), T_list.end());
    const ZXSimulator sim(p, spec, dt);
    auto sups = parallel_map<std::vector<double>>(static_cast<std::size_t>(M), workers, [&](std::size_t m) {
        RngStream rng(seed, m, 13);
        const auto s = sim.simulate(Tmax, rng);
        std::vector<double> out;
        for (double T : T_list) {
            const auto n = static_cast<std::size_t>(std::llround(T / dt));
            out.push_back(*std::max_element(s.begin(), s.begin() + static_cast<long>(n) + 1));
        }
        return out;
    });
    RngStream boot(seed, 0, 1013);
    return growth_rows(sups, T_list, [](double) { return 1.0; }, boot);
}

// ------------------------------------------------------------------ J_G

// G(t, y) = g(t) bump(y) with bump(y) = exp(-|y|^2 / (2 width^2)), transverse dimension d - 1.
struct GSpec {
    double decay = -1.0; // nu in g(t) = (1+t)^{-nu}; negative selects hg_rate(d)
    double amplitude = 1.0;
    double width = 1.0;
    double k = 1.0;
    double r_min = 1e-4;
    double r_max = 10.0;
    int nodes = 240;
};

inline double hg_rate(int d) { return d < 5 ? 0.25 * (5 - d) : 0.25 * (d - 1); }

struct DeterministicConvReport {
    double mu = 0.0, nu = 0.0;
    bool supercritical = false;
    std::vector<double> t, J;
    double sup_J = 0.0;
    double theta_star = 0.0;
    double K_dc = 0.0; // sup J / theta*^2
};

// Each Fourier mode obeys a' = -|xi|^2 a + g(t) bump^(xi), stepped with the
// exponential midpoint rule.  J_G is the weighted history of ||grad E_G||^2_{H^k}.
inline DeterministicConvReport verify_deterministic_conv(int d, double mu, const GSpec& spec, double T, double dt = 0.05) {
    if (d < 2) throw std::invalid_argument("verify_deterministic_conv: d must be >= 2");
    if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("verify_deterministic_conv: T and dt must be > 0");
    DeterministicConvReport rep;
    rep.mu = mu;
    rep.nu = spec.decay >= 0.0 ? spec.decay : hg_rate(d);
    rep.supercritical = mu > 0.25 * (d - 1) + 1e-12;
    const RadialQuadrature q(d, spec.r_min, spec.r_max, spec.nodes);
    const std::size_t n = q.size(), steps = static_cast<std::size_t>(std::llround(T / dt));
    std::vector<double> a(n, 0.0), E(n), P(n), ghat(n), wgrad(n);
    const int m = d - 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double l = q.r[i] * q.r[i];
        E[i] = std::exp(-l * dt);
        P[i] = l * dt < 1e-10 ? dt : -std::expm1(-l * dt) / l;
        // Fourier transform of the bump in m dimensions
        ghat[i] = spec.amplitude * std::pow(2.0 * std::numbers::pi * spec.width * spec.width, 0.5 * m) *
                  std::exp(-0.5 * l * spec.width * spec.width);
        wgrad[i] = q.w[i] * l * std::pow(1.0 + l, spec.k);
    }
    std::vector<double> h(steps + 1, 0.0);
    for (std::size_t s = 1; s <= steps; ++s) {
        const double g = spec.amplitude == 0.0 ? 0.0 : std::pow(1.0 + dt * (static_cast<double>(s) - 0.5), -rep.nu);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = E[i] * a[i] + P[i] * g * ghat[i];
            acc += wgrad[i] * a[i] * a[i];
        }
        h[s] = acc;
    }
    rep.t.resize(steps + 1);
    for (std::size_t s = 0; s <= steps; ++s) rep.t[s] = dt * static_cast<double>(s);
    rep.J = history_integral_series(h, dt, mu);
    rep.sup_J = *std::max_element(rep.J.begin(), rep.J.end());
    // theta* = sup_t int_0^t (1+t-s)^{-mu} (||G(s)||_{H^k} + ||G(s)||_{L^1}) ds
    double l1 = std::abs(spec.amplitude) * std::pow(2.0 * std::numbers::pi * spec.width * spec.width, 0.5 * m), hk2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) hk2 += q.w[i] * std::pow(1.0 + q.r[i] * q.r[i], spec.k) * ghat[i] * ghat[i];
    std::vector<double> gs(steps + 1);
    for (std::size_t s = 0; s <= steps; ++s) gs[s] = std::pow(1.0 + rep.t[s], -rep.nu);
    const auto wg = history_integral_series(gs, dt, mu);
    rep.theta_star = (l1 + std::sqrt(hk2)) * *std::max_element(wg.begin(), wg.end());
    rep.K_dc = rep.theta_star > 0.0 ? rep.sup_J / (rep.theta_star * rep.theta_star) : 0.0;
    return rep;
}

// ------------------------------------------------ S_L decay precheck

struct SemigroupDecayReport {
    double gap = 0.0;
    double M = 0.0; // max of ||S_L(t) P w||_{H^k} e^{0.9 gap t} / ||w||_{H^k} over [0, t_max]
    std::vector<double> t, ratio;
};

inline SemigroupDecayReport semigroup_decay_check(const WaveProfile& p, const std::vector<Eigen::VectorXd>& ws,
                                                  double t_max = 10.0, double dt = 0.25) {
    SemigroupDecayReport r;
    r.gap = spectral_gap_estimate(p).gap;
    XSpec xs;
    const ZXSimulator sim(p, xs, dt);
    const auto& G = sim.gram();
    const auto& P = sim.projection();
    const auto steps = static_cast<std::size_t>(std::llround(t_max / dt));
    for (std::size_t s = 0; s <= steps; ++s) r.t.push_back(dt * static_cast<double>(s));
    r.ratio.assign(steps + 1, 0.0);
    for (const auto& w : ws) {
        const double n0 = std::sqrt(w.dot(G * w));
        Eigen::VectorXd z = P * w;
        for (std::size_t s = 0; s <= steps; ++s) {
            if (s) z = sim.semigroup_x() * z;
            const double q = std::sqrt(z.dot(G * z)) / n0 * std::exp(0.9 * r.gap * r.t[s]);
            r.ratio[s] = std::max(r.ratio[s], q);
            r.M = std::max(r.M, q);
        }
    }
    return r;
}

} // namespace stochwave

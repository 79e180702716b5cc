#pragma once

#include "stochwave/field.hpp"
#include "stochwave/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochwave {

struct Polynomial {
    std::vector<double> c; // c[i] multiplies u^i

    double operator()(double u) const {
        double acc = 0.0;
        for (std::size_t i = c.size(); i-- > 0;) acc = acc * u + c[i];
        return acc;
    }
    double derivative(double u) const {
        double acc = 0.0;
        for (std::size_t i = c.size(); i-- > 1;) acc = acc * u + static_cast<double>(i) * c[i];
        return acc;
    }
    static Polynomial from_roots(double scale, std::initializer_list<double> roots) {
        Polynomial p{{scale}};
        for (double r : roots) {
            std::vector<double> n(p.c.size() + 1, 0.0);
            for (std::size_t i = 0; i < p.c.size(); ++i) {
                n[i + 1] += p.c[i];
                n[i] -= r * p.c[i];
            }
            p.c = n;
        }
        return p;
    }
};

// Scalar reaction term f with stable states u_minus < u_plus.
struct Reaction {
    Polynomial f;
    double u_minus = 0.0;
    double u_plus = 1.0;

    // f(u) = u(1-u)(u-a) = -(u-0)(u-1)(u-a)
    static Reaction nagumo(double a) { return {Polynomial::from_roots(-1.0, {0.0, 1.0, a}), 0.0, 1.0}; }
};

struct DomainTooSmall : std::domain_error {
    using std::domain_error::domain_error;
};

// Logistic step u_- + (u_+ - u_-)/(1 + exp(-x/s)) with closed-form derivatives.
struct LogisticStep {
    double u_minus = 0.0, u_plus = 1.0, s = std::numbers::sqrt2;

    static double sig(double z) {
        if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
        const double e = std::exp(z);
        return e / (1.0 + e);
    }
    void eval(double x, double& p, double& dp, double& ddp) const {
        const double g = sig(x / s);
        const double h = g * (1.0 - g);
        const double a = u_plus - u_minus;
        p = u_minus + a * g;
        dp = a * h / s;
        ddp = a * h * (1.0 - 2.0 * g) / (s * s);
    }
};

struct WaveProfile {
    Grid1D grid;
    Reaction reaction;
    double c0 = 0.0;
    double u_minus = 0.0, u_plus = 1.0;
    double nu_minus = 0.0, nu_plus = 0.0; // tail decay rates at -inf / +inf
    LogisticStep step;
    bool closed_form = true;
    std::vector<double> phi0, dphi0, ddphi0, psi_tw, df0;
    std::vector<double> corr; // Phi0 - step on the grid (empty when closed_form)
    double ode_residual = 0.0;
    double adjoint_residual = 0.0; // relative, 4th-order differences on the interior
    double normalisation = 0.0; // <Phi0', psi_tw> by the lattice rule
    double psi_scale = 0.0;     // psi_tw = psi_scale * exp(c0 x) Phi0'

    double dx() const { return grid.dx(); }
    double f(double u) const { return reaction.f(u); }
    double df(double u) const { return reaction.f.derivative(u); }

    // Lattice inner product <a, b> over one x-row.
    double inner(const double* a, const double* b) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < grid.n; ++i) acc += a[i] * b[i];
        return acc * grid.dx();
    }
};

namespace detail {

inline void finish_profile(WaveProfile& p, double tail_tol) {
    const std::size_t n = p.grid.n;
    const double dx = p.grid.dx();
    p.df0.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.df0[i] = p.df(p.phi0[i]);

    if (std::abs(p.phi0.front() - p.u_minus) > tail_tol || std::abs(p.phi0.back() - p.u_plus) > tail_tol)
    {
        char buf[160];
        std::snprintf(buf, sizeof buf, "wave profile tails exceed tolerance %g on [%g, %g)", tail_tol, p.grid.x_min,
                      p.grid.x_max);
        throw DomainTooSmall(buf);
    }

    // psi_tw = exp(c0 x) Phi0', normalised with the same lattice rule used in
    // every projection so that <Phi0', psi_tw> = 1 to rounding.
    p.psi_tw.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.psi_tw[i] = std::exp(p.c0 * p.grid.x(i)) * p.dphi0[i];
    double nrm = 0.0;
    for (std::size_t i = 0; i < n; ++i) nrm += p.dphi0[i] * p.psi_tw[i];
    nrm *= dx;
    for (double& v : p.psi_tw) v /= nrm;
    p.psi_scale = 1.0 / nrm;
    p.normalisation = p.inner(p.dphi0.data(), p.psi_tw.data());

    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        res = std::max(res, std::abs(p.ddphi0[i] + p.c0 * p.dphi0[i] + p.f(p.phi0[i])));
    p.ode_residual = res;

    // Local differences: a spectral derivative of psi would see the wrap-around
    // jump left by its slow decay at -inf.
    const auto& s = p.psi_tw;
    double ares = 0.0, amax = 0.0;
    for (std::size_t i = 2; i + 2 < n; ++i) {
        const double d1 = (-s[i + 2] + 8.0 * s[i + 1] - 8.0 * s[i - 1] + s[i - 2]) / (12.0 * dx);
        const double d2 = (-s[i + 2] + 16.0 * s[i + 1] - 30.0 * s[i] + 16.0 * s[i - 1] - s[i - 2]) / (12.0 * dx * dx);
        ares = std::max(ares, std::abs(d2 - p.c0 * d1 + p.df0[i] * s[i]));
        amax = std::max(amax, std::abs(s[i]));
    }
    p.adjoint_residual = amax > 0.0 ? ares / amax : 0.0;

    const double fm = p.df(p.u_minus), fp = p.df(p.u_plus);
    p.nu_minus = 0.5 * (-p.c0 + std::sqrt(p.c0 * p.c0 - 4.0 * fm));
    p.nu_plus = 0.5 * (p.c0 + std::sqrt(p.c0 * p.c0 - 4.0 * fp));
}

} // namespace detail

// Closed-form Nagumo front Phi0(x) = 1/(1+exp(-x/sqrt2)).  For this profile
// the travelling-wave ODE Phi0'' + c0 Phi0' + f(Phi0) = 0 fixes
// c0 = sqrt2 (a - 1/2).
inline WaveProfile build_nagumo_profile(double a, const Grid1D& grid, double tail_tol = 1e-12) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("build_nagumo_profile: a must lie in (0,1)");
    grid.validate();
    WaveProfile p;
    p.grid = grid;
    p.reaction = Reaction::nagumo(a);
    p.c0 = std::numbers::sqrt2 * (a - 0.5);
    p.u_minus = 0.0;
    p.u_plus = 1.0;
    p.step = LogisticStep{0.0, 1.0, std::numbers::sqrt2};
    p.closed_form = true;
    const std::size_t n = grid.n;
    p.phi0.resize(n);
    p.dphi0.resize(n);
    p.ddphi0.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.step.eval(grid.x(i), p.phi0[i], p.dphi0[i], p.ddphi0[i]);
    detail::finish_profile(p, tail_tol);
    return p;
}

// Periodic Fourier differentiation matrices on the x lattice (even n), in
// closed form.  They coincide with the FFT multipliers used by RowSpectral:
// ik with the Nyquist mode removed, and -k^2 including it.
inline Eigen::MatrixXd fourier_d1_matrix(const Grid1D& g) {
    const long n = static_cast<long>(g.n);
    if (n % 2) throw std::invalid_argument("fourier_d1_matrix: n must be even");
    const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
    const double sc = 2.0 * std::numbers::pi / g.length();
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (long i = 0; i < n; ++i)
        for (long k = 0; k < n; ++k) {
            if (i == k) continue;
            const long j = i - k;
            const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
            D(i, k) = sc * 0.5 * sgn / std::tan(0.5 * static_cast<double>(j) * h);
        }
    return D;
}

inline Eigen::MatrixXd fourier_d2_matrix(const Grid1D& g) {
    const long n = static_cast<long>(g.n);
    if (n % 2) throw std::invalid_argument("fourier_d2_matrix: n must be even");
    const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
    const double sc = std::pow(2.0 * std::numbers::pi / g.length(), 2);
    Eigen::MatrixXd D(n, n);
    for (long i = 0; i < n; ++i)
        for (long k = 0; k < n; ++k) {
            const long j = i - k;
            if (j == 0) {
                D(i, k) = sc * (-std::numbers::pi * std::numbers::pi / (3.0 * h * h) - 1.0 / 6.0);
            } else {
                const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
                const double sn = std::sin(0.5 * static_cast<double>(j) * h);
                D(i, k) = sc * (-0.5 * sgn / (sn * sn));
            }
        }
    return D;
}

// Dense n_x x n_x discretisation of L_tw.
inline Eigen::MatrixXd ltw_dense_matrix(const WaveProfile& p) {
    Eigen::MatrixXd A = fourier_d2_matrix(p.grid) + p.c0 * fourier_d1_matrix(p.grid);
    for (std::size_t i = 0; i < p.grid.n; ++i) A(i, i) += p.df0[i];
    return A;
}

// Front for a general polynomial bistable f, by Newton's method on
// (correction, c0) with the logistic step as reference and the phase
// condition <correction, step'> = 0.
inline WaveProfile build_polynomial_profile(const Reaction& r, const Grid1D& grid, double tail_tol = 1e-12,
                                            double tol = 1e-11, int max_iter = 40, double width = 0.0) {
    grid.validate();
    const double fm = r.f.derivative(r.u_minus), fp = r.f.derivative(r.u_plus);
    if (!(fm < 0.0 && fp < 0.0)) throw std::invalid_argument("build_polynomial_profile: u_minus, u_plus must be stable");
    if (std::abs(r.f(r.u_minus)) > 1e-12 || std::abs(r.f(r.u_plus)) > 1e-12)
        throw std::invalid_argument("build_polynomial_profile: f must vanish at u_minus and u_plus");

    WaveProfile p;
    p.grid = grid;
    p.reaction = r;
    p.u_minus = r.u_minus;
    p.u_plus = r.u_plus;
    // Default reference width matches the Nagumo front exactly.
    const double s_auto = std::numbers::sqrt2 / std::sqrt(-fm - fp) * (r.u_plus - r.u_minus);
    p.step = LogisticStep{r.u_minus, r.u_plus, width > 0.0 ? width : s_auto};
    p.closed_form = false;
    const long n = static_cast<long>(grid.n);
    const double dx = grid.dx();
    std::vector<double> R(n), dR(n), ddR(n);
    for (long i = 0; i < n; ++i) p.step.eval(grid.x(i), R[i], dR[i], ddR[i]);

    const Eigen::MatrixXd D1 = fourier_d1_matrix(grid), D2 = fourier_d2_matrix(grid);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    double c = 0.0;
    const Eigen::Map<const Eigen::VectorXd> Rv(R.data(), n), dRv(dR.data(), n), ddRv(ddR.data(), n);

    auto residual = [&](const Eigen::VectorXd& ww, double cc, Eigen::VectorXd& F) {
        F.resize(n + 1);
        const Eigen::VectorXd d1 = D1 * ww, d2 = D2 * ww;
        for (long i = 0; i < n; ++i) F[i] = ddR[i] + d2[i] + cc * (dR[i] + d1[i]) + r.f(R[i] + ww[i]);
        F[n] = dRv.dot(ww) * dx;
    };
    Eigen::VectorXd F;
    residual(w, c, F);
    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
        if (F.lpNorm<Eigen::Infinity>() < tol) {
            converged = true;
            break;
        }
        Eigen::MatrixXd J(n + 1, n + 1);
        J.topLeftCorner(n, n) = D2 + c * D1;
        for (long i = 0; i < n; ++i) J(i, i) += r.f.derivative(R[i] + w[i]);
        J.block(0, n, n, 1) = dRv + D1 * w;
        J.block(n, 0, 1, n) = dRv.transpose() * dx;
        J(n, n) = 0.0;
        const Eigen::VectorXd step = J.partialPivLu().solve(-F);
        // Backtracking on the residual norm.
        double lam = 1.0;
        const double f0 = F.norm();
        Eigen::VectorXd Fn;
        for (int bt = 0; bt < 30; ++bt) {
            residual(w + lam * step.head(n), c + lam * step[n], Fn);
            if (Fn.norm() < (1.0 - 1e-4 * lam) * f0 || lam < 1e-6) break;
            lam *= 0.5;
        }
        w += lam * step.head(n);
        c += lam * step[n];
        F = Fn;
    }
    if (!converged && F.lpNorm<Eigen::Infinity>() >= tol)
        throw std::runtime_error("build_polynomial_profile: Newton did not converge");

    p.c0 = c;
    p.corr.assign(w.data(), w.data() + n);
    const Eigen::VectorXd d1 = D1 * w, d2 = D2 * w;
    p.phi0.resize(n);
    p.dphi0.resize(n);
    p.ddphi0.resize(n);
    for (long i = 0; i < n; ++i) {
        p.phi0[i] = R[i] + w[i];
        p.dphi0[i] = dR[i] + d1[i];
        p.ddphi0[i] = ddR[i] + d2[i];
    }
    detail::finish_profile(p, tail_tol);
    return p;
}

// Evaluates T_theta Phi0 = Phi0(x - theta) and its x-derivatives along rows.
class ProfileShifter {
public:
    explicit ProfileShifter(const WaveProfile& p) : p_(&p) {
        if (!p.closed_form) {
            fft_ = row_fourier(p.grid, 1);
            std::copy(p.corr.begin(), p.corr.end(), fft_.real());
            fft_.forward();
            chat_.assign(fft_.spec(), fft_.spec() + fft_.spec_size());
        }
    }

    void eval(double theta, double* phi, double* dphi, double* ddphi) {
        const Grid1D& g = p_->grid;
        for (std::size_t i = 0; i < g.n; ++i) {
            double a, b, c;
            p_->step.eval(g.x(i) - theta, a, b, c);
            phi[i] = a;
            if (dphi) dphi[i] = b;
            if (ddphi) ddphi[i] = c;
        }
        if (p_->closed_form) return;
        const auto& k = fft_.k(0);
        const auto& nyq = fft_.nyquist(0);
        for (int order = 0; order < 3; ++order) {
            double* out = order == 0 ? phi : (order == 1 ? dphi : ddphi);
            if (!out) continue;
            cplx* s = fft_.spec();
            for (std::size_t m = 0; m < chat_.size(); ++m) {
                const double ph = -k[m] * theta;
                cplx rot = nyq[m] ? cplx(std::cos(ph), 0.0) : cplx(std::cos(ph), std::sin(ph));
                if (order == 1) rot *= nyq[m] ? cplx(0.0) : cplx(0.0, k[m]);
                if (order == 2) rot *= -k[m] * k[m];
                s[m] = chat_[m] * rot;
            }
            fft_.inverse();
            for (std::size_t i = 0; i < g.n; ++i) out[i] += fft_.real()[i];
        }
    }

private:
    const WaveProfile* p_;
    Fourier fft_;
    std::vector<cplx> chat_;
};

// L_tw w = w'' + c0 w' + Df(Phi0) w for every transverse row.
inline FieldState apply_Ltw(const FieldState& w, const WaveProfile& p) {
    RowSpectral rs(w.gx, w.rows());
    FieldState out(w.gx, w.gy);
    rs.apply_constant(w.values.data(), out.values.data(), p.c0, 1.0);
    for (std::size_t j = 0; j < w.rows(); ++j) {
        const double* wr = w.row(j);
        double* o = out.row(j);
        for (std::size_t i = 0; i < w.nx(); ++i) o[i] += p.df0[i] * wr[i];
    }
    return out;
}

// Per-row coefficients <w(., y), psi_tw>.
inline TransverseField psi_coefficients(const FieldState& w, const WaveProfile& p) {
    TransverseField c(w.gy);
    for (std::size_t j = 0; j < w.rows(); ++j) c[j] = p.inner(w.row(j), p.psi_tw.data());
    return c;
}

inline FieldState project_Ptw(const FieldState& w, const WaveProfile& p) {
    FieldState out(w.gx, w.gy);
    for (std::size_t j = 0; j < w.rows(); ++j) {
        const double c = p.inner(w.row(j), p.psi_tw.data());
        double* o = out.row(j);
        for (std::size_t i = 0; i < w.nx(); ++i) o[i] = c * p.dphi0[i];
    }
    return out;
}

inline FieldState project_Ptw_perp(const FieldState& w, const WaveProfile& p) {
    FieldState out = project_Ptw(w, p);
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = w.values[i] - out.values[i];
    return out;
}

struct SpectralGap {
    cplx lambda0;
    double gap = 0.0;
    Eigen::VectorXcd eigenvalues;
};

inline SpectralGap spectral_gap_estimate(const WaveProfile& p) {
    if (p.grid.n > 4096) throw std::invalid_argument("spectral_gap_estimate: n_x above dense budget 4096");
    const Eigen::MatrixXd A = ltw_dense_matrix(p);
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    if (es.info() != Eigen::Success) throw std::runtime_error("spectral_gap_estimate: eigensolve failed");
    SpectralGap out;
    out.eigenvalues = es.eigenvalues();
    Eigen::Index i0 = 0;
    for (Eigen::Index i = 1; i < out.eigenvalues.size(); ++i)
        if (std::abs(out.eigenvalues[i]) < std::abs(out.eigenvalues[i0])) i0 = i;
    out.lambda0 = out.eigenvalues[i0];
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < out.eigenvalues.size(); ++i)
        if (i != i0) mx = std::max(mx, out.eigenvalues[i].real());
    out.gap = -mx;
    return out;
}

} // namespace stochwave

#pragma once

#include "stochwave/spectral.hpp"
#include "stochwave/wave.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace stochwave {

// Smooth cutoff: chi(z) = 1/4 for z <= 1/4, chi(z) = z for z >= 1/2, C^infinity
// in between via the standard e^{-1/s} transition.
inline double cutoff_chi(double z) {
    if (z <= 0.25) return 0.25;
    if (z >= 0.5) return z;
    const double s = (z - 0.25) / 0.25;
    const double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
    return 0.25 + (z - 0.25) * a / (a + b);
}

inline double upsilon_of(double inner) { return -1.0 / cutoff_chi(inner); }

struct PhaseState {
    TransverseField theta;
    FieldState v;
    double gamma = 0.0; // global phase c0 t
};

struct PhaseExtraction {
    PhaseState state;
    bool left_tube = false;
    int iterations = 0;        // max over rows
    double max_residual = 0.0; // max_y |F(theta(y))|
};

// Per-row evaluation of T_{gamma+theta}Phi0 and the shifted test function
// T_gamma psi_tw, both on the lattice.
class PhaseWorkspace {
public:
    explicit PhaseWorkspace(const WaveProfile& p) : p_(&p), sh_(p), phi_(p.grid.n), dphi_(p.grid.n), ddphi_(p.grid.n) {}

    const WaveProfile& profile() const { return *p_; }

    // psi_gamma(x) = psi_tw(x - gamma); exact reuse of psi_tw when gamma = 0.
    const std::vector<double>& test_function(double gamma) {
        if (gamma == 0.0) return p_->psi_tw;
        if (gamma != psi_gamma_) {
            psi_g_.resize(p_->grid.n);
            sh_.eval(gamma, phi_.data(), dphi_.data(), nullptr);
            const double scale = p_->psi_scale;
            for (std::size_t i = 0; i < p_->grid.n; ++i)
                psi_g_[i] = scale * std::exp(p_->c0 * (p_->grid.x(i) - gamma)) * dphi_[i];
            psi_gamma_ = gamma;
        }
        return psi_g_;
    }

    void profile_at(double shift, bool second = false) {
        sh_.eval(shift, phi_.data(), dphi_.data(), second ? ddphi_.data() : nullptr);
    }
    const std::vector<double>& phi() const { return phi_; }
    const std::vector<double>& dphi() const { return dphi_; }
    const std::vector<double>& ddphi() const { return ddphi_; }

private:
    const WaveProfile* p_;
    ProfileShifter sh_;
    std::vector<double> phi_, dphi_, ddphi_, psi_g_;
    double psi_gamma_ = std::numeric_limits<double>::quiet_NaN();
};

// Solves <u(., y) - T_{gamma+theta}Phi0, T_gamma psi_tw> = 0 for theta(y) by
// Newton's method, theta <- theta + Upsilon(theta) F(theta), warm-started from
// prev.  v is returned in the co-moving coordinates, v = T_{-gamma}(u - T_{gamma+theta}Phi0).
inline PhaseExtraction extract_phase(const FieldState& u, PhaseWorkspace& ws, const TransverseField& prev,
                                     double gamma = 0.0, double tol = 1e-10, int max_iter = 50) {
    const WaveProfile& p = ws.profile();
    const std::size_t nx = u.nx(), nr = u.rows();
    const double dx = p.grid.dx();
    const auto& psi = ws.test_function(gamma);
    PhaseExtraction out;
    out.state.theta = prev;
    out.state.v = FieldState(u.gx, u.gy);
    out.state.gamma = gamma;
    for (std::size_t j = 0; j < nr; ++j) {
        const double* ur = u.row(j);
        double th = prev[j];
        double F = 0.0;
        int it = 0;
        bool ok = false;
        for (; it <= max_iter; ++it) {
            ws.profile_at(gamma + th);
            const auto& ph = ws.phi();
            const auto& dph = ws.dphi();
            F = 0.0;
            double J = 0.0;
            for (std::size_t i = 0; i < nx; ++i) {
                F += (ur[i] - ph[i]) * psi[i];
                J += dph[i] * psi[i];
            }
            F *= dx;
            J *= dx;
            if (std::abs(F) < tol) {
                ok = true;
                break;
            }
            if (it == max_iter) break;
            th += upsilon_of(J) * F;
            if (!std::isfinite(th)) break;
        }
        out.iterations = std::max(out.iterations, it);
        out.max_residual = std::max(out.max_residual, std::abs(F));
        if (!ok) out.left_tube = true;
        out.state.theta[j] = th;
        double* vr = out.state.v.row(j);
        const auto& ph = ws.phi();
        for (std::size_t i = 0; i < nx; ++i) vr[i] = ur[i] - ph[i];
    }
    if (gamma != 0.0) {
        RowSpectral rs(u.gx, nr);
        rs.shift_uniform(out.state.v.values.data(), out.state.v.values.data(), -gamma);
    }
    return out;
}

inline PhaseExtraction extract_phase(const FieldState& u, const WaveProfile& p, const TransverseField& prev,
                                     double gamma = 0.0) {
    PhaseWorkspace ws(p);
    return extract_phase(u, ws, prev, gamma);
}

// u = T_{gamma+theta}Phi0 + T_gamma v.
inline FieldState reconstruct_u(const PhaseState& s, PhaseWorkspace& ws) {
    const std::size_t nx = s.v.nx(), nr = s.v.rows();
    FieldState u = s.v;
    if (s.gamma != 0.0) {
        RowSpectral rs(s.v.gx, nr);
        rs.shift_uniform(u.values.data(), u.values.data(), s.gamma);
    }
    for (std::size_t j = 0; j < nr; ++j) {
        ws.profile_at(s.gamma + s.theta[j]);
        double* ur = u.row(j);
        for (std::size_t i = 0; i < nx; ++i) ur[i] += ws.phi()[i];
    }
    return u;
}

inline FieldState reconstruct_u(const PhaseState& s, const WaveProfile& p) {
    PhaseWorkspace ws(p);
    return reconstruct_u(s, ws);
}

// <T_theta Phi0', psi_tw> tabulated over a theta list.
inline std::vector<double> shifted_derivative_pairing(const WaveProfile& p, const std::vector<double>& thetas) {
    PhaseWorkspace ws(p);
    std::vector<double> out;
    for (double th : thetas) {
        ws.profile_at(th);
        out.push_back(p.inner(ws.dphi().data(), p.psi_tw.data()));
    }
    return out;
}

// max |Delta_y T_theta Phi0 + T_theta Phi0' Delta_y theta - T_theta Phi0'' |grad theta|^2|
// with every transverse derivative taken spectrally on the profile lattice.
inline double phase_identity_residual(const WaveProfile& p, const TransverseField& theta) {
    const TransverseGrid& gy = theta.gy;
    const std::size_t nx = p.grid.n, nr = gy.points();
    PhaseWorkspace ws(p);
    FieldState F(p.grid, gy), d1(p.grid, gy), d2(p.grid, gy);
    for (std::size_t j = 0; j < nr; ++j) {
        ws.profile_at(theta[j], true);
        std::copy(ws.phi().begin(), ws.phi().end(), F.row(j));
        std::copy(ws.dphi().begin(), ws.dphi().end(), d1.row(j));
        std::copy(ws.ddphi().begin(), ws.ddphi().end(), d2.row(j));
    }
    const FieldState lap = transverse_laplacian(F);
    TransverseSpectral ts(gy);
    std::vector<double> lth(nr), g2(nr);
    ts.laplacian(theta.values.data(), lth.data());
    ts.grad_squared(theta.values.data(), g2.data());
    double r = 0.0;
    for (std::size_t j = 0; j < nr; ++j)
        for (std::size_t i = 0; i < nx; ++i)
            r = std::max(r, std::abs(lap.at(i, j) + d1.at(i, j) * lth[j] - d2.at(i, j) * g2[j]));
    return r;
}

} // namespace stochwave

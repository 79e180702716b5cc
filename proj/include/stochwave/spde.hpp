#pragma once

#include "stochwave/diagnostics.hpp"
#include "stochwave/noise.hpp"
#include "stochwave/norms.hpp"
#include "stochwave/phase.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>
#include <string>

namespace stochwave {

enum class Frame { Lab, Comoving };
enum class Integrator { SemiImplicitSpectral, LieSplitting };

struct SimConfig {
    double dt = 0.05;
    double T = 10.0;
    double sigma = 0.0;
    double k = 1.0;    // Sobolev index of the diagnostics
    double mu = 0.25;  // decay weight, see decay_weight(d)
    double eta = 1.0;  // exit threshold
    Frame frame = Frame::Comoving;
    Integrator integrator = Integrator::SemiImplicitSpectral;
    std::size_t output_every = 1;
    std::size_t clamp_cells = 2;
    double blowup_ceiling = 10.0;

    std::size_t steps() const { return static_cast<std::size_t>(std::llround(T / dt)); }
    void validate(int d) const {
        if (!(dt > 0.0)) throw std::invalid_argument("sim: dt must be positive");
        if (!(T > 0.0)) throw std::invalid_argument("sim: T must be positive");
        if (sigma < 0.0) throw std::invalid_argument("sim: sigma must be nonnegative");
        if (k < 0.0) throw std::invalid_argument("sim: k must be nonnegative");
        if (!decay_weight_valid(d, mu))
            throw std::invalid_argument("sim: mu does not match the decay weight for d = " + std::to_string(d));
        if (!output_every) throw std::invalid_argument("sim: output_every must be positive");
    }
};

struct BlowUp : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exact semigroup of L = L_tw + Delta_y: dense exp(L_tw dt) along x composed
// with the transverse heat multiplier; the two factors commute.
class LinearisedPropagator {
public:
    LinearisedPropagator() = default;
    LinearisedPropagator(const WaveProfile& p, const TransverseGrid& gy, double dt)
        : gx_(p.grid), gy_(gy), field_(field_fourier(p.grid, gy)) {
        if (p.grid.n > 1024) throw std::invalid_argument("LinearisedPropagator: n_x above dense budget 1024");
        Ex_ = (ltw_dense_matrix(p) * dt).exp();
        heat_.resize(field_.spec_size());
        const int r = field_.rank();
        for (std::size_t m = 0; m < heat_.size(); ++m) {
            double ky2 = 0.0;
            for (int a = 0; a < r - 1; ++a) ky2 += field_.k(a)[m] * field_.k(a)[m];
            heat_[m] = std::exp(-ky2 * dt);
        }
    }
    void apply(FieldState& w) {
        const std::size_t N = w.size();
        std::copy(w.values.begin(), w.values.end(), field_.real());
        field_.forward();
        cplx* s = field_.spec();
        for (std::size_t m = 0; m < heat_.size(); ++m) s[m] *= heat_[m];
        field_.inverse();
        std::copy(field_.real(), field_.real() + N, w.values.begin());
        Eigen::Map<Eigen::MatrixXd> W(w.values.data(), static_cast<Eigen::Index>(gx_.n),
                                      static_cast<Eigen::Index>(w.rows()));
        tmp_.noalias() = Ex_ * W;
        W = tmp_;
    }
    const Eigen::MatrixXd& x_part() const { return Ex_; }

private:
    Grid1D gx_;
    TransverseGrid gy_;
    Fourier field_;
    Eigen::MatrixXd Ex_, tmp_;
    std::vector<double> heat_;
};

// Exponential Euler for dw/dt = (Delta + c d_x) w + N: w <- E w + dt phi1(A dt) N
// with E = exp(A dt), both Fourier multipliers on the whole field.  Any
// stationary state of the semi-discrete equation is a fixed point.
class FourierPropagator {
public:
    FourierPropagator() = default;
    FourierPropagator(const Grid1D& gx, const TransverseGrid& gy, double c, double dt)
        : dt_(dt), field_(field_fourier(gx, gy)), aux_(field_fourier(gx, gy)) {
        mult_.resize(field_.spec_size());
        phi1_.resize(field_.spec_size());
        const int r = field_.rank();
        const auto& kx = field_.k(r - 1);
        const auto& nyq = field_.nyquist(r - 1);
        for (std::size_t m = 0; m < mult_.size(); ++m) {
            const cplx z = cplx(-field_.k2()[m], nyq[m] ? 0.0 : c * kx[m]) * dt;
            mult_[m] = std::exp(z);
            phi1_[m] = std::abs(z) < 1e-4 ? 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 : (std::exp(z) - 1.0) / z;
        }
    }
    void apply(FieldState& w) {
        std::copy(w.values.begin(), w.values.end(), field_.real());
        field_.forward();
        cplx* s = field_.spec();
        for (std::size_t m = 0; m < mult_.size(); ++m) s[m] *= mult_[m];
        field_.inverse();
        std::copy(field_.real(), field_.real() + w.size(), w.values.begin());
    }
    void etd(FieldState& w, const FieldState& nl) {
        std::copy(w.values.begin(), w.values.end(), field_.real());
        std::copy(nl.values.begin(), nl.values.end(), aux_.real());
        field_.forward();
        aux_.forward();
        cplx* s = field_.spec();
        const cplx* a = aux_.spec();
        for (std::size_t m = 0; m < mult_.size(); ++m) s[m] = mult_[m] * s[m] + dt_ * phi1_[m] * a[m];
        field_.inverse();
        std::copy(field_.real(), field_.real() + w.size(), w.values.begin());
    }

private:
    double dt_ = 0.0;
    Fourier field_, aux_;
    std::vector<cplx> mult_, phi1_;
};

inline void guard_blowup(const FieldState& w, double ceiling, const char* what) {
    for (double v : w.values)
        if (!std::isfinite(v) || std::abs(v) > ceiling) throw BlowUp(std::string(what) + ": blow-up guard triggered");
}

// Direct integration of du = [Delta u + f(u)] dt + sigma g(u) dW, in the lab
// frame or the co-moving frame (extra c0 d_x u, noise T_{-gamma} dW).  The
// field is advanced as w = u - R with R the exact reference front for the
// frame (Phi0, or T_{c0 t}Phi0 in the lab frame), so no spectral transform
// ever sees the non-decaying profile.
class SpdeStepper {
public:
    SpdeStepper(const SimConfig& cfg, const WaveProfile& p, const TransverseGrid& gy, NoiseSampler* noise)
        : cfg_(cfg), p_(&p), gy_(gy), noise_(noise), ws_(p), ref_(p.grid.n), fref_(p.grid.n) {
        if (cfg.frame == Frame::Lab && cfg.integrator == Integrator::LieSplitting)
            throw std::invalid_argument("lie-splitting linearises about the co-moving front; use the co-moving frame");
        if (cfg.integrator == Integrator::LieSplitting) lin_ = LinearisedPropagator(p, gy, cfg.dt);
        else four_ = FourierPropagator(p.grid, gy, cfg.frame == Frame::Comoving ? p.c0 : 0.0, cfg.dt);
        set_reference(0.0);
    }

    double time() const { return t_; }
    void set_time(double t) { t_ = t; }
    double gamma() const { return p_->c0 * t_; }

    // Reference front at the current time, on the x lattice.
    const std::vector<double>& reference() {
        set_reference(t_);
        return ref_;
    }

    void step(FieldState& u, RngStream& rng) {
        const std::size_t nx = u.nx(), nr = u.rows();
        const double dt = cfg_.dt;
        set_reference(t_);
        FieldState w(u.gx, u.gy);
        for (std::size_t j = 0; j < nr; ++j)
            for (std::size_t i = 0; i < nx; ++i) w.at(i, j) = u.at(i, j) - ref_[i];

        FieldState gdW;
        const bool noisy = cfg_.sigma > 0.0 && noise_;
        if (noisy) {
            // Co-moving frame sees T_{-gamma} dW; dropped for x-translation-invariant Q.
            double shift = 0.0;
            if (cfg_.frame == Frame::Comoving && noise_->spec().family != NoiseFamily::WeightedTranslationInvariant)
                shift = gamma();
            noise_->sample_raw(dt, rng, dW_, shift);
            noise_->apply_g(u, dW_, gdW);
        }
        const bool lie = cfg_.integrator == Integrator::LieSplitting;
        FieldState nl(u.gx, u.gy);
        for (std::size_t j = 0; j < nr; ++j) {
            double* wr = w.row(j);
            double* nr_ = nl.row(j);
            const double* ur = u.row(j);
            for (std::size_t i = 0; i < nx; ++i) {
                nr_[i] = p_->f(ur[i]) - fref_[i];
                if (lie) nr_[i] -= p_->df0[i] * wr[i];
                if (noisy) wr[i] += cfg_.sigma * gdW.at(i, j);
            }
        }
        if (lie) {
            for (std::size_t z = 0; z < w.size(); ++z) w.values[z] += dt * nl.values[z];
            lin_.apply(w);
        } else {
            four_.etd(w, nl);
        }
        clamp(w);
        guard_blowup(w, cfg_.blowup_ceiling, "step_spde");
        t_ += dt;
        set_reference(t_);
        for (std::size_t j = 0; j < nr; ++j)
            for (std::size_t i = 0; i < nx; ++i) u.at(i, j) = ref_[i] + w.at(i, j);
    }

    const FieldState& last_increment() const { return dW_; }

private:
    void set_reference(double t) {
        const double shift = cfg_.frame == Frame::Lab ? p_->c0 * t : 0.0;
        if (shift == ref_shift_ && have_ref_) return;
        if (shift == 0.0) ref_ = p_->phi0;
        else {
            ws_.profile_at(shift);
            ref_ = ws_.phi();
        }
        for (std::size_t i = 0; i < ref_.size(); ++i) fref_[i] = p_->f(ref_[i]);
        ref_shift_ = shift;
        have_ref_ = true;
    }
    void clamp(FieldState& w) const {
        const std::size_t c = std::min(cfg_.clamp_cells, w.nx() / 2);
        for (std::size_t j = 0; j < w.rows(); ++j) {
            double* r = w.row(j);
            for (std::size_t i = 0; i < c; ++i) r[i] = r[w.nx() - 1 - i] = 0.0;
        }
    }

    SimConfig cfg_;
    const WaveProfile* p_;
    TransverseGrid gy_;
    NoiseSampler* noise_;
    PhaseWorkspace ws_;
    LinearisedPropagator lin_;
    FourierPropagator four_;
    std::vector<double> ref_, fref_;
    double ref_shift_ = 0.0;
    bool have_ref_ = false;
    double t_ = 0.0;
    FieldState dW_;
};

// Per-row terms of the frozen-frame system assembled at one state.
struct FrozenTerms {
    FieldState J;          // f(v+T_theta Phi0) - f(T_theta Phi0) - Df(Phi0) v + |grad theta|^2 T_theta Phi0''
    FieldState Jtr;        // -1/2 T_theta Phi0'' Upsilon^2 S(y)
    TransverseField Ups;   // Upsilon(theta(y))
    TransverseField Nsig;  // N_sigma
    TransverseField trace; // S(y)
    FieldState dphi;       // T_theta Phi0'
    FieldState ddphi;      // T_theta Phi0''
    FieldState u;          // T_theta Phi0 + v (co-moving)
};

// Frozen-frame (v, theta) system
//   dv     = [L v + calN_sigma] dt + sigma calM T_{-gamma} dW
//   dtheta = [Delta_y theta + N_sigma] dt + sigma M T_{-gamma} dW
// advanced by the exact linear semigroups plus explicit Euler-Maruyama for the
// rest.  P_tw calN_sigma = P_tw calM = 0 hold to rounding on the lattice.
class FrozenStepper {
public:
    FrozenStepper(const SimConfig& cfg, const WaveProfile& p, const TransverseGrid& gy, NoiseSampler* noise)
        : cfg_(cfg), p_(&p), gy_(gy), noise_(noise), ws_(p), trans_(gy) {
        if (cfg.integrator == Integrator::LieSplitting) lin_ = LinearisedPropagator(p, gy, cfg.dt);
        else four_ = FourierPropagator(p.grid, gy, p.c0, cfg.dt);
    }

    FrozenTerms terms(const PhaseState& s) {
        const std::size_t nx = p_->grid.n, nr = gy_.points();
        const double dx = p_->grid.dx();
        FrozenTerms t;
        t.J = FieldState(p_->grid, gy_);
        t.Jtr = FieldState(p_->grid, gy_);
        t.dphi = FieldState(p_->grid, gy_);
        t.ddphi = FieldState(p_->grid, gy_);
        t.u = FieldState(p_->grid, gy_);
        t.Ups = TransverseField(gy_);
        t.Nsig = TransverseField(gy_);
        std::vector<double> g2(nr);
        trans_.grad_squared(s.theta.values.data(), g2.data());
        for (std::size_t j = 0; j < nr; ++j) {
            ws_.profile_at(s.theta[j], true);
            const auto& ph = ws_.phi();
            const auto& d1 = ws_.dphi();
            const auto& d2 = ws_.ddphi();
            const double* vr = s.v.row(j);
            double pair = 0.0;
            for (std::size_t i = 0; i < nx; ++i) {
                const double uu = ph[i] + vr[i];
                t.u.at(i, j) = uu;
                t.dphi.at(i, j) = d1[i];
                t.ddphi.at(i, j) = d2[i];
                t.J.at(i, j) = p_->f(uu) - p_->f(ph[i]) - p_->df0[i] * vr[i] + g2[j] * d2[i];
                pair += d1[i] * p_->psi_tw[i];
            }
            t.Ups[j] = upsilon_of(pair * dx);
        }
        const bool noisy = cfg_.sigma > 0.0 && noise_;
        t.trace = noisy ? noise_->psi_trace(t.u, *p_, noise_shift(s.gamma)) : TransverseField(gy_);
        const double s2 = cfg_.sigma * cfg_.sigma;
        for (std::size_t j = 0; j < nr; ++j) {
            double acc = 0.0;
            const double a = -0.5 * t.Ups[j] * t.Ups[j] * t.trace[j];
            for (std::size_t i = 0; i < nx; ++i) {
                t.Jtr.at(i, j) = a * t.ddphi.at(i, j);
                acc += (t.J.at(i, j) + s2 * t.Jtr.at(i, j)) * p_->psi_tw[i];
            }
            t.Nsig[j] = t.Ups[j] * acc * dx;
        }
        return t;
    }

    void step(PhaseState& s, RngStream& rng) {
        const std::size_t nx = p_->grid.n, nr = gy_.points();
        const double dt = cfg_.dt, dx = p_->grid.dx();
        const double s2 = cfg_.sigma * cfg_.sigma;
        FrozenTerms t = terms(s);
        const bool noisy = cfg_.sigma > 0.0 && noise_;
        FieldState gdW;
        if (noisy) {
            noise_->sample_raw(dt, rng, dW_, noise_shift(s.gamma));
            noise_->apply_g(t.u, dW_, gdW);
        }
        const bool lie = cfg_.integrator == Integrator::LieSplitting;
        FieldState drift(p_->grid, gy_);
        for (std::size_t j = 0; j < nr; ++j) {
            double M = 0.0;
            if (noisy) {
                for (std::size_t i = 0; i < nx; ++i) M += gdW.at(i, j) * p_->psi_tw[i];
                M *= t.Ups[j] * dx;
            }
            double* vr = s.v.row(j);
            double* dr = drift.row(j);
            for (std::size_t i = 0; i < nx; ++i) {
                dr[i] = t.J.at(i, j) + s2 * t.Jtr.at(i, j) + t.Nsig[j] * t.dphi.at(i, j);
                if (!lie) dr[i] += p_->df0[i] * vr[i];
                if (noisy) vr[i] += cfg_.sigma * (gdW.at(i, j) + M * t.dphi.at(i, j));
            }
            s.theta[j] += dt * t.Nsig[j] + cfg_.sigma * M;
        }
        if (lie) {
            for (std::size_t z = 0; z < s.v.size(); ++z) s.v.values[z] += dt * drift.values[z];
            lin_.apply(s.v);
        } else {
            four_.etd(s.v, drift);
        }
        trans_.heat(s.theta.values.data(), s.theta.values.data(), dt);
        guard_blowup(s.v, cfg_.blowup_ceiling, "step_frozen_frame");
        for (double th : s.theta.values)
            if (!std::isfinite(th) || std::abs(th) > cfg_.blowup_ceiling)
                throw BlowUp("step_frozen_frame: phase blow-up guard triggered");
        s.gamma += p_->c0 * dt;
    }

    const FieldState& last_increment() const { return dW_; }

private:
    double noise_shift(double gamma) const {
        return noise_ && noise_->spec().family != NoiseFamily::WeightedTranslationInvariant ? gamma : 0.0;
    }

    SimConfig cfg_;
    const WaveProfile* p_;
    TransverseGrid gy_;
    NoiseSampler* noise_;
    PhaseWorkspace ws_;
    TransverseSpectral trans_;
    LinearisedPropagator lin_;
    FourierPropagator four_;
    FieldState dW_;
};

// Norms entering N_{mu;k}: (||v||_{H^k}, ||theta||_{H^k}, ||v||_{H^{k+1}}, ||grad theta||_{H^k}).
struct StateNorms {
    double v = 0.0, theta = 0.0, v1 = 0.0, grad = 0.0;
};

inline StateNorms state_norms(NormWorkspace& nw, const PhaseState& s, double k) {
    const auto [a, b] = nw.field_pair(s.v.values, k);
    const auto [c, d] = nw.transverse_pair(s.theta.values, k);
    return {std::sqrt(a), std::sqrt(c), std::sqrt(b), std::sqrt(d)};
}

inline double orthogonality_defect(const PhaseState& s, const WaveProfile& p) {
    double m = 0.0;
    for (std::size_t j = 0; j < s.v.rows(); ++j) m = std::max(m, std::abs(p.inner(s.v.row(j), p.psi_tw.data())));
    return m;
}

} // namespace stochwave

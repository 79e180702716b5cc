#pragma once

#include "stochwave/norms.hpp"
#include "stochwave/rng.hpp"
#include "stochwave/spectral.hpp"
#include "stochwave/wave.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochwave {

enum class NoiseFamily { WeightedTranslationInvariant, TransverseLocalised, TraceClass };

inline const char* to_string(NoiseFamily f) {
    switch (f) {
    case NoiseFamily::WeightedTranslationInvariant: return "weighted";
    case NoiseFamily::TransverseLocalised: return "transverse";
    case NoiseFamily::TraceClass: return "trace";
    }
    return "?";
}

struct NoiseSpec {
    NoiseFamily family = NoiseFamily::WeightedTranslationInvariant;
    double ell = 1.0;        // Gaussian correlation length (family 1 kernel; x-kernel of family 2)
    bool weighted = true;    // family 1: weight exp(-|y|^2), else 1
    double rho = 0.5;        // lambda_j = rho^j (families 2, 3)
    double width_y = 1.0;    // Hermite width in y
    double width_x = 1.0;    // Hermite width in x (family 3)
    std::size_t modes = 0;   // 0: smallest count with rho^L < 1e-8
    Polynomial gtilde{{0.0, 1.0, -1.0}}; // u(1-u)

    std::size_t mode_count() const {
        if (modes) return modes;
        return static_cast<std::size_t>(std::ceil(std::log(1e-8) / std::log(rho)));
    }
    void validate(double u_minus, double u_plus) const {
        if (!(ell > 0.0)) throw std::invalid_argument("noise: ell must be positive");
        if (family != NoiseFamily::WeightedTranslationInvariant) {
            if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("noise: rho must lie in (0,1)");
            if (!(width_x > 0.0 && width_y > 0.0)) throw std::invalid_argument("noise: Hermite widths must be positive");
        }
        if (std::abs(gtilde(u_minus)) > 1e-14 || std::abs(gtilde(u_plus)) > 1e-14)
            throw std::invalid_argument("noise: gtilde must vanish at u_minus and u_plus");
    }
};

// Orthonormal Hermite functions h_0..h_{n-1} at s.
inline void hermite_functions(double s, std::size_t n, double* out) {
    if (!n) return;
    out[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * s * s);
    if (n > 1) out[1] = std::numbers::sqrt2 * s * out[0];
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double kk = static_cast<double>(k);
        out[k + 1] = std::sqrt(2.0 / (kk + 1.0)) * s * out[k] - std::sqrt(kk / (kk + 1.0)) * out[k - 1];
    }
}

// Multi-indices in `axes` dimensions ordered by total degree, then
// lexicographically; the first `count` are returned.
inline std::vector<std::vector<int>> graded_multi_indices(int axes, std::size_t count) {
    std::vector<std::vector<int>> out;
    for (int deg = 0; out.size() < count; ++deg) {
        std::vector<int> idx(axes, 0);
        // Enumerate compositions of deg into `axes` parts, lexicographic descending in idx[0].
        std::function<void(int, int)> rec = [&](int a, int left) {
            if (out.size() >= count) return;
            if (a == axes - 1) {
                idx[a] = left;
                out.push_back(idx);
                return;
            }
            for (int v = left; v >= 0; --v) {
                idx[a] = v;
                rec(a + 1, left - v);
            }
        };
        rec(0, deg);
    }
    return out;
}

namespace detail {
inline double min_image(double d, double L) { return d - L * std::round(d / L); }
} // namespace detail

struct NoiseIncrement {
    FieldState dW;      // raw increment of the Q-Wiener process on the lattice
    FieldState gdW;     // g(u) dW
    TransverseField psi_proj; // <g(u) dW (., y), psi_tw>
};

// Precomputed sampler for one (spec, grid) pair.  Not thread-safe; each worker
// owns one.
class NoiseSampler {
public:
    NoiseSampler() = default;
    NoiseSampler(const NoiseSpec& spec, const Grid1D& gx, const TransverseGrid& gy, double u_minus = 0.0,
                 double u_plus = 1.0)
        : spec_(spec), gx_(gx), gy_(gy) {
        spec_.validate(u_minus, u_plus);
        const std::size_t nr = gy.points();
        weight_.assign(nr, 1.0);
        if (spec_.family == NoiseFamily::WeightedTranslationInvariant) {
            if (spec_.weighted)
                for (std::size_t j = 0; j < nr; ++j) weight_[j] = std::exp(-gy.radius2(j));
            field_ = field_fourier(gx, gy);
            build_kernel_full();
        } else {
            rows_ = RowSpectral(gx, nr);
            if (spec_.family == NoiseFamily::TransverseLocalised) {
                xfilter_ = row_fourier(gx, 1);
                build_kernel_x();
                build_modes_y();
            } else {
                build_modes_xy();
            }
        }
    }

    const NoiseSpec& spec() const { return spec_; }
    const std::vector<double>& weight() const { return weight_; }
    std::size_t modes() const { return lambda_.size(); }
    const std::vector<double>& lambdas() const { return lambda_; }
    // Mode tables: family 2 (rows x modes), family 3 (N x modes), mode-major.
    const std::vector<double>& mode_table() const { return mode_; }
    // DFT of the lattice kernel (family 1: full field, family 2: x-row).
    const std::vector<double>& kernel_spectrum() const { return qhat_; }
    const std::vector<double>& kernel_row() const { return cx_; }

    // Raw increment Delta W over a step dt.  For families 2-3 the increment is
    // reported in the frame shifted by gamma: (T_{-gamma} dW)(x) = dW(x + gamma).
    void sample_raw(double dt, RngStream& rng, FieldState& dW, double gamma = 0.0) {
        if (!(dt > 0.0)) throw std::invalid_argument("sample: dt must be positive");
        dW = FieldState(gx_, gy_);
        const std::size_t N = dW.size(), nx = gx_.n, nr = gy_.points();
        if (spec_.family == NoiseFamily::WeightedTranslationInvariant) {
            rng.fill_normal(field_.real(), N);
            field_.forward();
            cplx* s = field_.spec();
            for (std::size_t m = 0; m < field_.spec_size(); ++m) s[m] *= std::sqrt(dt * qhat_[m]);
            field_.inverse();
            std::copy(field_.real(), field_.real() + N, dW.values.begin());
            return;
        }
        const std::size_t L = lambda_.size();
        if (spec_.family == NoiseFamily::TransverseLocalised) {
            for (std::size_t l = 0; l < L; ++l) {
                rng.fill_normal(xfilter_.real(), nx);
                xfilter_.forward();
                cplx* s = xfilter_.spec();
                for (std::size_t m = 0; m < xfilter_.spec_size(); ++m) s[m] *= std::sqrt(dt * qhat_[m]);
                xfilter_.inverse();
                const double a = std::sqrt(lambda_[l]);
                const double* mu = mode_.data() + l * nr;
                for (std::size_t j = 0; j < nr; ++j) {
                    const double c = a * mu[j];
                    double* row = dW.row(j);
                    for (std::size_t i = 0; i < nx; ++i) row[i] += c * xfilter_.real()[i];
                }
            }
        } else {
            for (std::size_t l = 0; l < L; ++l) {
                const double c = std::sqrt(lambda_[l] * dt) * rng.normal();
                const double* mu = mode_.data() + l * N;
                for (std::size_t z = 0; z < N; ++z) dW.values[z] += c * mu[z];
            }
        }
        if (gamma != 0.0) rows_.shift_uniform(dW.values.data(), dW.values.data(), -gamma);
    }

    // g(u)[dW] = weight(y) gtilde(u) dW, pointwise.
    void apply_g(const FieldState& u, const FieldState& dW, FieldState& out) const {
        out = FieldState(gx_, gy_);
        for (std::size_t j = 0; j < u.rows(); ++j) {
            const double w = weight_[j];
            const double* ur = u.row(j);
            const double* dr = dW.row(j);
            double* o = out.row(j);
            for (std::size_t i = 0; i < gx_.n; ++i) o[i] = w * spec_.gtilde(ur[i]) * dr[i];
        }
    }

    NoiseIncrement sample(const FieldState& u, const WaveProfile& p, double dt, RngStream& rng, double gamma = 0.0) {
        NoiseIncrement inc;
        sample_raw(dt, rng, inc.dW, gamma);
        apply_g(u, inc.dW, inc.gdW);
        inc.psi_proj = psi_coefficients(inc.gdW, p);
        return inc;
    }

    // S(y) = sum_j <g(u) T_{-gamma} sqrt(Q) e_j, psi_tw>^2 on the lattice, i.e.
    // E <g(u) dW, psi_tw>^2 / dt for the sampled increments.
    TransverseField psi_trace(const FieldState& u, const WaveProfile& p, double gamma = 0.0) {
        const std::size_t nx = gx_.n, nr = gy_.points();
        const double dx = gx_.dx();
        TransverseField S(gy_);
        std::vector<double> a(nx * nr);
        for (std::size_t j = 0; j < nr; ++j)
            for (std::size_t i = 0; i < nx; ++i) a[i + nx * j] = weight_[j] * spec_.gtilde(u.at(i, j)) * p.psi_tw[i];
        if (spec_.family == NoiseFamily::TraceClass) {
            // <a, T_{-gamma} mu> = <T_gamma a, mu>
            if (gamma != 0.0) rows_.shift_uniform(a.data(), a.data(), gamma);
            const std::size_t N = nx * nr;
            for (std::size_t l = 0; l < lambda_.size(); ++l) {
                const double* mu = mode_.data() + l * N;
                for (std::size_t j = 0; j < nr; ++j) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < nx; ++i) acc += a[i + nx * j] * mu[i + nx * j];
                    acc *= dx;
                    S[j] += lambda_[l] * acc * acc;
                }
            }
            return S;
        }
        // Translation-invariant in x: dx^2 sum_{i,i'} a_i a_i' c(i - i').
        Fourier rf = row_fourier(gx_, nr);
        std::copy(a.begin(), a.end(), rf.real());
        rf.forward();
        const std::size_t h = rf.spec_size();
        const auto& wt = rf.weight();
        for (std::size_t j = 0; j < nr; ++j) {
            double acc = 0.0;
            for (std::size_t m = 0; m < h; ++m) acc += wt[m] * cxhat_[m] * std::norm(rf.spec()[j * h + m]);
            S[j] = acc * dx * dx / static_cast<double>(nx);
        }
        if (spec_.family == NoiseFamily::TransverseLocalised) {
            for (std::size_t j = 0; j < nr; ++j) {
                double lm = 0.0;
                for (std::size_t l = 0; l < lambda_.size(); ++l) lm += lambda_[l] * std::pow(mode_[l * nr + j], 2);
                S[j] *= lm;
            }
        }
        return S;
    }

    // Continuum eigenvalues q_m = dV * DFT(c)_m of the translation-invariant
    // kernel on the full lattice (family 1) or on the x-row (family 2).
    double cell_volume_full() const { return gx_.dx() * gy_.cell_volume(); }

    const Grid1D& gx() const { return gx_; }
    const TransverseGrid& gy() const { return gy_; }

private:
    // Gaussian kernel exp(-r^2/ell^2), sampled with minimum-image displacements.
    double kernel(double r2) const { return std::exp(-r2 / (spec_.ell * spec_.ell)); }

    static void check_and_clamp(std::vector<double>& q, const char* what) {
        double mx = 0.0;
        for (double v : q) mx = std::max(mx, std::abs(v));
        for (double& v : q) {
            if (v < -1e-12 * mx) throw std::runtime_error(std::string(what) + ": kernel spectrum significantly negative");
            if (v < 0.0) v = 0.0;
        }
    }

    void build_kernel_full() {
        const std::size_t nx = gx_.n, nr = gy_.points();
        double* r = field_.real();
        std::vector<std::size_t> idx(gy_.axes());
        for (std::size_t j = 0; j < nr; ++j) {
            gy_.unravel(j, idx.data());
            double ry2 = 0.0;
            for (int a = 0; a < gy_.axes(); ++a) {
                const double d = detail::min_image(static_cast<double>(idx[a]) * gy_.dy(), gy_.L);
                ry2 += d * d;
            }
            for (std::size_t i = 0; i < nx; ++i) {
                const double dxv = detail::min_image(static_cast<double>(i) * gx_.dx(), gx_.length());
                r[i + nx * j] = kernel(dxv * dxv + ry2);
            }
        }
        cx_.assign(r, r + nx); // row through the origin, c(., 0)
        field_.forward();
        qhat_.resize(field_.spec_size());
        for (std::size_t m = 0; m < qhat_.size(); ++m) qhat_[m] = field_.spec()[m].real();
        check_and_clamp(qhat_, "weighted noise");
        row_kernel_spectrum();
    }

    void build_kernel_x() {
        const std::size_t nx = gx_.n;
        cx_.resize(nx);
        for (std::size_t i = 0; i < nx; ++i) {
            const double d = detail::min_image(static_cast<double>(i) * gx_.dx(), gx_.length());
            cx_[i] = kernel(d * d);
        }
        row_kernel_spectrum();
        qhat_ = cxhat_;
    }

    void row_kernel_spectrum() {
        Fourier f = row_fourier(gx_, 1);
        std::copy(cx_.begin(), cx_.end(), f.real());
        f.forward();
        cxhat_.resize(f.spec_size());
        for (std::size_t m = 0; m < cxhat_.size(); ++m) cxhat_[m] = f.spec()[m].real();
        check_and_clamp(cxhat_, "noise x-kernel");
    }

    void check_resolution(std::size_t order, double w, double spacing, double half_extent, const char* axis) const {
        const double s = std::sqrt(2.0 * static_cast<double>(order) + 1.0);
        if ((s + 4.0) * w >= half_extent || s / w > 0.8 * std::numbers::pi / spacing)
            throw std::invalid_argument(std::string("noise: mode truncation exceeds grid resolution along ") + axis +
                                        " (order " + std::to_string(order) + ")");
    }

    void build_modes_y() {
        const std::size_t L = spec_.mode_count(), nr = gy_.points();
        const int ax = gy_.axes();
        const auto mi = graded_multi_indices(ax, L);
        int maxdeg = 0;
        for (const auto& m : mi)
            for (int v : m) maxdeg = std::max(maxdeg, v);
        check_resolution(static_cast<std::size_t>(maxdeg), spec_.width_y, gy_.dy(), 0.5 * gy_.L, "y");
        const double w = spec_.width_y;
        std::vector<double> hy(gy_.n * (maxdeg + 1));
        for (std::size_t j = 0; j < gy_.n; ++j) hermite_functions(gy_.y(j) / w, maxdeg + 1, hy.data() + j * (maxdeg + 1));
        lambda_.resize(L);
        mode_.assign(L * nr, 0.0);
        std::vector<std::size_t> idx(ax);
        for (std::size_t l = 0; l < L; ++l) {
            lambda_[l] = std::pow(spec_.rho, static_cast<double>(l));
            for (std::size_t j = 0; j < nr; ++j) {
                gy_.unravel(j, idx.data());
                double v = 1.0;
                for (int a = 0; a < ax; ++a) v *= hy[idx[a] * (maxdeg + 1) + mi[l][a]] / std::sqrt(w);
                mode_[l * nr + j] = v;
            }
        }
    }

    void build_modes_xy() {
        const std::size_t L = spec_.mode_count(), nr = gy_.points(), nx = gx_.n, N = nx * nr;
        const int ax = gy_.axes();
        const auto mi = graded_multi_indices(ax + 1, L); // axis 0 is x
        int dx_max = 0, dy_max = 0;
        for (const auto& m : mi) {
            dx_max = std::max(dx_max, m[0]);
            for (int a = 1; a <= ax; ++a) dy_max = std::max(dy_max, m[a]);
        }
        check_resolution(static_cast<std::size_t>(dx_max), spec_.width_x, gx_.dx(),
                         std::min(-gx_.x_min, gx_.x_max), "x");
        check_resolution(static_cast<std::size_t>(dy_max), spec_.width_y, gy_.dy(), 0.5 * gy_.L, "y");
        const double wx = spec_.width_x, wy = spec_.width_y;
        std::vector<double> hx(nx * (dx_max + 1)), hy(gy_.n * (dy_max + 1));
        for (std::size_t i = 0; i < nx; ++i) hermite_functions(gx_.x(i) / wx, dx_max + 1, hx.data() + i * (dx_max + 1));
        for (std::size_t j = 0; j < gy_.n; ++j) hermite_functions(gy_.y(j) / wy, dy_max + 1, hy.data() + j * (dy_max + 1));
        lambda_.resize(L);
        mode_.assign(L * N, 0.0);
        std::vector<std::size_t> idx(ax);
        for (std::size_t l = 0; l < L; ++l) {
            lambda_[l] = std::pow(spec_.rho, static_cast<double>(l));
            for (std::size_t j = 0; j < nr; ++j) {
                gy_.unravel(j, idx.data());
                double vy = 1.0;
                for (int a = 0; a < ax; ++a) vy *= hy[idx[a] * (dy_max + 1) + mi[l][a + 1]] / std::sqrt(wy);
                for (std::size_t i = 0; i < nx; ++i)
                    mode_[l * N + i + nx * j] = vy * hx[i * (dx_max + 1) + mi[l][0]] / std::sqrt(wx);
            }
        }
    }

    NoiseSpec spec_;
    Grid1D gx_;
    TransverseGrid gy_;
    std::vector<double> weight_;
    Fourier field_;
    Fourier xfilter_;
    RowSpectral rows_;
    std::vector<double> qhat_;  // DFT of the lattice kernel used for sampling
    std::vector<double> cx_;    // c(., 0) along x
    std::vector<double> cxhat_; // DFT of cx_
    std::vector<double> lambda_;
    std::vector<double> mode_;
};

namespace detail {

// Full-lattice |DFT|^2 of a real field, from its half spectrum.
inline std::vector<double> full_power(Fourier& f, const std::vector<int>& dims) {
    const int r = static_cast<int>(dims.size());
    std::size_t N = 1;
    for (int d : dims) N *= static_cast<std::size_t>(d);
    const std::size_t nl = static_cast<std::size_t>(dims.back()), hl = nl / 2 + 1;
    std::vector<double> out(N);
    std::vector<std::size_t> idx(r);
    for (std::size_t m = 0; m < N; ++m) {
        std::size_t rem = m;
        for (int a = r - 1; a >= 0; --a) {
            idx[a] = rem % static_cast<std::size_t>(dims[a]);
            rem /= static_cast<std::size_t>(dims[a]);
        }
        if (idx[r - 1] >= hl)
            for (int a = 0; a < r; ++a) idx[a] = (static_cast<std::size_t>(dims[a]) - idx[a]) % static_cast<std::size_t>(dims[a]);
        std::size_t h = 0;
        for (int a = 0; a < r - 1; ++a) h = h * static_cast<std::size_t>(dims[a]) + idx[a];
        h = h * hl + idx[r - 1];
        out[m] = std::norm(f.spec()[h]);
    }
    return out;
}

// (1+|xi|^2)^k on the full lattice.
inline std::vector<double> full_sobolev_weight(const std::vector<int>& dims, const std::vector<double>& lengths, double k) {
    const int r = static_cast<int>(dims.size());
    std::size_t N = 1;
    for (int d : dims) N *= static_cast<std::size_t>(d);
    std::vector<double> out(N);
    for (std::size_t m = 0; m < N; ++m) {
        std::size_t rem = m;
        double k2 = 0.0;
        for (int a = r - 1; a >= 0; --a) {
            long j = static_cast<long>(rem % static_cast<std::size_t>(dims[a]));
            rem /= static_cast<std::size_t>(dims[a]);
            if (j > dims[a] / 2) j -= dims[a];
            const double kv = 2.0 * std::numbers::pi * static_cast<double>(j) / lengths[a];
            k2 += kv * kv;
        }
        out[m] = std::pow(1.0 + k2, k);
    }
    return out;
}

// Full-lattice index of (m - j) for linear indices m and j.
inline std::size_t lattice_sub(std::size_t m, std::size_t j, const std::vector<int>& dims) {
    std::size_t out = 0, stride = 1;
    for (int a = static_cast<int>(dims.size()) - 1; a >= 0; --a) {
        const std::size_t n = static_cast<std::size_t>(dims[a]);
        const std::size_t ma = (m / stride) % n, ja = (j / stride) % n;
        out += ((ma + n - ja) % n) * stride;
        stride *= n;
    }
    return out;
}

} // namespace detail

// Sum over the truncated mode set of ||g(u) sqrt(Q) e_j||^2_{H^k}.  For family
// 1 the modes are Fourier modes of the lattice, taken in decreasing order of
// their eigenvalue, `truncation` of them (0: all with q >= 1e-12 max q).
// For family 2 the x-Fourier modes are truncated the same way.
inline double hs_norm_estimate(NoiseSampler& ns, const FieldState& u, double k, std::size_t truncation = 0) {
    const NoiseSpec& sp = ns.spec();
    const Grid1D& gx = ns.gx();
    const TransverseGrid& gy = ns.gy();
    const std::size_t nx = gx.n, nr = gy.points(), N = nx * nr;
    const auto dims = field_dims(gx, gy);
    const auto lens = field_lengths(gx, gy);
    Fourier f = field_fourier(gx, gy);

    auto select = [](const std::vector<double>& q, std::size_t trunc) {
        std::vector<std::size_t> order(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return q[a] > q[b]; });
        const double mx = q.empty() ? 0.0 : q[order[0]];
        std::size_t keep = 0;
        if (trunc) keep = std::min(trunc, q.size());
        else
            while (keep < q.size() && q[order[keep]] >= 1e-12 * mx) ++keep;
        order.resize(keep);
        return order;
    };

    if (sp.family == NoiseFamily::TraceClass) {
        const std::size_t L = truncation ? std::min(truncation, ns.modes()) : ns.modes();
        double total = 0.0;
        for (std::size_t l = 0; l < L; ++l) {
            const double* mu = ns.mode_table().data() + l * N;
            for (std::size_t z = 0; z < N; ++z) f.real()[z] = sp.gtilde(u.values[z]) * mu[z];
            f.forward();
            total += ns.lambdas()[l] * detail::spectral_sum(f, k, u.cell_volume());
        }
        return total;
    }

    const auto wk = detail::full_sobolev_weight(dims, lens, k);
    double total = 0.0;
    if (sp.family == NoiseFamily::WeightedTranslationInvariant) {
        // Full-lattice eigenvalues q_m = dV * DFT(c)_m.
        std::vector<double> qfull(N);
        {
            // Hermitian expansion of the (real) half spectrum.
            Fourier tmp = field_fourier(gx, gy);
            for (std::size_t m = 0; m < ns.kernel_spectrum().size(); ++m) tmp.spec()[m] = std::sqrt(ns.kernel_spectrum()[m]);
            qfull = detail::full_power(tmp, dims);
        }
        for (double& q : qfull) q *= ns.cell_volume_full();
        for (std::size_t j = 0; j < nr; ++j)
            for (std::size_t i = 0; i < nx; ++i) f.real()[i + nx * j] = ns.weight()[j] * sp.gtilde(u.at(i, j));
        f.forward();
        const auto G2 = detail::full_power(f, dims);
        const auto modes = select(qfull, truncation);
        for (std::size_t jm : modes) {
            double acc = 0.0;
            for (std::size_t m = 0; m < N; ++m) acc += wk[m] * G2[detail::lattice_sub(m, jm, dims)];
            total += qfull[jm] * acc;
        }
        return total / (static_cast<double>(N) * static_cast<double>(N));
    }

    // Family 2: modes sqrt(lambda_l) mu_l(y) sqrt(q_m / L_x) exp(i k_m x).
    std::vector<double> qx(nx);
    {
        Fourier tmp = row_fourier(gx, 1);
        for (std::size_t m = 0; m < ns.kernel_spectrum().size(); ++m) tmp.spec()[m] = std::sqrt(ns.kernel_spectrum()[m]);
        qx = detail::full_power(tmp, {static_cast<int>(nx)});
        for (double& q : qx) q *= gx.dx();
    }
    const auto xmodes = select(qx, truncation);
    const std::size_t L = ns.modes();
    const double dV = u.cell_volume();
    for (std::size_t l = 0; l < L; ++l) {
        const double* mu = ns.mode_table().data() + l * nr;
        for (std::size_t j = 0; j < nr; ++j)
            for (std::size_t i = 0; i < nx; ++i) f.real()[i + nx * j] = sp.gtilde(u.at(i, j)) * mu[j];
        f.forward();
        const auto G2 = detail::full_power(f, dims);
        for (std::size_t mx : xmodes) {
            double acc = 0.0;
            for (std::size_t m = 0; m < N; ++m) acc += wk[m] * G2[detail::lattice_sub(m, mx, dims)];
            // ||h||^2 = dV/N sum w |h_hat|^2 with h_hat = sqrt(q/L_x) G_hat(. - m)
            total += ns.lambdas()[l] * qx[mx] / gx.length() * acc * dV / static_cast<double>(N);
        }
    }
    return total;
}

// Sum over modes of ||<g(u) sqrt(Q) e_j, psi_tw>_{L^2_x}||^2_{L^1_y}, in the
// canonical basis of each family (complex Fourier modes for the
// translation-invariant directions, Hermite modes otherwise).
inline double l1_pairing_estimate(NoiseSampler& ns, const FieldState& u, const WaveProfile& p) {
    const NoiseSpec& sp = ns.spec();
    const Grid1D& gx = ns.gx();
    const TransverseGrid& gy = ns.gy();
    const std::size_t nx = gx.n, nr = gy.points(), N = nx * nr;
    const double dx = gx.dx(), dVy = gy.cell_volume();

    if (sp.family == NoiseFamily::TraceClass) {
        double total = 0.0;
        for (std::size_t l = 0; l < ns.modes(); ++l) {
            const double* mu = ns.mode_table().data() + l * N;
            double l1 = 0.0;
            for (std::size_t j = 0; j < nr; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < nx; ++i) acc += sp.gtilde(u.at(i, j)) * mu[i + nx * j] * p.psi_tw[i];
                l1 += std::abs(acc * dx);
            }
            l1 *= dVy;
            total += ns.lambdas()[l] * l1 * l1;
        }
        return total;
    }

    // |A_k(y)| = |dx sum_x gtilde(u) psi e^{-ikx}| per row and x-mode.
    Fourier rf = row_fourier(gx, nr);
    for (std::size_t j = 0; j < nr; ++j)
        for (std::size_t i = 0; i < nx; ++i) rf.real()[i + nx * j] = sp.gtilde(u.at(i, j)) * p.psi_tw[i];
    rf.forward();
    const std::size_t h = rf.spec_size();
    std::vector<double> A(h * nr);
    for (std::size_t j = 0; j < nr; ++j)
        for (std::size_t m = 0; m < h; ++m) A[j * h + m] = dx * std::abs(rf.spec()[j * h + m]);
    const auto& wt = rf.weight();

    double total = 0.0;
    if (sp.family == NoiseFamily::WeightedTranslationInvariant) {
        // sum over xi_y of q(k_x, xi_y) / Vol, per k_x half-spectrum bin.
        const auto& qh = ns.kernel_spectrum();
        const std::size_t ny_tot = nr;
        std::vector<double> qsum(h, 0.0);
        for (std::size_t t = 0; t < ny_tot; ++t)
            for (std::size_t m = 0; m < h; ++m) qsum[m] += qh[t * h + m];
        const double vol = gx.length() * std::pow(gy.L, gy.axes());
        for (std::size_t m = 0; m < h; ++m) {
            double l1 = 0.0;
            for (std::size_t j = 0; j < nr; ++j) l1 += ns.weight()[j] * A[j * h + m];
            l1 *= dVy;
            total += wt[m] * qsum[m] * ns.cell_volume_full() / vol * l1 * l1;
        }
        return total;
    }

    const auto& qx = ns.kernel_spectrum();
    for (std::size_t l = 0; l < ns.modes(); ++l) {
        const double* mu = ns.mode_table().data() + l * nr;
        for (std::size_t m = 0; m < h; ++m) {
            double l1 = 0.0;
            for (std::size_t j = 0; j < nr; ++j) l1 += std::abs(mu[j]) * A[j * h + m];
            l1 *= dVy;
            total += ns.lambdas()[l] * wt[m] * qx[m] * dx / gx.length() * l1 * l1;
        }
    }
    return total;
}

} // namespace stochwave

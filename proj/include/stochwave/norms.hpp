#pragma once

#include "stochwave/spectral.hpp"

#include <cmath>

namespace stochwave {

// Fourier-multiplier Sobolev norms on the lattice:
//   ||w||^2_{H^k} = dV * (1/N) * sum_xi (1+|xi|^2)^k |w_hat(xi)|^2,
// which for k = 0 is exactly the lattice L^2 norm  sum |w|^2 dV.
// Fields in x are assumed to decay at both ends (profile already subtracted).

namespace detail {
inline double spectral_sum(Fourier& f, double k, double dV, bool gradient = false) {
    const auto& k2 = f.k2();
    const auto& wt = f.weight();
    const cplx* s = f.spec();
    double acc = 0.0;
    for (std::size_t m = 0; m < f.spec_size(); ++m) {
        double mult = (k == 0.0) ? 1.0 : std::pow(1.0 + k2[m], k);
        if (gradient) mult *= k2[m];
        acc += wt[m] * mult * std::norm(s[m]);
    }
    return acc * dV * f.parseval_scale();
}
} // namespace detail

// Reusable workspace for repeated norm evaluations on one shape.
class NormWorkspace {
public:
    NormWorkspace() = default;
    NormWorkspace(const Grid1D& gx, const TransverseGrid& gy)
        : gx_(gx), gy_(gy), field_(field_fourier(gx, gy)), trans_(transverse_fourier(gy)) {}

    // Returns (||w||^2_{H^k}, ||w||^2_{H^{k+1}}) from a single transform.
    std::pair<double, double> field_pair(const std::vector<double>& w, double k) {
        std::copy(w.begin(), w.end(), field_.real());
        field_.forward();
        const double dV = gx_.dx() * gy_.cell_volume();
        const auto& k2 = field_.k2();
        const auto& wt = field_.weight();
        const cplx* s = field_.spec();
        double a = 0.0, b = 0.0;
        for (std::size_t m = 0; m < field_.spec_size(); ++m) {
            const double base = (k == 0.0) ? 1.0 : std::pow(1.0 + k2[m], k);
            const double e = wt[m] * std::norm(s[m]) * base;
            a += e;
            b += e * (1.0 + k2[m]);
        }
        const double sc = dV * field_.parseval_scale();
        return {a * sc, b * sc};
    }
    double field2(const std::vector<double>& w, double k) {
        std::copy(w.begin(), w.end(), field_.real());
        field_.forward();
        return detail::spectral_sum(field_, k, gx_.dx() * gy_.cell_volume());
    }
    // Returns (||theta||^2_{H^k}, ||grad theta||^2_{H^k}) from a single transform.
    std::pair<double, double> transverse_pair(const std::vector<double>& th, double k) {
        std::copy(th.begin(), th.end(), trans_.real());
        trans_.forward();
        const auto& k2 = trans_.k2();
        const auto& wt = trans_.weight();
        const cplx* s = trans_.spec();
        double a = 0.0, b = 0.0;
        for (std::size_t m = 0; m < trans_.spec_size(); ++m) {
            const double base = (k == 0.0) ? 1.0 : std::pow(1.0 + k2[m], k);
            const double e = wt[m] * std::norm(s[m]) * base;
            a += e;
            b += e * k2[m];
        }
        const double sc = gy_.cell_volume() * trans_.parseval_scale();
        return {a * sc, b * sc};
    }

private:
    Grid1D gx_;
    TransverseGrid gy_;
    Fourier field_;
    Fourier trans_;
};

inline double sobolev_norm2(const FieldState& w, double k) {
    Fourier f = field_fourier(w.gx, w.gy);
    std::copy(w.values.begin(), w.values.end(), f.real());
    f.forward();
    return detail::spectral_sum(f, k, w.cell_volume());
}
inline double sobolev_norm(const FieldState& w, double k) { return std::sqrt(sobolev_norm2(w, k)); }

inline double sobolev_norm2(const TransverseField& w, double k) {
    Fourier f = transverse_fourier(w.gy);
    std::copy(w.values.begin(), w.values.end(), f.real());
    f.forward();
    return detail::spectral_sum(f, k, w.cell_volume());
}
inline double sobolev_norm(const TransverseField& w, double k) { return std::sqrt(sobolev_norm2(w, k)); }

// ||grad_y theta||^2_{H^k}
inline double gradient_norm2(const TransverseField& w, double k) {
    Fourier f = transverse_fourier(w.gy);
    std::copy(w.values.begin(), w.values.end(), f.real());
    f.forward();
    return detail::spectral_sum(f, k, w.cell_volume(), true);
}

inline double l2_norm2(const std::vector<double>& v, double dV) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return acc * dV;
}
inline double l2_norm2(const FieldState& w) { return l2_norm2(w.values, w.cell_volume()); }
inline double l2_norm2(const TransverseField& w) { return l2_norm2(w.values, w.cell_volume()); }

inline double l1_norm(const std::vector<double>& v, double dV) {
    double acc = 0.0;
    for (double x : v) acc += std::abs(x);
    return acc * dV;
}
inline double l1_norm(const FieldState& w) { return l1_norm(w.values, w.cell_volume()); }
inline double l1_norm(const TransverseField& w) { return l1_norm(w.values, w.cell_volume()); }

} // namespace stochwave

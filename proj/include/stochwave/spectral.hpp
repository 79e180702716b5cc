#pragma once

#include "stochwave/fft.hpp"
#include "stochwave/field.hpp"

#include <algorithm>
#include <cmath>

namespace stochwave {

// Row-major shape of a FieldState: transverse axes (slowest) then x.
inline std::vector<int> field_dims(const Grid1D& gx, const TransverseGrid& gy) {
    std::vector<int> d(gy.axes(), static_cast<int>(gy.n));
    d.push_back(static_cast<int>(gx.n));
    return d;
}
inline std::vector<double> field_lengths(const Grid1D& gx, const TransverseGrid& gy) {
    std::vector<double> l(gy.axes(), gy.L);
    l.push_back(gx.length());
    return l;
}
inline Fourier field_fourier(const Grid1D& gx, const TransverseGrid& gy) {
    return Fourier(field_dims(gx, gy), field_lengths(gx, gy));
}
inline Fourier transverse_fourier(const TransverseGrid& gy) {
    return Fourier(std::vector<int>(gy.axes(), static_cast<int>(gy.n)), std::vector<double>(gy.axes(), gy.L));
}
inline Fourier row_fourier(const Grid1D& gx, std::size_t rows) {
    return Fourier({static_cast<int>(gx.n)}, {gx.length()}, static_cast<int>(rows));
}

// Batched x-direction operations on every row of a FieldState.
class RowSpectral {
public:
    RowSpectral() = default;
    RowSpectral(const Grid1D& gx, std::size_t rows) : gx_(gx), rows_(rows), fft_(row_fourier(gx, rows)) {}

    std::size_t rows() const { return rows_; }

    // out = a1*w' + a2*w'' for each row.
    void apply_constant(const double* w, double* out, double a1, double a2) {
        load(w);
        fft_.forward();
        const std::size_t h = fft_.spec_size();
        const auto& k = fft_.k(0);
        const auto& nyq = fft_.nyquist(0);
        cplx* s = fft_.spec();
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t m = 0; m < h; ++m) {
                const double kk = k[m];
                const cplx mult(-a2 * kk * kk, nyq[m] ? 0.0 : a1 * kk);
                s[r * h + m] *= mult;
            }
        }
        fft_.inverse();
        store(out);
    }
    void derivative(const double* w, double* out, int order) {
        if (order == 1) apply_constant(w, out, 1.0, 0.0);
        else if (order == 2) apply_constant(w, out, 0.0, 1.0);
        else throw std::invalid_argument("RowSpectral::derivative: order 1 or 2");
    }
    // out(x, row j) = w(x - shift[j], row j) via Fourier phase factors.
    void shift(const double* w, double* out, const double* shift) {
        load(w);
        fft_.forward();
        const std::size_t h = fft_.spec_size();
        const auto& k = fft_.k(0);
        const auto& nyq = fft_.nyquist(0);
        cplx* s = fft_.spec();
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t m = 0; m < h; ++m) {
                const double ph = -k[m] * shift[r];
                // The Nyquist mode is kept real so the output stays real-valued.
                s[r * h + m] *= nyq[m] ? cplx(std::cos(ph), 0.0) : cplx(std::cos(ph), std::sin(ph));
            }
        }
        fft_.inverse();
        store(out);
    }
    void shift_uniform(const double* w, double* out, double s) {
        std::vector<double> sh(rows_, s);
        shift(w, out, sh.data());
    }
    Fourier& fourier() { return fft_; }

private:
    void load(const double* w) { std::copy(w, w + gx_.n * rows_, fft_.real()); }
    void store(double* out) { std::copy(fft_.real(), fft_.real() + gx_.n * rows_, out); }

    Grid1D gx_;
    std::size_t rows_ = 0;
    Fourier fft_;
};

// Transverse (periodic) operations on TransverseField data.
class TransverseSpectral {
public:
    TransverseSpectral() = default;
    explicit TransverseSpectral(const TransverseGrid& gy) : gy_(gy), fft_(transverse_fourier(gy)) {}

    void laplacian(const double* th, double* out) { multiply(th, out, [](double k2) { return -k2; }); }
    void heat(const double* th, double* out, double t) {
        multiply(th, out, [t](double k2) { return std::exp(-k2 * t); });
    }
    // |grad theta|^2 pointwise, gradient by spectral differentiation per axis.
    void grad_squared(const double* th, double* out) {
        const std::size_t n = gy_.points();
        std::fill(out, out + n, 0.0);
        std::copy(th, th + n, fft_.real());
        fft_.forward();
        std::vector<cplx> base(fft_.spec(), fft_.spec() + fft_.spec_size());
        for (int a = 0; a < fft_.rank(); ++a) {
            const auto& k = fft_.k(a);
            const auto& nyq = fft_.nyquist(a);
            cplx* s = fft_.spec();
            for (std::size_t m = 0; m < fft_.spec_size(); ++m)
                s[m] = nyq[m] ? cplx(0.0) : base[m] * cplx(0.0, k[m]);
            fft_.inverse();
            const double* g = fft_.real();
            for (std::size_t j = 0; j < n; ++j) out[j] += g[j] * g[j];
        }
    }
    template <class F>
    void multiply(const double* th, double* out, F symbol) {
        const std::size_t n = gy_.points();
        std::copy(th, th + n, fft_.real());
        fft_.forward();
        const auto& k2 = fft_.k2();
        cplx* s = fft_.spec();
        for (std::size_t m = 0; m < fft_.spec_size(); ++m) s[m] *= symbol(k2[m]);
        fft_.inverse();
        std::copy(fft_.real(), fft_.real() + n, out);
    }
    Fourier& fourier() { return fft_; }

private:
    TransverseGrid gy_;
    Fourier fft_;
};

// Transverse Laplacian applied row-by-row in y for every x (acts on FieldState).
inline FieldState transverse_laplacian(const FieldState& w) {
    Fourier f = field_fourier(w.gx, w.gy);
    std::copy(w.values.begin(), w.values.end(), f.real());
    f.forward();
    const int r = f.rank();
    cplx* s = f.spec();
    for (std::size_t m = 0; m < f.spec_size(); ++m) {
        double ky2 = 0.0;
        for (int a = 0; a < r - 1; ++a) ky2 += f.k(a)[m] * f.k(a)[m];
        s[m] *= -ky2;
    }
    f.inverse();
    FieldState out(w.gx, w.gy);
    std::copy(f.real(), f.real() + w.size(), out.values.begin());
    return out;
}

} // namespace stochwave

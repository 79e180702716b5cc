#pragma once

#include "stochwave/grid.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace stochwave {

// Lattice function on the truncated R x T^{d-1}; x is the fastest index.
struct FieldState {
    Grid1D gx;
    TransverseGrid gy;
    std::vector<double> values;

    FieldState() = default;
    FieldState(const Grid1D& x, const TransverseGrid& y, double fill = 0.0)
        : gx(x), gy(y), values(x.n * y.points(), fill) {}

    std::size_t nx() const { return gx.n; }
    std::size_t rows() const { return gy.points(); }
    std::size_t size() const { return values.size(); }
    double* row(std::size_t j) { return values.data() + j * gx.n; }
    const double* row(std::size_t j) const { return values.data() + j * gx.n; }
    double& at(std::size_t i, std::size_t j) { return values[i + gx.n * j]; }
    double at(std::size_t i, std::size_t j) const { return values[i + gx.n * j]; }
    double cell_volume() const { return gx.dx() * gy.cell_volume(); }
    bool finite() const {
        return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
    }
    // Copy a 1-D profile into every transverse row.
    static FieldState broadcast(const Grid1D& x, const TransverseGrid& y, const std::vector<double>& prof) {
        FieldState f(x, y);
        for (std::size_t j = 0; j < f.rows(); ++j) std::copy(prof.begin(), prof.end(), f.row(j));
        return f;
    }
};

struct TransverseField {
    TransverseGrid gy;
    std::vector<double> values;

    TransverseField() = default;
    explicit TransverseField(const TransverseGrid& y, double fill = 0.0) : gy(y), values(y.points(), fill) {}

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t j) { return values[j]; }
    double operator[](std::size_t j) const { return values[j]; }
    double cell_volume() const { return gy.cell_volume(); }
    bool finite() const {
        return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
    }
};

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace stochwave

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochwave {

// Uniform lattice on [x_min, x_max); the last point is x_max - dx.
struct Grid1D {
    double x_min = -40.0;
    double x_max = 40.0;
    std::size_t n = 512;

    Grid1D() = default;
    Grid1D(double lo, double hi, std::size_t count) : x_min(lo), x_max(hi), n(count) { validate(); }

    void validate() const {
        if (n < 8) throw std::invalid_argument("Grid1D: n_x must be at least 8");
        if (!(x_max > x_min)) throw std::invalid_argument("Grid1D: x_max must exceed x_min");
    }
    double length() const { return x_max - x_min; }
    double dx() const { return (x_max - x_min) / static_cast<double>(n); }
    double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx(); }
    std::vector<double> points() const {
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = x(i);
        return p;
    }
    bool operator==(const Grid1D&) const = default;
};

// Periodic lattice on (d-1) transverse axes, each [-L/2, L/2).
struct TransverseGrid {
    int d = 2;
    double L = 32.0;
    std::size_t n = 32;

    TransverseGrid() = default;
    TransverseGrid(int dim, double side, std::size_t count) : d(dim), L(side), n(count) { validate(); }

    void validate() const {
        if (d < 2) throw std::invalid_argument("TransverseGrid: d must be at least 2");
        if (n < 2) throw std::invalid_argument("TransverseGrid: n_y must be at least 2");
        if (!(L > 0.0)) throw std::invalid_argument("TransverseGrid: L_y must be positive");
    }
    int axes() const { return d - 1; }
    double dy() const { return L / static_cast<double>(n); }
    double y(std::size_t j) const { return -0.5 * L + static_cast<double>(j) * dy(); }
    std::size_t points() const {
        std::size_t p = 1;
        for (int a = 0; a < axes(); ++a) p *= n;
        return p;
    }
    double cell_volume() const { return std::pow(dy(), axes()); }
    // Decompose a linear transverse index into per-axis indices (axis 0 fastest).
    void unravel(std::size_t lin, std::size_t* idx) const {
        for (int a = 0; a < axes(); ++a) {
            idx[a] = lin % n;
            lin /= n;
        }
    }
    double radius2(std::size_t lin) const {
        double r2 = 0.0;
        for (int a = 0; a < axes(); ++a) {
            const double yy = y(lin % n);
            r2 += yy * yy;
            lin /= n;
        }
        return r2;
    }
    bool operator==(const TransverseGrid&) const = default;
};

} // namespace stochwave

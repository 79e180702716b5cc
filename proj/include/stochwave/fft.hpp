#pragma once

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace stochwave {

using cplx = std::complex<double>;

namespace detail {

// FFTW's planner is not re-entrant; execution with the new-array interface is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
};

struct PlanKey {
    std::vector<int> dims;
    int howmany;
    bool operator<(const PlanKey& o) const {
        if (howmany != o.howmany) return howmany < o.howmany;
        return dims < o.dims;
    }
};

// Plans are created with FFTW_ESTIMATE so that the chosen algorithm, and hence
// every rounding pattern, is identical from run to run.
inline PlanPair get_plans(const std::vector<int>& dims, int howmany) {
    static std::map<PlanKey, PlanPair> cache;
    std::lock_guard<std::mutex> lock(planner_mutex());
    PlanKey key{dims, howmany};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    const int rank = static_cast<int>(dims.size());
    std::size_t nreal = 1;
    for (int d : dims) nreal *= static_cast<std::size_t>(d);
    const std::size_t nspec = nreal / static_cast<std::size_t>(dims.back()) * (dims.back() / 2 + 1);
    double* r = fftw_alloc_real(nreal * howmany);
    fftw_complex* c = fftw_alloc_complex(nspec * howmany);
    PlanPair p;
    p.fwd = fftw_plan_many_dft_r2c(rank, dims.data(), howmany, r, nullptr, 1, static_cast<int>(nreal), c, nullptr, 1,
                                   static_cast<int>(nspec), FFTW_ESTIMATE);
    p.inv = fftw_plan_many_dft_c2r(rank, dims.data(), howmany, c, nullptr, 1, static_cast<int>(nspec), r, nullptr, 1,
                                   static_cast<int>(nreal), FFTW_ESTIMATE);
    fftw_free(r);
    fftw_free(c);
    if (!p.fwd || !p.inv) throw std::runtime_error("FFTW planning failed");
    cache.emplace(key, p);
    return p;
}

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};

} // namespace detail

// Real-to-complex transform over a row-major array of shape `dims` (last index
// fastest), optionally batched `howmany` times.  Each instance owns scratch
// buffers, so instances must not be shared between threads.
class Fourier {
public:
    Fourier() = default;
    Fourier(std::vector<int> dims, std::vector<double> lengths, int howmany = 1)
        : dims_(std::move(dims)), lengths_(std::move(lengths)), howmany_(howmany) {
        if (dims_.empty() || dims_.size() != lengths_.size()) throw std::invalid_argument("Fourier: bad shape");
        nreal_ = 1;
        for (int d : dims_) nreal_ *= static_cast<std::size_t>(d);
        last_half_ = static_cast<std::size_t>(dims_.back() / 2 + 1);
        nspec_ = nreal_ / static_cast<std::size_t>(dims_.back()) * last_half_;
        plans_ = detail::get_plans(dims_, howmany_);
        real_.reset(fftw_alloc_real(nreal_ * howmany_));
        spec_.reset(fftw_alloc_complex(nspec_ * howmany_));
        build_wavenumbers();
    }

    std::size_t real_size() const { return nreal_; }
    std::size_t spec_size() const { return nspec_; }
    int batch() const { return howmany_; }
    int rank() const { return static_cast<int>(dims_.size()); }
    const std::vector<int>& dims() const { return dims_; }

    double* real() { return real_.get(); }
    cplx* spec() { return reinterpret_cast<cplx*>(spec_.get()); }

    void forward() { fftw_execute_dft_r2c(plans_.fwd, real_.get(), spec_.get()); }
    // Inverse transform, normalised so that inverse(forward(x)) = x.  The
    // spectral buffer is clobbered.
    void inverse() {
        fftw_execute_dft_c2r(plans_.inv, spec_.get(), real_.get());
        const double s = 1.0 / static_cast<double>(nreal_);
        double* r = real_.get();
        for (std::size_t i = 0; i < nreal_ * howmany_; ++i) r[i] *= s;
    }

    // Per-mode wavenumber along row-major axis `a`, |xi|^2, and the Hermitian
    // multiplicity (2 for interior modes of the halved last axis, else 1).
    const std::vector<double>& k(int a) const { return k_[a]; }
    const std::vector<double>& k2() const { return k2_; }
    const std::vector<double>& weight() const { return weight_; }
    // True where the mode sits on the Nyquist index of axis `a`.
    const std::vector<unsigned char>& nyquist(int a) const { return nyq_[a]; }

    // Parseval: sum over the real lattice of |x|^2 equals this over the spectrum.
    double parseval_scale() const { return 1.0 / static_cast<double>(nreal_); }

private:
    void build_wavenumbers() {
        const int r = rank();
        k_.assign(r, std::vector<double>(nspec_));
        nyq_.assign(r, std::vector<unsigned char>(nspec_, 0));
        k2_.assign(nspec_, 0.0);
        weight_.assign(nspec_, 1.0);
        std::vector<std::size_t> shape(r);
        for (int a = 0; a < r; ++a) shape[a] = static_cast<std::size_t>(dims_[a]);
        shape[r - 1] = last_half_;
        std::vector<std::size_t> idx(r, 0);
        for (std::size_t m = 0; m < nspec_; ++m) {
            std::size_t rem = m;
            for (int a = r - 1; a >= 0; --a) {
                idx[a] = rem % shape[a];
                rem /= shape[a];
            }
            double kk = 0.0;
            for (int a = 0; a < r; ++a) {
                const long n = dims_[a];
                long j = static_cast<long>(idx[a]);
                if (a < r - 1 && j > n / 2) j -= n;
                const double kv = 2.0 * std::numbers::pi * static_cast<double>(j) / lengths_[a];
                k_[a][m] = kv;
                kk += kv * kv;
                if (n % 2 == 0 && (j == n / 2 || j == -n / 2)) nyq_[a][m] = 1;
            }
            k2_[m] = kk;
            const long nl = dims_[r - 1];
            const long jl = static_cast<long>(idx[r - 1]);
            const bool self_conj = (jl == 0) || (nl % 2 == 0 && jl == nl / 2);
            weight_[m] = self_conj ? 1.0 : 2.0;
        }
    }

    std::vector<int> dims_;
    std::vector<double> lengths_;
    int howmany_ = 1;
    std::size_t nreal_ = 0, nspec_ = 0, last_half_ = 0;
    detail::PlanPair plans_;
    std::unique_ptr<double, detail::FftwDeleter> real_;
    std::unique_ptr<fftw_complex, detail::FftwDeleter> spec_;
    std::vector<std::vector<double>> k_;
    std::vector<std::vector<unsigned char>> nyq_;
    std::vector<double> k2_, weight_;
};

} // namespace stochwave

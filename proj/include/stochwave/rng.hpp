#pragma once

#include <boost/random/normal_distribution.hpp>

#include <array>
#include <cstdint>
#include <limits>

namespace stochwave {

// Philox4x64-10 counter-based generator (Salmon et al. constants).  Output is
// the same stream NumPy's Philox bit generator produces for the same key and
// counter: the counter is advanced before each block.
class Philox4x64 {
public:
    using result_type = std::uint64_t;
    using counter_type = std::array<std::uint64_t, 4>;
    using key_type = std::array<std::uint64_t, 2>;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    Philox4x64() = default;
    Philox4x64(key_type key, counter_type ctr) : key_(key), ctr_(ctr) {}

    result_type operator()() {
        if (pos_ == 4) {
            increment();
            block_ = bijection(ctr_, key_);
            pos_ = 0;
        }
        return block_[pos_++];
    }

    void discard(std::uint64_t n) {
        while (n--) (void)(*this)();
    }

    static counter_type bijection(counter_type c, key_type k) {
        for (int r = 0; r < 10; ++r) {
            if (r) {
                k[0] += 0x9E3779B97F4A7C15ULL;
                k[1] += 0xBB67AE8584CAA73BULL;
            }
            const unsigned __int128 p0 = static_cast<unsigned __int128>(0xD2E7470EE14C6C93ULL) * c[0];
            const unsigned __int128 p1 = static_cast<unsigned __int128>(0xCA5A826395121157ULL) * c[2];
            const auto hi0 = static_cast<std::uint64_t>(p0 >> 64), lo0 = static_cast<std::uint64_t>(p0);
            const auto hi1 = static_cast<std::uint64_t>(p1 >> 64), lo1 = static_cast<std::uint64_t>(p1);
            c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        }
        return c;
    }

    const counter_type& counter() const { return ctr_; }
    const key_type& key() const { return key_; }

private:
    void increment() {
        for (auto& w : ctr_)
            if (++w != 0) break;
    }

    key_type key_{0, 0};
    counter_type ctr_{0, 0, 0, 0};
    counter_type block_{};
    int pos_ = 4;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Independent stream for (global seed, realisation index, purpose tag). Streams
// differ in the high counter words, so they never overlap for < 2^128 draws.
class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t realisation, std::uint64_t tag = 0)
        : eng_({splitmix64(seed), splitmix64(seed ^ 0x5851F42D4C957F2DULL)}, {0, 0, realisation, tag}) {}

    std::uint64_t bits() { return eng_(); }
    // Uniform on [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double normal() { return normal_(eng_); }
    void fill_normal(double* out, std::size_t n, double scale = 1.0) {
        for (std::size_t i = 0; i < n; ++i) out[i] = scale * normal_(eng_);
    }
    Philox4x64& engine() { return eng_; }

private:
    Philox4x64 eng_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace stochwave

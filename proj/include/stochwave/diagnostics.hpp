#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace stochwave {

// Decay weight mu for dimension d.
inline double decay_weight(int d) {
    switch (d) {
    case 2: return 0.25;
    case 3: return 0.5;
    case 4: return 0.75;
    case 5: return 1.0;
    default: return 0.25 * static_cast<double>(d - 1);
    }
}

inline bool decay_weight_valid(int d, double mu) {
    if (d < 2) return false;
    if (d <= 5) return std::abs(mu - decay_weight(d)) < 1e-12;
    return mu > 1.0 && mu <= 0.25 * static_cast<double>(d - 1) + 1e-12;
}

// int_0^t (1+t-s)^{-mu} h(s) ds by the trapezoid rule on the stored samples.
inline double weighted_history_integral(const std::vector<double>& times, const std::vector<double>& h, double mu) {
    const std::size_t n = times.size();
    if (n < 2) return 0.0;
    const double t = times.back();
    double acc = 0.0;
    double prev = std::pow(1.0 + t - times[0], -mu) * h[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double cur = std::pow(1.0 + t - times[i], -mu) * h[i];
        acc += 0.5 * (times[i] - times[i - 1]) * (prev + cur);
        prev = cur;
    }
    return acc;
}

struct DiagnosticRecord {
    double t = 0.0;
    double norm_v = 0.0, norm_theta = 0.0, norm_v1 = 0.0, norm_grad = 0.0;
    double int_v2 = 0.0, int_mix = 0.0, int_grad2 = 0.0;
    double N = 0.0, supN = 0.0;
    bool exited = false;
};

// Running record of N_{mu;k}(t) = ||v||^2_{H^k} + ||theta||^2_{H^k} plus the three
// weighted history integrals.  Every step is kept; integrals are recomputed
// from the full history at each update.
class DiagnosticSeries {
public:
    DiagnosticSeries() = default;
    DiagnosticSeries(double mu, double eta) : mu_(mu), eta_(eta) {}

    // Norms (not squared) at time t.
    const DiagnosticRecord& update(double t, double nv, double nth, double nv1, double ngrad) {
        if (!times_.empty() && !(t > times_.back())) throw std::invalid_argument("DiagnosticSeries: times must increase");
        times_.push_back(t);
        h_v2_.push_back(nv1 * nv1);
        h_mix_.push_back(nv * nth);
        h_g2_.push_back(ngrad * ngrad);
        DiagnosticRecord r;
        r.t = t;
        r.norm_v = nv;
        r.norm_theta = nth;
        r.norm_v1 = nv1;
        r.norm_grad = ngrad;
        r.int_v2 = weighted_history_integral(times_, h_v2_, mu_);
        r.int_mix = weighted_history_integral(times_, h_mix_, mu_);
        r.int_grad2 = weighted_history_integral(times_, h_g2_, mu_);
        r.N = nv * nv + nth * nth + r.int_v2 + r.int_mix + r.int_grad2;
        r.supN = records_.empty() ? r.N : std::max(records_.back().supN, r.N);
        if (!exited_ && r.N > eta_) {
            exited_ = true;
            exit_time_ = t;
        }
        r.exited = exited_;
        records_.push_back(r);
        return records_.back();
    }

    const std::vector<DiagnosticRecord>& records() const { return records_; }
    bool exited() const { return exited_; }
    // NaN when N never exceeded eta.
    double exit_time() const { return exit_time_; }
    double sup_N() const { return records_.empty() ? 0.0 : records_.back().supN; }
    double mu() const { return mu_; }
    double eta() const { return eta_; }

private:
    double mu_ = 0.25, eta_ = 1.0;
    std::vector<double> times_, h_v2_, h_mix_, h_g2_;
    std::vector<DiagnosticRecord> records_;
    bool exited_ = false;
    double exit_time_ = std::numeric_limits<double>::quiet_NaN();
};

// inf{t : N(t) > eta} from a stored series, NaN if never.
inline double first_exit_time(const std::vector<DiagnosticRecord>& recs, double eta) {
    for (const auto& r : recs)
        if (r.N > eta) return r.t;
    return std::numeric_limits<double>::quiet_NaN();
}

} // namespace stochwave

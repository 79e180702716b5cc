#include "experiments.hpp"

#include "manifest.hpp"

#include "stochwave/chaining.hpp"
#include "stochwave/convbounds.hpp"
#include "stochwave/ensemble.hpp"
#include "stochwave/montecarlo.hpp"
#include "stochwave/toy.hpp"

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <set>

namespace stochwave::app {

namespace {

using ojson = nlohmann::ordered_json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string numbered(const char* stem, std::size_t i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%05zu%s", stem, i, ext);
    return buf;
}

// Thinned lattice indices 0, every, 2 every, ..., always including the last.
std::vector<std::size_t> thinned(std::size_t n, int every) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(std::max(1, every))) idx.push_back(i);
    if (n && idx.back() != n - 1) idx.push_back(n - 1);
    return idx;
}

void write_profile_csv(const fs::path& path, const WaveProfile& p) {
    CsvWriter w(path, {"x", "phi0", "dphi0", "psi_tw"});
    const auto x = p.grid.points();
    for (std::size_t i = 0; i < x.size(); ++i) w.row({x[i], p.phi0[i], p.dphi0[i], p.psi_tw[i]});
    w.close();
}

void write_growth_csv(const fs::path& path, const std::vector<GrowthRow>& rows) {
    CsvWriter w(path, {"T", "E_sup", "ci_lo", "ci_hi", "predicted_rate", "ratio", "ratio_1p"});
    for (const auto& r : rows) w.row({r.T, r.E_sup, r.ci_lo, r.ci_hi, r.predicted_rate, r.ratio, r.ratio_1p});
    w.close();
}

double spread(const std::vector<GrowthRow>& rows) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : rows) {
        lo = std::min(lo, r.ratio);
        hi = std::max(hi, r.ratio);
    }
    return rows.empty() ? kNaN : hi / lo;
}

void add_growth_summary(RunResult& res, const std::string& stem, const std::vector<GrowthRow>& rows) {
    for (std::size_t i = 0; i < rows.size(); ++i) res.summary.emplace_back(stem + "_ratio_" + std::to_string(i), rows[i].ratio);
    res.summary.emplace_back(stem + "_spread", spread(rows));
}

WaveProfile make_profile(const ProfileSection& s) { return build_nagumo_profile(s.a, s.grid(), s.tail_tol); }

// ------------------------------------------------------------------ toy

RunResult run_toy(const RunConfig& c, const fs::path& out) {
    RunResult res;
    const ToySection& t = c.toy;
    const std::uint64_t seed = c.global_seed;
    if (t.mode == "ladder") {
        const auto rows = sigma_ladder(t.cfg, t.ladder, seed, c.workers);
        CsvWriter w(out / "fits.csv", {"sigma", "eta", "tau_avg", "exponent_window"});
        ojson fits = ojson::array();
        for (std::size_t q = 0; q < t.cfg.etas.size(); ++q) {
            std::vector<double> sig, tau;
            for (const auto& r : rows) {
                sig.push_back(r.sigma);
                tau.push_back(r.tau[q]);
            }
            const auto win = windowed_exponents(sig, tau);
            for (std::size_t i = 0; i < rows.size(); ++i) w.row({sig[i], t.cfg.etas[q], tau[i], win[i]});
            std::vector<double> fs_, ft;
            for (std::size_t i = 0; i < sig.size(); ++i)
                if (std::isfinite(tau[i])) {
                    fs_.push_back(sig[i]);
                    ft.push_back(tau[i]);
                }
            ojson f{{"eta", t.cfg.etas[q]}, {"points", fs_.size()}};
            double exponent = kNaN;
            if (fs_.size() >= 3) {
                const auto pf = powerlaw_fit(fs_, ft);
                exponent = pf.exponent;
                f["exponent"] = pf.exponent;
                f["intercept"] = pf.intercept;
                f["r2"] = pf.r2;
            }
            fits.push_back(f);
            res.summary.emplace_back("exponent_" + std::to_string(q), exponent);
        }
        w.close();
        ojson s{{"mode", "ladder"}, {"seed", seed}, {"fits", fits}};
        std::size_t overflowed = 0;
        for (const auto& r : rows) overflowed += r.overflowed;
        s["overflowed"] = overflowed;
        write_text(out / "summary.json", s.dump(2) + "\n");
        return res;
    }

    const ToyEnsemble e = toy_ensemble(t.cfg, seed, c.workers);
    const auto keep = thinned(e.t.size(), t.output_every);
    for (int m = 0; m < std::min(t.save_paths, t.cfg.M); ++m) {
        RngStream rng(seed, static_cast<std::uint64_t>(m), 1);
        const auto v = simulate_ou(t.cfg, rng);
        const ToyPath p = simulate_hat_theta(t.cfg, v);
        CsvWriter w(out / "paths" / numbered("path", static_cast<std::size_t>(m), ".csv"), {"t", "vhat", "thetahat", "Theta"});
        for (std::size_t i : keep) w.row({p.t[i], p.vhat[i], p.thetahat[i], p.Theta[i]});
        w.close();
    }
    {
        RngStream boot(seed, 0, 1001);
        CsvWriter w(out / "ensemble.csv", {"t", "mean_Theta", "ci_lo", "ci_hi"});
        for (std::size_t i : keep) {
            const auto ci = e.ci(i, boot, t.bootstrap);
            w.row({e.t[i], e.mean_Theta[i], ci.lo, ci.hi});
        }
        w.close();
    }
    ojson taus = ojson::array();
    CsvWriter w(out / "tau.csv", {"eta", "tau_avg"});
    for (std::size_t q = 0; q < t.cfg.etas.size(); ++q) {
        const double tau = tau_avg(e.t, e.mean_Theta, t.cfg.etas[q]);
        w.row({t.cfg.etas[q], tau});
        taus.push_back({{"eta", t.cfg.etas[q]}, {"tau_avg", std::isfinite(tau) ? ojson(tau) : ojson(nullptr)}});
        res.summary.emplace_back("tau_avg_" + std::to_string(q), tau);
    }
    w.close();
    res.summary.emplace_back("mean_Theta_T", e.mean_Theta.back());
    ojson s{{"mode", "ensemble"}, {"seed", seed},        {"sigma", t.cfg.sigma},
            {"M", t.cfg.M},       {"overflowed", e.overflowed}, {"mean_Theta_T", e.mean_Theta.back()},
            {"tau_avg", taus}};
    write_text(out / "summary.json", s.dump(2) + "\n");
    return res;
}

// ------------------------------------------------------------- chaining

RunResult run_chaining(const RunConfig& c, const fs::path& out) {
    RunResult res;
    const ChainingSection& s = c.chaining;
    const std::uint64_t seed = c.global_seed;
    if (s.entropy) {
        {
            CsvWriter w(out / "dch.csv", {"t", "s", "dch"});
            const double h = s.mesh_T / static_cast<double>(s.mesh_n - 1);
            for (std::size_t i = 0; i < s.mesh_n; ++i)
                for (std::size_t j = 0; j < s.mesh_n; ++j) {
                    const double ti = h * static_cast<double>(i), sj = h * static_cast<double>(j);
                    w.row({ti, sj, dch(ti, sj, s.d)});
                }
            w.close();
        }
        {
            CsvWriter w(out / "covering.csv", {"T", "nu", "N"});
            for (double T : s.T_list)
                for (double nu : s.nu_list) w.row({T, nu, static_cast<double>(covering_number(T, s.d, nu))});
            w.close();
        }
        const double Tmax = *std::max_element(s.T_list.begin(), s.T_list.end());
        std::vector<std::size_t> at;
        for (double T : s.T_list) at.push_back(static_cast<std::size_t>(std::llround(T / s.dt)));
        // E sup_{[0,T]} |Y| from the same paths for every T
        auto sups = parallel_map<std::vector<double>>(static_cast<std::size_t>(s.M), c.workers, [&](std::size_t m) {
            RngStream rng(seed, m, 5);
            const auto p = simulate_Y(s.d, s.dt, Tmax, rng);
            std::vector<double> o;
            for (std::size_t i : at) o.push_back(std::sqrt(p.Ystar[std::min(i, p.Ystar.size() - 1)]));
            return o;
        });
        {
            RngStream boot(seed, 0, 1005);
            DudleyOptions opt;
            opt.nodes = s.dudley_nodes;
            CsvWriter w(out / "dudley.csv", {"T", "dudley", "empirical_mean", "ci_lo", "ci_hi"});
            for (std::size_t j = 0; j < s.T_list.size(); ++j) {
                std::vector<double> x(sups.size());
                for (std::size_t m = 0; m < sups.size(); ++m) x[m] = sups[m][j];
                const auto ci = bootstrap_mean(x, boot);
                const double D = dudley_integral(s.T_list[j], s.d, opt);
                w.row({s.T_list[j], D, ci.estimate, ci.lo, ci.hi});
                res.summary.emplace_back("dudley_over_logT_" + std::to_string(j), D / std::log(s.T_list[j]));
            }
            w.close();
        }
    }
    if (s.sup_growth) {
        const std::pair<const char*, SupProcess> procs[] = {
            {"Y", SupProcess::Y}, {"OU", SupProcess::OU}, {"I", SupProcess::WeightedOU}};
        std::uint64_t tag = 20;
        for (const auto& [name, which] : procs) {
            const auto rows = empirical_sup_growth(s.d, s.T_list, s.M, s.dt, seed, c.workers, which, tag++);
            CsvWriter w(out / (std::string("sup_growth_") + name + ".csv"), {"T", "E_sup", "ci_lo", "ci_hi", "growth_model"});
            for (const auto& r : rows) w.row({r.T, r.mean, r.ci_lo, r.ci_hi, growth_model(s.d, r.T)});
            w.close();
        }
    }
    return res;
}

// ----------------------------------------------------------- convbounds

RunResult run_convbounds(const RunConfig& c, const fs::path& out) {
    RunResult res;
    const ConvSection& s = c.convbounds;
    const std::uint64_t seed = c.global_seed;
    if (s.kind == "eb") {
        const auto g = simulate_EB_growth(s.d, s.T_list, s.M, s.B, s.dt, seed, c.workers);
        write_growth_csv(out / "growth_J.csv", g.J);
        write_growth_csv(out / "growth_norm.csv", g.norm);
        add_growth_summary(res, "J", g.J);
    } else if (s.kind == "zx") {
        const WaveProfile p = make_profile(s.profile);
        const auto rows = simulate_ZX_growth(p, s.T_list, s.M, s.X, s.dt, seed, c.workers);
        write_growth_csv(out / "growth_ZX.csv", rows);
        add_growth_summary(res, "ZX", rows);
    } else if (s.kind == "jg") {
        const double mu = s.mu >= 0.0 ? s.mu : 0.25 * (s.d - 1);
        CsvWriter w(out / "jg.csv", {"T", "mu", "nu", "sup_J", "theta_star", "K_dc"});
        DeterministicConvReport last;
        double first = kNaN;
        for (double T : s.T_list) {
            last = verify_deterministic_conv(s.d, mu, s.G, T, s.dt);
            w.row({T, last.mu, last.nu, last.sup_J, last.theta_star, last.K_dc});
            if (std::isnan(first)) first = last.sup_J;
        }
        w.close();
        CsvWriter ws(out / "jg_series.csv", {"t", "J"});
        for (std::size_t i = 0; i < last.t.size(); ++i) ws.row({last.t[i], last.J[i]});
        ws.close();
        res.summary.emplace_back("sup_J_last_over_first", last.sup_J / first);
    } else if (s.kind == "heat") {
        const TransverseGrid gy(s.d, s.L_y, s.n_y);
        const auto f = heat_decay_fit(gaussian_bump(gy, 1.0), s.t_list);
        CsvWriter w(out / "heat.csv", {"t", "norm"});
        for (std::size_t i = 0; i < f.t.size(); ++i) w.row({f.t[i], f.norm[i]});
        w.close();
        const ojson j{{"d", s.d}, {"exponent", f.exponent}, {"predicted", -0.25 * (s.d - 1)}, {"r2", f.r2}};
        write_text(out / "heat_fit.json", j.dump(2) + "\n");
        res.summary.emplace_back("exponent", f.exponent);
    } else {
        CsvWriter w(out / "a6.csv", {"d", "t", "closed", "quadrature", "bound"});
        double worst = 0.0;
        for (int d : {2, 3, 4})
            for (double t : s.t_list) {
                const double a = example_a6_closed(d, t), q = example_a6_quadrature(d, t);
                w.row({static_cast<double>(d), t, a, q, d == 3 ? std::numbers::pi : std::numbers::pi * std::numbers::sqrt2});
                worst = std::max(worst, std::abs(a - q));
            }
        w.close();
        res.summary.emplace_back("max_abs_diff", worst);
    }
    return res;
}

// ----------------------------------------------------------------- spde

const std::vector<std::string> kRealisationHeader{"t",      "norm_v_Hk", "norm_theta_Hk", "norm_v_Hk1",
                                                  "norm_gradtheta_Hk", "int_v2", "int_mix", "int_gradtheta2",
                                                  "N",      "supN",      "exited"};

void write_realisation(const fs::path& dir, const RealisationResult& r) {
    CsvWriter w(dir / numbered("real", r.index, ".csv"), kRealisationHeader);
    for (const auto& d : r.records)
        w.row({d.t, d.norm_v, d.norm_theta, d.norm_v1, d.norm_grad, d.int_v2, d.int_mix, d.int_grad2, d.N, d.supN,
               d.exited ? 1.0 : 0.0});
    w.close();
    ojson j{{"index", r.index}, {"blowup", r.blowup}, {"left_tube", r.left_tube}, {"stop_time", r.stop_time},
            {"sup_v2", r.sup_v2}, {"supN", r.supN}};
    ojson ex = ojson::array();
    for (double t : r.exit_time) ex.push_back(std::isnan(t) ? ojson(nullptr) : ojson(t));
    j["exit_time"] = ex;
    write_text(dir / numbered("real", r.index, ".json"), j.dump(2) + "\n");
}

RealisationResult load_realisation(const fs::path& dir, std::size_t m) {
    RealisationResult r;
    const auto t = read_csv(dir / numbered("real", m, ".csv"));
    for (const auto& row : t.rows) {
        DiagnosticRecord d;
        d.t = row[0];
        d.norm_v = row[1];
        d.norm_theta = row[2];
        d.norm_v1 = row[3];
        d.norm_grad = row[4];
        d.int_v2 = row[5];
        d.int_mix = row[6];
        d.int_grad2 = row[7];
        d.N = row[8];
        d.supN = row[9];
        d.exited = row[10] != 0.0;
        r.records.push_back(d);
    }
    const auto j = nlohmann::json::parse(read_text(dir / numbered("real", m, ".json")));
    r.index = j.at("index").get<std::size_t>();
    r.blowup = j.at("blowup").get<bool>();
    r.left_tube = j.at("left_tube").get<bool>();
    r.stop_time = j.at("stop_time").get<double>();
    r.sup_v2 = j.at("sup_v2").get<double>();
    r.supN = j.at("supN").get<double>();
    for (const auto& e : j.at("exit_time")) r.exit_time.push_back(e.is_null() ? kNaN : e.get<double>());
    return r;
}

RunResult run_spde(const RunConfig& c, const RunOptions& opt, Manifest& man, const std::vector<std::size_t>& done) {
    const auto t0 = std::chrono::steady_clock::now();
    RunResult res;
    const SpdeSection& s = c.spde;
    const fs::path& out = opt.out;
    const WaveProfile p = make_profile(s.profile);
    write_profile_csv(out / "profile.csv", p);

    SpdeEnsembleConfig ec;
    ec.sim = s.sim;
    ec.noise = s.noise;
    ec.gy = s.grid.grid();
    ec.init = s.init;
    ec.etas = s.etas;
    ec.mode = c.experiment == Experiment::Frozen ? SpdeMode::Frozen : SpdeMode::Direct;
    ec.M = s.M;
    ec.histogram_bins = s.histogram_bins;
    ec.noise.validate(p.u_minus, p.u_plus);

    const fs::path rdir = out / "realisations";
    fs::create_directories(rdir);
    std::set<std::size_t> have(done.begin(), done.end());
    std::vector<std::size_t> todo;
    for (int m = 0; m < s.M; ++m)
        if (!have.count(static_cast<std::size_t>(m))) todo.push_back(static_cast<std::size_t>(m));

    const std::size_t chunk = static_cast<std::size_t>(std::max(1, resolve_workers(c.workers)));
    long fresh = 0;
    for (std::size_t i = 0; i < todo.size();) {
        std::size_t n = std::min(chunk, todo.size() - i);
        if (opt.stop_after >= 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(opt.stop_after - fresh));
        if (n == 0) {
            res.status = kInterrupted;
            return res;
        }
        const std::vector<std::size_t> part(todo.begin() + static_cast<long>(i), todo.begin() + static_cast<long>(i + n));
        for (const auto& r : run_ensemble(ec, p, c.global_seed, c.workers, part)) {
            write_realisation(rdir, r);
            man.completed.push_back(r.index);
        }
        i += n;
        fresh += static_cast<long>(n);
        write_manifest(out, man);
    }

    std::vector<RealisationResult> rs;
    for (int m = 0; m < s.M; ++m) rs.push_back(load_realisation(rdir, static_cast<std::size_t>(m)));
    const EnsembleSummary e = summarise(ec, rs, c.global_seed);
    res.blowups = e.blowups;

    ojson j;
    j["experiment"] = to_string(c.experiment);
    j["seed"] = c.global_seed;
    j["sigma"] = e.sigma;
    j["M"] = e.M;
    j["sup_v2"] = {{"estimate", e.sup_v2.estimate}, {"ci_lo", e.sup_v2.lo}, {"ci_hi", e.sup_v2.hi}};
    j["supN"] = {{"mean", e.supN_mean},
                 {"variance", e.supN_var},
                 {"quantile_levels", {0.05, 0.25, 0.5, 0.75, 0.95}},
                 {"quantiles", e.supN_quantiles}};
    j["p_moments"] = {{"1", e.p_moments[0]}, {"2", e.p_moments[1]}};
    j["etas"] = e.etas;
    j["exit_frequency"] = e.exit_frequency;
    j["exit_histogram"] = {{"eta", e.etas.front()}, {"edges", e.hist_edges}, {"counts", e.hist_counts}};
    j["blowups"] = e.blowups;
    j["left_tube"] = e.left_tube;
    j["runtime_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    j["config"] = ojson::parse(to_json(c));
    write_text(out / "ensemble.json", j.dump(2) + "\n");

    res.summary.emplace_back("sup_v2", e.sup_v2.estimate);
    res.summary.emplace_back("supN_mean", e.supN_mean);
    for (std::size_t q = 0; q < e.etas.size(); ++q)
        res.summary.emplace_back("exit_frequency_" + std::to_string(q), e.exit_frequency[q]);
    if (e.blowups > 0 && !opt.allow_partial) res.status = kBlowUp;
    return res;
}

// ------------------------------------------------- dualcheck, wave audit

RunResult run_dualcheck(const RunConfig& c, const fs::path& out) {
    RunResult res;
    const DualSection& s = c.dualcheck;
    const WaveProfile p = make_profile(s.profile);
    const auto r = dual_check(p, s.grid.grid(), s.noise, s.sigma, s.dts, s.T, s.pairs, c.global_seed, s.k, s.init, c.workers);
    CsvWriter w(out / "dualcheck.csv", {"dt", "gap", "local_slope"});
    for (std::size_t i = 0; i < r.dt.size(); ++i)
        w.row({r.dt[i], r.gap[i], i ? std::log(r.gap[i - 1] / r.gap[i]) / std::log(r.dt[i - 1] / r.dt[i]) : kNaN});
    w.close();
    const ojson j{{"slope", r.slope}, {"fit_slope", r.fit.slope}, {"fit_r2", r.fit.r2}, {"pairs", s.pairs}, {"T", s.T}};
    write_text(out / "dualcheck.json", j.dump(2) + "\n");
    res.summary.emplace_back("slope", r.slope);
    return res;
}

RunResult run_wave_audit(const RunConfig& c, const fs::path& out) {
    RunResult res;
    CsvWriter w(out / "wave_audit.csv", {"a", "c0", "ode_residual", "normalisation", "kernel_residual", "gap", "pass"});
    double all = 1.0;
    for (double a : c.wave_audit.a_list) {
        const auto r = wave_audit(a, c.wave_audit.profile.grid());
        w.row({r.a, r.c0, r.ode_residual, r.normalisation, r.kernel_residual, r.gap, r.pass ? 1.0 : 0.0});
        if (!r.pass) all = 0.0;
    }
    w.close();
    res.summary.emplace_back("all_pass", all);
    return res;
}

std::vector<std::size_t> verified_completed(const fs::path& out, const Manifest& m) {
    std::vector<std::size_t> ok;
    for (std::size_t idx : m.completed) {
        bool good = true;
        for (const char* ext : {".csv", ".json"}) {
            const std::string rel = "realisations/" + numbered("real", idx, ext);
            const auto it = std::find_if(m.files.begin(), m.files.end(), [&](const ManifestFile& f) { return f.path == rel; });
            good = good && it != m.files.end() && fs::exists(out / rel) && sha256_file(out / rel) == it->sha256;
        }
        if (good) ok.push_back(idx);
    }
    return ok;
}

} // namespace

RunResult run_experiment(const RunConfig& c, const RunOptions& opt) {
    validate(c);
    const fs::path& out = opt.out;
    const std::string yaml = to_yaml(c);
    const std::string hash = sha256_hex(yaml);
    std::vector<std::size_t> done;
    if (const auto old = read_manifest(out)) {
        if (old->config_sha256 != hash)
            throw ConfigError("output directory " + out.string() + " holds a run with a different config");
        if (old->status == "incomplete") done = verified_completed(out, *old);
    } else if (fs::exists(out) && !fs::is_empty(out)) {
        throw ConfigError("output directory " + out.string() + " is not empty and has no manifest");
    }
    fs::create_directories(out);

    Manifest man;
    man.experiment = to_string(c.experiment);
    man.version = version_string();
    man.seed = c.global_seed;
    man.workers = c.workers;
    man.config_sha256 = hash;
    man.completed = done;
    write_text(out / "config.yaml", yaml);
    write_manifest(out, man);

    RunResult res;
    switch (c.experiment) {
    case Experiment::Toy: res = run_toy(c, out); break;
    case Experiment::Chaining: res = run_chaining(c, out); break;
    case Experiment::Convbounds: res = run_convbounds(c, out); break;
    case Experiment::Spde:
    case Experiment::Frozen: res = run_spde(c, opt, man, done); break;
    case Experiment::Dualcheck: res = run_dualcheck(c, out); break;
    case Experiment::WaveAudit: res = run_wave_audit(c, out); break;
    }
    if (res.status == kInterrupted) return res;
    man.status = "complete";
    man.blowups = res.blowups;
    write_manifest(out, man);
    return res;
}

RunResult run_sweep(const YAML::Node& base, const std::string& axis, const std::vector<std::string>& values,
                    const RunOptions& opt) {
    if (values.empty()) throw ConfigError("sweep: empty value list for axis '" + axis + "'");
    // the normalised form has every key, so list-valued axes are recognised
    const YAML::Node full = YAML::Load(to_yaml(parse_config(base)));
    std::vector<RunConfig> cfgs;
    for (const auto& v : values) {
        YAML::Node n = YAML::Clone(full);
        set_path(n, axis, v);
        cfgs.push_back(parse_config(n));
        validate(cfgs.back());
    }
    const fs::path& out = opt.out;
    if (fs::exists(out) && !fs::is_empty(out) && !fs::exists(out / kManifestName))
        throw ConfigError("output directory " + out.string() + " is not empty and has no manifest");
    fs::create_directories(out);

    RunResult total;
    std::vector<RunResult> results;
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        std::string tag = values[i];
        for (char& ch : tag)
            if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '.' && ch != '-') ch = '_';
        RunOptions o = opt;
        o.out = out / (numbered("value", i, "") + "_" + tag);
        results.push_back(run_experiment(cfgs[i], o));
        total.status = std::max(total.status, results.back().status);
        total.blowups += results.back().blowups;
        if (results.back().status == kInterrupted) return total;
    }

    std::vector<std::string> keys;
    for (const auto& r : results)
        for (const auto& [k, v] : r.summary)
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    std::vector<std::string> header{"index", "value"};
    header.insert(header.end(), keys.begin(), keys.end());
    CsvWriter w(out / "sweep.csv", header);
    std::vector<double> numeric;
    for (std::size_t i = 0; i < results.size(); ++i) {
        char* end = nullptr;
        const double x = std::strtod(values[i].c_str(), &end);
        numeric.push_back(end && *end == '\0' && end != values[i].c_str() ? x : kNaN);
        std::vector<double> row{static_cast<double>(i), numeric.back()};
        for (const auto& k : keys) {
            double val = kNaN;
            for (const auto& [kk, vv] : results[i].summary)
                if (kk == k) val = vv;
            row.push_back(val);
        }
        w.row(row);
    }
    w.close();

    // tau_avg against sigma, fitted across the sweep
    if (axis == "toy.sigma" && cfgs[0].experiment == Experiment::Toy && cfgs[0].toy.mode == "ensemble") {
        CsvWriter f(out / "fits.csv", {"eta", "points", "exponent", "intercept", "r2"});
        for (std::size_t q = 0; q < cfgs[0].toy.cfg.etas.size(); ++q) {
            std::vector<double> sig, tau;
            for (std::size_t i = 0; i < results.size(); ++i) {
                const auto& sm = results[i].summary;
                const double t = sm[q].second;
                if (std::isfinite(t) && std::isfinite(numeric[i])) {
                    sig.push_back(numeric[i]);
                    tau.push_back(t);
                }
            }
            PowerLawFit pf{kNaN, kNaN, kNaN};
            if (sig.size() >= 3) pf = powerlaw_fit(sig, tau);
            f.row({cfgs[0].toy.cfg.etas[q], static_cast<double>(sig.size()), pf.exponent, pf.intercept, pf.r2});
        }
        f.close();
    }

    Manifest man;
    man.status = "complete";
    man.experiment = "sweep:" + std::string(to_string(cfgs[0].experiment));
    man.version = version_string();
    man.seed = cfgs[0].global_seed;
    man.workers = cfgs[0].workers;
    YAML::Emitter e;
    e << base;
    man.config_sha256 = sha256_hex(std::string(e.c_str()) + "\naxis: " + axis);
    man.blowups = total.blowups;
    write_manifest(out, man);
    return total;
}

} // namespace stochwave::app

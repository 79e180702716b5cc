#include "config.hpp"
#include "experiments.hpp"
#include "manifest.hpp"

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <iostream>

using namespace stochwave::app;

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out;
};

template <class T>
std::optional<T> env_number(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const long long x = std::strtoll(v, &end, 10);
    if (errno || *end || x < 0) throw ConfigError(std::string(name) + ": expected a nonnegative integer, got '" + v + "'");
    return static_cast<T>(x);
}

// flag > environment > config file
void apply(YAML::Node& root, const Overrides& cli) {
    auto seed = cli.seed ? cli.seed : env_number<std::uint64_t>("STOCHWAVE_SEED");
    auto workers = cli.workers ? cli.workers : env_number<int>("STOCHWAVE_WORKERS");
    if (seed) set_path(root, "global_seed", std::to_string(*seed));
    if (workers) set_path(root, "workers", std::to_string(*workers));
    if (cli.out) root["output"] = *cli.out;
}

void report(const RunResult& r, const std::string& out) {
    for (const auto& [k, v] : r.summary) std::cout << k << " = " << fmt(v) << "\n";
    if (r.status == kBlowUp) std::cerr << "stochwave: " << r.blowups << " realisation(s) flagged blow-up (use --allow-partial)\n";
    if (r.status == kInterrupted) std::cerr << "stochwave: stopped early; rerun to resume into " << out << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic travelling-wave experiment runner"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    Overrides ov;
    std::string config_path, axis;
    std::vector<std::string> values;
    bool allow_partial = false, json = false;
    long stop_after = -1;
    std::string verify_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "YAML or JSON config")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", ov.seed, "global seed (overrides STOCHWAVE_SEED and the config)");
        sub->add_option("--workers", ov.workers, "worker threads, 0 = all cores (overrides STOCHWAVE_WORKERS)");
        sub->add_option("--out", ov.out, "output directory");
        sub->add_flag("--allow-partial", allow_partial, "exit 0 even when realisations blew up");
        sub->add_option("--stop-after", stop_after)->group("");
    };
    auto* run = app.add_subcommand("run", "run one experiment");
    add_common(run);
    auto* sweep = app.add_subcommand("sweep", "run an experiment over a parameter ladder");
    add_common(sweep);
    sweep->add_option("--axis", axis, "dotted config path, e.g. toy.sigma")->required();
    sweep->add_option("--values", values, "values for the axis")->delimiter(',')->expected(0, -1)->required();
    auto* verify = app.add_subcommand("verify", "check a manifest against the files on disk");
    verify->add_option("dir", verify_dir)->required()->check(CLI::ExistingDirectory);
    auto* show = app.add_subcommand("config", "print the normalised config");
    show->add_option("config", config_path)->required()->check(CLI::ExistingFile);
    show->add_flag("--json", json);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*verify) {
            const auto problems = verify_manifest(verify_dir);
            for (const auto& p : problems) std::cerr << p << "\n";
            if (problems.empty()) std::cout << "manifest ok\n";
            return problems.empty() ? kOk : kError;
        }
        YAML::Node root = load_yaml_file(config_path);
        if (*show) {
            const RunConfig c = parse_config(root);
            std::cout << (json ? to_json(c) : to_yaml(c));
            return kOk;
        }
        apply(root, ov);
        RunOptions opt;
        opt.allow_partial = allow_partial;
        opt.stop_after = stop_after;
        if (*run) {
            const RunConfig c = parse_config(root);
            opt.out = c.output;
            const auto r = run_experiment(c, opt);
            report(r, c.output);
            return r.status;
        }
        if (values.empty()) throw ConfigError("sweep: empty value list for axis '" + axis + "'");
        opt.out = parse_config(root).output;
        const auto r = run_sweep(root, axis, values, opt);
        report(r, opt.out.string());
        return r.status;
    } catch (const std::exception& e) {
        std::cerr << "stochwave: " << e.what() << "\n";
        return kError;
    }
}

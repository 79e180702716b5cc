#pragma once

#include "config.hpp"
#include "io.hpp"

#include <string>
#include <utility>
#include <vector>

namespace YAML {
class Node;
}

namespace stochwave::app {

enum ExitStatus : int { kOk = 0, kError = 1, kBlowUp = 2, kInterrupted = 3 };

struct RunOptions {
    fs::path out;
    bool allow_partial = false;
    long stop_after = -1; // stop after this many new realisations (resume testing)
};

struct RunResult {
    int status = kOk;
    int blowups = 0;
    // scalar digest of the run, one sweep.csv column per entry
    std::vector<std::pair<std::string, double>> summary;
};

// Writes config.yaml, the experiment outputs and manifest.json into opt.out.
// An incomplete manifest with the same config hash resumes the run.
RunResult run_experiment(const RunConfig& c, const RunOptions& opt);

// One subdirectory per value plus sweep.csv (and fits.csv for toy.sigma);
// every value is parsed and validated before anything is written.
RunResult run_sweep(const YAML::Node& base, const std::string& axis, const std::vector<std::string>& values,
                    const RunOptions& opt);

} // namespace stochwave::app

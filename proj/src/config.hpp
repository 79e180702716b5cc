#pragma once

#include "stochwave/convbounds.hpp"
#include "stochwave/ensemble.hpp"
#include "stochwave/toy.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace YAML {
class Node;
}

namespace stochwave::app {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Experiment { Toy, Chaining, Convbounds, Spde, Frozen, Dualcheck, WaveAudit };

const char* to_string(Experiment e);

struct ProfileSection {
    double a = 0.25;
    double x_min = -40.0, x_max = 40.0;
    std::size_t n_x = 128;
    double tail_tol = 1e-12;

    Grid1D grid() const { return Grid1D(x_min, x_max, n_x); }
    bool operator==(const ProfileSection&) const = default;
};

struct GridSection {
    int d = 2;
    double L_y = 32.0;
    std::size_t n_y = 32;
    std::size_t max_points = 1u << 24; // memory budget for n_x * n_y^{d-1}

    TransverseGrid grid() const { return TransverseGrid(d, L_y, n_y); }
    bool operator==(const GridSection&) const = default;
};

struct ToySection {
    ToyConfig cfg;
    std::string mode = "ensemble"; // ensemble | ladder
    LadderOptions ladder;
    int save_paths = 3;
    int output_every = 10;
    int bootstrap = 200;
};

struct ChainingSection {
    int d = 3;
    std::vector<double> T_list{10.0, 100.0, 1000.0};
    std::vector<double> nu_list{0.25, 0.5, 1.0, 2.0};
    std::size_t mesh_n = 50;
    double mesh_T = 100.0;
    int M = 200;
    double dt = 0.1;
    int dudley_nodes = 80;
    bool entropy = true; // dch, covering and Dudley tables (closed-form metric, d = 3 or 5)
    bool sup_growth = true;
};

struct ConvSection {
    std::string kind = "eb"; // eb | zx | jg | heat | a6
    int d = 2;
    std::vector<double> T_list{10.0, 100.0, 1000.0};
    int M = 200;
    double dt = 0.25;
    BSpec B;
    XSpec X;
    GSpec G;
    double mu = -1.0; // jg: history exponent, negative selects (d-1)/4
    ProfileSection profile;
    std::vector<double> t_list{0.1, 1.0, 10.0, 1000.0}; // heat / a6 sample times
    double L_y = 200.0;
    std::size_t n_y = 256;
};

struct SpdeSection {
    ProfileSection profile;
    GridSection grid;
    SimConfig sim;
    NoiseSpec noise;
    InitialCondition init;
    std::vector<double> etas;
    int M = 10;
    int histogram_bins = 10;
};

struct DualSection {
    ProfileSection profile;
    GridSection grid;
    NoiseSpec noise;
    double sigma = 0.02;
    std::vector<double> dts{0.04, 0.02, 0.01};
    double T = 1.0;
    int pairs = 10;
    double k = 1.0;
    InitialCondition init{0.05, 0.3, 1};
};

struct AuditSection {
    std::vector<double> a_list{0.1, 0.25, 0.4};
    ProfileSection profile{0.25, -40.0, 40.0, 512, 1e-12};
};

struct RunConfig {
    Experiment experiment = Experiment::Toy;
    std::uint64_t global_seed = 1;
    int workers = 1;
    std::string output = "out";
    ToySection toy;
    ChainingSection chaining;
    ConvSection convbounds;
    SpdeSection spde;
    DualSection dualcheck;
    AuditSection wave_audit;
};

// Parses YAML (JSON is accepted as a subset).  Unknown keys and type errors
// raise ConfigError naming the field and line.
RunConfig parse_config(const YAML::Node& root);
RunConfig load_config_string(const std::string& text);
RunConfig load_config_file(const std::string& path);
YAML::Node load_yaml_file(const std::string& path);

std::string to_yaml(const RunConfig& c);
std::string to_json(const RunConfig& c);

// Sets the scalar or list at a dotted path ("toy.sigma") in a parsed tree.
void set_path(YAML::Node& root, const std::string& path, const std::string& value);

void validate(const RunConfig& c);

} // namespace stochwave::app

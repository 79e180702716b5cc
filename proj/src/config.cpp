#include "config.hpp"

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>
#include <utility>

namespace stochwave::app {

const char* to_string(Experiment e) {
    switch (e) {
    case Experiment::Toy: return "toy";
    case Experiment::Chaining: return "chaining";
    case Experiment::Convbounds: return "convbounds";
    case Experiment::Spde: return "spde";
    case Experiment::Frozen: return "frozen";
    case Experiment::Dualcheck: return "dualcheck";
    case Experiment::WaveAudit: return "wave-audit";
    }
    return "?";
}

namespace {

template <class E>
using Choices = std::initializer_list<std::pair<const char*, E>>;

const Choices<Experiment> kExperiments{{"toy", Experiment::Toy},         {"chaining", Experiment::Chaining},
                                       {"convbounds", Experiment::Convbounds}, {"spde", Experiment::Spde},
                                       {"frozen", Experiment::Frozen},   {"dualcheck", Experiment::Dualcheck},
                                       {"wave-audit", Experiment::WaveAudit}};
const Choices<Frame> kFrames{{"lab", Frame::Lab}, {"comoving", Frame::Comoving}};
const Choices<Integrator> kIntegrators{{"semi-implicit-spectral", Integrator::SemiImplicitSpectral},
                                       {"lie-splitting", Integrator::LieSplitting}};
const Choices<NoiseFamily> kFamilies{{"weighted", NoiseFamily::WeightedTranslationInvariant},
                                     {"transverse", NoiseFamily::TransverseLocalised},
                                     {"trace", NoiseFamily::TraceClass}};
const Choices<SpdeMode> kModes{{"direct", SpdeMode::Direct}, {"frozen", SpdeMode::Frozen}};

std::string line_of(const YAML::Node& n) {
    const auto m = n.Mark();
    return m.line >= 0 ? " (line " + std::to_string(m.line + 1) + ")" : "";
}

template <class T>
T scalar_as(const YAML::Node& n, const std::string& field) {
    if (!n.IsScalar()) throw ConfigError("field '" + field + "'" + line_of(n) + ": expected a scalar");
    try {
        if constexpr (std::is_same_v<T, bool>) {
            return n.as<bool>();
        } else if constexpr (std::is_unsigned_v<T>) {
            const auto s = n.as<std::string>();
            if (!s.empty() && s[0] == '-') throw YAML::BadConversion(n.Mark());
            return n.as<T>();
        } else {
            return n.as<T>();
        }
    } catch (const YAML::BadConversion&) {
        throw ConfigError("field '" + field + "'" + line_of(n) + ": cannot convert '" + n.Scalar() + "'");
    }
}

template <class T>
struct is_vector : std::false_type {};
template <class T, class A>
struct is_vector<std::vector<T, A>> : std::true_type {};

class Reader {
public:
    Reader(const YAML::Node& n, std::string path) : node_(n), path_(std::move(path)) {
        if (n && !n.IsMap() && !n.IsNull()) throw ConfigError("section '" + path_ + "'" + line_of(n) + ": expected a mapping");
    }

    template <class T>
    void operator()(const char* key, T& v) {
        seen_.insert(key);
        if (!node_ || node_.IsNull()) return;
        const YAML::Node n = node_[key];
        if (!n) return;
        const std::string f = field(key);
        if constexpr (is_vector<T>::value) {
            if (!n.IsSequence()) throw ConfigError("field '" + f + "'" + line_of(n) + ": expected a list");
            T out;
            for (const auto& e : n) out.push_back(scalar_as<typename T::value_type>(e, f));
            v = std::move(out);
        } else {
            v = scalar_as<T>(n, f);
        }
    }

    template <class E>
    void choice(const char* key, E& e, Choices<E> opts) {
        seen_.insert(key);
        if (!node_ || node_.IsNull()) return;
        const YAML::Node n = node_[key];
        if (!n) return;
        const auto s = scalar_as<std::string>(n, field(key));
        for (const auto& [name, val] : opts)
            if (s == name) {
                e = val;
                return;
            }
        std::string list;
        for (const auto& o : opts) list += std::string(list.empty() ? "" : ", ") + o.first;
        throw ConfigError("field '" + field(key) + "'" + line_of(n) + ": '" + s + "' is not one of {" + list + "}");
    }

    template <class S>
    void section(const char* key, S& s) {
        seen_.insert(key);
        YAML::Node n;
        if (node_ && !node_.IsNull()) n = node_[key];
        Reader r(n, field(key));
        visit(r, s);
        r.finish();
    }

    void finish() const {
        if (!node_ || !node_.IsMap()) return;
        for (const auto& kv : node_) {
            const auto k = kv.first.as<std::string>();
            if (!seen_.count(k)) throw ConfigError("unknown key '" + field(k.c_str()) + "'" + line_of(kv.first));
        }
    }

private:
    std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    YAML::Node node_;
    std::string path_;
    std::set<std::string> seen_;
};

// Shortest representation that parses back to the same double.
std::string num(double x) {
    if (std::isnan(x)) return ".nan";
    if (std::isinf(x)) return x > 0 ? ".inf" : "-.inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

class YamlWriter {
public:
    explicit YamlWriter(YAML::Emitter& e) : e_(e) {}

    template <class T>
    void operator()(const char* key, T& v) {
        e_ << YAML::Key << key << YAML::Value;
        if constexpr (std::is_same_v<T, std::vector<double>>) {
            e_ << YAML::Flow << YAML::BeginSeq;
            for (double x : v) e_ << num(x);
            e_ << YAML::EndSeq;
        } else if constexpr (std::is_same_v<T, double>) {
            e_ << num(v);
        } else {
            e_ << v;
        }
    }
    template <class E>
    void choice(const char* key, E& e, Choices<E> opts) {
        for (const auto& [name, val] : opts)
            if (val == e) e_ << YAML::Key << key << YAML::Value << name;
    }
    template <class S>
    void section(const char* key, S& s) {
        e_ << YAML::Key << key << YAML::Value << YAML::BeginMap;
        visit(*this, s);
        e_ << YAML::EndMap;
    }

private:
    YAML::Emitter& e_;
};

class JsonWriter {
public:
    explicit JsonWriter(nlohmann::ordered_json& j) : j_(j) {}

    template <class T>
    void operator()(const char* key, T& v) {
        if constexpr (std::is_same_v<T, std::vector<double>>) {
            auto a = nlohmann::ordered_json::array();
            for (double x : v) a.push_back(value(x));
            j_[key] = a;
        } else if constexpr (std::is_same_v<T, double>) {
            j_[key] = value(v);
        } else {
            j_[key] = v;
        }
    }
    template <class E>
    void choice(const char* key, E& e, Choices<E> opts) {
        for (const auto& [name, val] : opts)
            if (val == e) j_[key] = name;
    }
    template <class S>
    void section(const char* key, S& s) {
        nlohmann::ordered_json sub = nlohmann::ordered_json::object();
        JsonWriter w(sub);
        visit(w, s);
        j_[key] = sub;
    }

private:
    // JSON has no non-finite numbers; the reader accepts the YAML spellings
    static nlohmann::ordered_json value(double x) {
        if (std::isfinite(x)) return x;
        return num(x);
    }

    nlohmann::ordered_json& j_;
};

template <class V>
void visit(V& v, ProfileSection& s) {
    v("a", s.a);
    v("x_min", s.x_min);
    v("x_max", s.x_max);
    v("n_x", s.n_x);
    v("tail_tol", s.tail_tol);
}

template <class V>
void visit(V& v, GridSection& s) {
    v("d", s.d);
    v("L_y", s.L_y);
    v("n_y", s.n_y);
    v("max_points", s.max_points);
}

template <class V>
void visit(V& v, SimConfig& s) {
    v("dt", s.dt);
    v("T", s.T);
    v("sigma", s.sigma);
    v("k", s.k);
    v("mu", s.mu);
    v("eta", s.eta);
    v.choice("frame", s.frame, kFrames);
    v.choice("integrator", s.integrator, kIntegrators);
    v("output_every", s.output_every);
    v("clamp_cells", s.clamp_cells);
    v("blowup_ceiling", s.blowup_ceiling);
}

template <class V>
void visit(V& v, NoiseSpec& s) {
    v.choice("family", s.family, kFamilies);
    v("ell", s.ell);
    v("weighted", s.weighted);
    v("rho", s.rho);
    v("width_y", s.width_y);
    v("width_x", s.width_x);
    v("modes", s.modes);
    v("gtilde", s.gtilde.c);
}

template <class V>
void visit(V& v, InitialCondition& s) {
    v("v0", s.v0);
    v("theta0", s.theta0);
    v("mode", s.mode);
}

template <class V>
void visit(V& v, LadderOptions& s) {
    v("sigma_start", s.sigma_start);
    v("factor", s.factor);
    v("threshold", s.threshold);
    v("min_steps", s.min_steps);
    v("max_steps", s.max_steps);
    v("first_horizon", s.first_horizon);
}

template <class V>
void visit(V& v, ToySection& s) {
    v("d", s.cfg.d);
    v("sigma", s.cfg.sigma);
    v("dt", s.cfg.dt);
    v("T", s.cfg.T);
    v("M", s.cfg.M);
    v("etas", s.cfg.etas);
    v("overflow", s.cfg.overflow);
    v("mode", s.mode);
    v.section("ladder", s.ladder);
    v("save_paths", s.save_paths);
    v("output_every", s.output_every);
    v("bootstrap", s.bootstrap);
}

template <class V>
void visit(V& v, ChainingSection& s) {
    v("d", s.d);
    v("T_list", s.T_list);
    v("nu_list", s.nu_list);
    v("mesh_n", s.mesh_n);
    v("mesh_T", s.mesh_T);
    v("M", s.M);
    v("dt", s.dt);
    v("dudley_nodes", s.dudley_nodes);
    v("entropy", s.entropy);
    v("sup_growth", s.sup_growth);
}

template <class V>
void visit(V& v, BSpec& s) {
    v("amplitude", s.amplitude);
    v("r_min", s.r_min);
    v("r_max", s.r_max);
    v("nodes", s.nodes);
    v("k", s.k);
    v("mu", s.mu);
}

template <class V>
void visit(V& v, XSpec& s) {
    v("amplitude", s.amplitude);
    v("length", s.length);
    v("k", s.k);
    v("transverse", s.transverse);
}

template <class V>
void visit(V& v, GSpec& s) {
    v("decay", s.decay);
    v("amplitude", s.amplitude);
    v("width", s.width);
    v("k", s.k);
    v("r_min", s.r_min);
    v("r_max", s.r_max);
    v("nodes", s.nodes);
}

template <class V>
void visit(V& v, ConvSection& s) {
    v("kind", s.kind);
    v("d", s.d);
    v("T_list", s.T_list);
    v("M", s.M);
    v("dt", s.dt);
    v.section("B", s.B);
    v.section("X", s.X);
    v.section("G", s.G);
    v("mu", s.mu);
    v.section("profile", s.profile);
    v("t_list", s.t_list);
    v("L_y", s.L_y);
    v("n_y", s.n_y);
}

template <class V>
void visit(V& v, SpdeSection& s) {
    v.section("profile", s.profile);
    v.section("grid", s.grid);
    v.section("sim", s.sim);
    v.section("noise", s.noise);
    v.section("init", s.init);
    v("etas", s.etas);
    v("M", s.M);
    v("histogram_bins", s.histogram_bins);
}

template <class V>
void visit(V& v, DualSection& s) {
    v.section("profile", s.profile);
    v.section("grid", s.grid);
    v.section("noise", s.noise);
    v("sigma", s.sigma);
    v("dts", s.dts);
    v("T", s.T);
    v("pairs", s.pairs);
    v("k", s.k);
    v.section("init", s.init);
}

template <class V>
void visit(V& v, AuditSection& s) {
    v("a_list", s.a_list);
    v.section("profile", s.profile);
}

template <class V>
void visit(V& v, RunConfig& c) {
    v.choice("experiment", c.experiment, kExperiments);
    v("global_seed", c.global_seed);
    v("workers", c.workers);
    v("output", c.output);
    v.section("toy", c.toy);
    v.section("chaining", c.chaining);
    v.section("convbounds", c.convbounds);
    v.section("spde", c.spde);
    v.section("dualcheck", c.dualcheck);
    v.section("wave_audit", c.wave_audit);
}

} // namespace

RunConfig parse_config(const YAML::Node& root) {
    if (!root || root.IsNull()) throw ConfigError("config is empty");
    if (!root["experiment"]) throw ConfigError("missing required key 'experiment'");
    RunConfig c;
    Reader r(root, "");
    visit(r, c);
    r.finish();
    return c;
}

RunConfig load_config_string(const std::string& text) {
    try {
        return parse_config(YAML::Load(text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError("parse error (line " + std::to_string(e.mark.line + 1) + "): " + e.msg);
    }
}

YAML::Node load_yaml_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return YAML::Load(ss.str());
    } catch (const YAML::ParserException& e) {
        throw ConfigError(path + ": parse error (line " + std::to_string(e.mark.line + 1) + "): " + e.msg);
    }
}

RunConfig load_config_file(const std::string& path) { return parse_config(load_yaml_file(path)); }

std::string to_yaml(const RunConfig& c) {
    RunConfig copy = c;
    YAML::Emitter e;
    e << YAML::BeginMap;
    YamlWriter w(e);
    visit(w, copy);
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

std::string to_json(const RunConfig& c) {
    RunConfig copy = c;
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    JsonWriter w(j);
    visit(w, copy);
    return j.dump(2) + "\n";
}

void set_path(YAML::Node& root, const std::string& path, const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream ss(path);
    for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
    if (parts.empty()) throw ConfigError("empty sweep axis");
    YAML::Node val;
    try {
        val = YAML::Load(value);
    } catch (const YAML::ParserException&) {
        throw ConfigError("sweep value '" + value + "' is not valid YAML");
    }
    // yaml-cpp nodes are handles, so walk with explicit copies
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        YAML::Node next = chain.back()[parts[i]];
        if (!next || next.IsNull()) {
            chain.back()[parts[i]] = YAML::Node(YAML::NodeType::Map);
            next = chain.back()[parts[i]];
        }
        chain.push_back(next);
    }
    YAML::Node leaf = chain.back();
    const YAML::Node cur = leaf[parts.back()];
    if (cur && cur.IsSequence() && val.IsScalar()) {
        YAML::Node seq(YAML::NodeType::Sequence);
        seq.push_back(val);
        leaf[parts.back()] = seq;
        return;
    }
    leaf[parts.back()] = val;
}

void validate(const RunConfig& c) {
    if (c.workers < 0) throw ConfigError("workers must be >= 0");
    auto grid_budget = [](const ProfileSection& p, const GridSection& g) {
        g.grid().validate();
        double pts = static_cast<double>(p.n_x);
        for (int a = 0; a < g.d - 1; ++a) pts *= static_cast<double>(g.n_y);
        if (pts > static_cast<double>(g.max_points))
            throw ConfigError("grid: n_x * n_y^(d-1) exceeds max_points");
    };
    try {
        switch (c.experiment) {
        case Experiment::Toy:
            c.toy.cfg.validate();
            if (c.toy.mode != "ensemble" && c.toy.mode != "ladder") throw ConfigError("toy.mode must be ensemble or ladder");
            if (c.toy.output_every < 1) throw ConfigError("toy.output_every must be >= 1");
            break;
        case Experiment::Chaining:
            if (c.chaining.d < 2) throw ConfigError("chaining.d must be >= 2");
            if (c.chaining.entropy && c.chaining.d != 3 && c.chaining.d != 5)
                throw ConfigError("chaining.entropy needs d = 3 or 5; set entropy: false for growth tables only");
            if (c.chaining.mesh_n < 2) throw ConfigError("chaining.mesh_n must be >= 2");
            for (double T : c.chaining.T_list)
                if (!(T >= 2.0)) throw ConfigError("chaining.T_list values must be >= 2");
            break;
        case Experiment::Convbounds: {
            const auto& k = c.convbounds.kind;
            if (k != "eb" && k != "zx" && k != "jg" && k != "heat" && k != "a6")
                throw ConfigError("convbounds.kind must be one of {eb, zx, jg, heat, a6}");
            if (c.convbounds.d < 2) throw ConfigError("convbounds.d must be >= 2");
            for (double T : c.convbounds.T_list)
                if (!(T > 1.0)) throw ConfigError("convbounds.T_list values must be > 1");
            break;
        }
        case Experiment::Spde:
        case Experiment::Frozen:
            c.spde.sim.validate(c.spde.grid.d);
            grid_budget(c.spde.profile, c.spde.grid);
            if (c.spde.M < 1) throw ConfigError("spde.M must be >= 1");
            break;
        case Experiment::Dualcheck:
            grid_budget(c.dualcheck.profile, c.dualcheck.grid);
            if (c.dualcheck.dts.size() < 2) throw ConfigError("dualcheck.dts needs at least two values");
            if (c.dualcheck.pairs < 1) throw ConfigError("dualcheck.pairs must be >= 1");
            break;
        case Experiment::WaveAudit:
            if (c.wave_audit.a_list.empty()) throw ConfigError("wave_audit.a_list is empty");
            break;
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

} // namespace stochwave::app

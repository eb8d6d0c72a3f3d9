#include "cosimo/errors.hpp"
#include "cosimo/experiments.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace cosimo {

using nlohmann::json;

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Oversmoothing: return "oversmooth";
        case ExperimentKind::Stability: return "stability";
        case ExperimentKind::Trajectory: return "trajectory";
    }
    return "oversmooth";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
    if (name == "oversmooth") return ExperimentKind::Oversmoothing;
    if (name == "stability") return ExperimentKind::Stability;
    if (name == "trajectory") return ExperimentKind::Trajectory;
    throw DomainError("unknown experiment '" + name + "' (expected oversmooth, stability or trajectory)");
}

namespace {

// Reads one JSON object, recording every problem instead of stopping at the first.
class Reader {
public:
    Reader(const json& j, std::string path, std::vector<std::string>& issues)
        : j_(j), path_(std::move(path)), issues_(issues) {
        if (!j_.is_object()) issue("", "expected an object");
    }

    ~Reader() = default;

    // Flags keys that no reader asked for.
    void finish() {
        if (!j_.is_object()) return;
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) issue("/" + key, "unknown key");
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        if (!j_.is_object()) return nullptr;
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string at(const std::string& key) const { return path_ + "/" + key; }

    void integer(const std::string& key, int& out, int min) {
        if (const auto* v = find(key)) {
            if (!v->is_number_integer()) return issue("/" + key, "expected an integer");
            const auto x = v->get<long long>();
            if (x < min || x > 1000000000) return issue("/" + key, "must be >= " + std::to_string(min));
            out = static_cast<int>(x);
        }
    }

    void seed(const std::string& key, std::uint64_t& out) {
        if (const auto* v = find(key)) {
            if (!v->is_number_unsigned()) return issue("/" + key, "expected a non-negative integer");
            out = v->get<std::uint64_t>();
        }
    }

    void number(const std::string& key, double& out, double min, double max, bool open_min = false) {
        if (const auto* v = find(key)) {
            double x;
            if (!parse_number(*v, x)) return issue("/" + key, "expected a number");
            if (x < min || x > max || (open_min && x == min))
                return issue("/" + key, "out of range");
            out = x;
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const auto* v = find(key)) {
            if (!v->is_boolean()) return issue("/" + key, "expected true or false");
            out = v->get<bool>();
        }
    }

    template <class Parse, class T>
    void name(const std::string& key, T& out, Parse parse) {
        if (const auto* v = find(key)) {
            if (!v->is_string()) return issue("/" + key, "expected a string");
            try {
                out = parse(v->get<std::string>());
            } catch (const DomainError& e) {
                issue("/" + key, e.what());
            }
        }
    }

    void numbers(const std::string& key, std::vector<double>& out, double min, double max, bool positive) {
        if (const auto* v = find(key)) {
            if (!v->is_array() || v->empty()) return issue("/" + key, "expected a nonempty array of numbers");
            std::vector<double> xs;
            for (std::size_t i = 0; i < v->size(); ++i) {
                double x;
                if (!parse_number((*v)[i], x) || x < min || x > max || (positive && !(x > 0)))
                    return issue("/" + key + "/" + std::to_string(i), "invalid value");
                xs.push_back(x);
            }
            out = xs;
        }
    }

    void integers(const std::string& key, std::vector<int>& out, int min) {
        if (const auto* v = find(key)) {
            if (!v->is_array()) return issue("/" + key, "expected an array of integers");
            std::vector<int> xs;
            for (std::size_t i = 0; i < v->size(); ++i) {
                if (!(*v)[i].is_number_integer() || (*v)[i].get<long long>() < min)
                    return issue("/" + key + "/" + std::to_string(i), "expected an integer >= " + std::to_string(min));
                xs.push_back((*v)[i].get<int>());
            }
            out = xs;
        }
    }

    void issue(const std::string& suffix, const std::string& what) { issues_.push_back(path_ + suffix + ": " + what); }

    // Numbers, plus the strings "inf" / "-inf" for unbounded SNRs.
    static bool parse_number(const json& v, double& out) {
        if (v.is_number()) {
            out = v.get<double>();
            return std::isfinite(out);
        }
        if (v.is_string()) {
            const auto s = v.get<std::string>();
            if (s == "inf") out = std::numeric_limits<double>::infinity();
            else if (s == "-inf") out = -std::numeric_limits<double>::infinity();
            else return false;
            return true;
        }
        return false;
    }

private:
    const json& j_;
    std::string path_;
    std::vector<std::string>& issues_;
    std::set<std::string> seen_;
};

void read_complex(Reader& parent, ComplexSpec& spec, std::vector<std::string>& issues) {
    const auto* v = parent.find("complex");
    if (!v) return;
    Reader r(*v, parent.at("complex"), issues);
    r.integer("n_points", spec.n_points, 3);
    if (const auto* h = r.find("holes")) {
        if (!h->is_array()) {
            r.issue("/holes", "expected an array");
        } else {
            std::vector<HoleDisk> holes;
            for (std::size_t i = 0; i < h->size(); ++i) {
                const auto& d = (*h)[i];
                HoleDisk disk;
                Reader dr(d, r.at("holes/" + std::to_string(i)), issues);
                double radius = -1;
                dr.number("radius", radius, 0.0, 1e9);
                if (const auto* c = dr.find("center")) {
                    double x = 0, y = 0;
                    if (!c->is_array() || c->size() != 2 || !Reader::parse_number((*c)[0], x) ||
                        !Reader::parse_number((*c)[1], y))
                        dr.issue("/center", "expected [x, y]");
                    else
                        disk.center = {x, y};
                } else {
                    dr.issue("/center", "missing");
                }
                if (radius < 0) dr.issue("/radius", "missing");
                disk.radius = radius;
                dr.finish();
                holes.push_back(disk);
            }
            spec.holes = holes;
        }
    }
    r.finish();
}

void read_oversmoothing(const json& j, const std::string& path, OversmoothingConfig& c, std::vector<std::string>& issues) {
    Reader r(j, path, issues);
    read_complex(r, c.complex, issues);
    r.integer("features", c.features, 1);
    r.integer("layers", c.layers, 1);
    r.numbers("t_grid", c.t_grid, 0.0, 1e6, true);
    r.integer("realizations", c.realizations, 1);
    r.number("weight_std", c.weight_std, 0.0, 1e6, true);
    r.number("threshold", c.threshold, 0.0, 1e300, true);
    r.boolean("normalize_discrete", c.normalize_discrete);
    r.name("activation", c.activation, parse_activation);
    r.finish();
}

void read_stability(const json& j, const std::string& path, StabilityConfig& c, std::vector<std::string>& issues) {
    Reader r(j, path, issues);
    read_complex(r, c.complex, issues);
    r.numbers("snr_grid", c.snr_grid, -1e3, std::numeric_limits<double>::infinity(), false);
    r.integer("realizations", c.realizations, 1);
    r.number("t_d", c.t_d, 0.0, 1e6);
    r.number("t_u", c.t_u, 0.0, 1e6);
    r.integer("train_samples", c.train_samples, 1);
    r.integer("test_samples", c.test_samples, 1);
    r.integer("epochs", c.epochs, 0);
    r.number("step_size", c.step_size, 0.0, 1e6);
    r.finish();
}

void read_trajectory(const json& j, const std::string& path, TrajectoryConfig& c, std::vector<std::string>& issues) {
    Reader r(j, path, issues);
    read_complex(r, c.complex, issues);
    r.integer("trajectories", c.trajectories, 5);
    r.integer("min_length", c.min_length, 3);
    r.integer("max_length", c.max_length, 3);
    if (c.max_length < c.min_length) r.issue("/max_length", "must be >= min_length");
    r.number("greedy_probability", c.greedy_probability, 0.0, 1.0);
    r.integer("branches", c.branches, 1);
    r.integers("hidden", c.hidden, 1);
    r.name("aggregation", c.aggregation, parse_aggregation);
    r.name("activation", c.activation, parse_activation);
    r.number("init_t", c.init_t, 0.0, 1e6, true);
    r.integer("epochs", c.epochs, 0);
    r.number("step_size", c.step_size, 0.0, 1e6);
    r.number("train_fraction", c.train_fraction, 0.0, 1.0, true);
    r.integer("realizations", c.realizations, 1);
    r.finish();
}

json complex_json(const ComplexSpec& s) {
    json holes = json::array();
    for (const auto& h : s.holes) holes.push_back({{"center", {h.center[0], h.center[1]}}, {"radius", h.radius}});
    return {{"n_points", s.n_points}, {"holes", holes}};
}

json snr_json(double v) { return std::isinf(v) ? json(v > 0 ? "inf" : "-inf") : json(v); }

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
    }
    std::vector<std::string> issues;
    ExperimentConfig config;
    Reader r(j, "", issues);
    if (const auto* e = r.find("experiment")) {
        if (!e->is_string()) r.issue("/experiment", "expected a string");
        else {
            try {
                config.kind = parse_experiment_kind(e->get<std::string>());
            } catch (const DomainError& err) {
                r.issue("/experiment", err.what());
            }
        }
    } else {
        r.issue("/experiment", "missing");
    }
    r.seed("seed", config.seed);
    r.integer("jobs", config.jobs, 0);
    if (const auto* v = r.find("oversmooth")) read_oversmoothing(*v, "/oversmooth", config.oversmoothing, issues);
    if (const auto* v = r.find("stability")) read_stability(*v, "/stability", config.stability, issues);
    if (const auto* v = r.find("trajectory")) read_trajectory(*v, "/trajectory", config.trajectory, issues);
    r.finish();
    if (!issues.empty()) throw ConfigError(issues);
    return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({path.string() + ": cannot read config file"});
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str());
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
    const auto& o = config.oversmoothing;
    const auto& s = config.stability;
    const auto& t = config.trajectory;
    json snr = json::array();
    for (double v : s.snr_grid) snr.push_back(snr_json(v));
    const json j = {
        {"experiment", to_string(config.kind)},
        {"seed", config.seed},
        {"jobs", config.jobs},
        {"oversmooth",
         {{"complex", complex_json(o.complex)},
          {"features", o.features},
          {"layers", o.layers},
          {"t_grid", o.t_grid},
          {"realizations", o.realizations},
          {"weight_std", o.weight_std},
          {"threshold", o.threshold},
          {"normalize_discrete", o.normalize_discrete},
          {"activation", to_string(o.activation)}}},
        {"stability",
         {{"complex", complex_json(s.complex)},
          {"snr_grid", snr},
          {"realizations", s.realizations},
          {"t_d", s.t_d},
          {"t_u", s.t_u},
          {"train_samples", s.train_samples},
          {"test_samples", s.test_samples},
          {"epochs", s.epochs},
          {"step_size", s.step_size}}},
        {"trajectory",
         {{"complex", complex_json(t.complex)},
          {"trajectories", t.trajectories},
          {"min_length", t.min_length},
          {"max_length", t.max_length},
          {"greedy_probability", t.greedy_probability},
          {"branches", t.branches},
          {"hidden", t.hidden},
          {"aggregation", to_string(t.aggregation)},
          {"activation", to_string(t.activation)},
          {"init_t", t.init_t},
          {"epochs", t.epochs},
          {"step_size", t.step_size},
          {"train_fraction", t.train_fraction},
          {"realizations", t.realizations}}}};
    return j.dump(2) + "\n";
}

}  // namespace cosimo

#include "cosimo/analysis.hpp"
#include "cosimo/errors.hpp"
#include "cosimo/experiments.hpp"
#include "cosimo/spectral.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#ifndef COSIMO_VERSION
#define COSIMO_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace cosimo;

namespace {

constexpr int exit_failure = 1;
constexpr int exit_usage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path out_dir_default() {
    const char* dir = std::getenv("COSIMO_OUT_DIR");
    return dir && *dir ? fs::path(dir) : fs::path(".");
}

std::optional<int> env_jobs() {
    const char* text = std::getenv("COSIMO_JOBS");
    if (!text || !*text) return std::nullopt;
    try {
        std::size_t used = 0;
        const int jobs = std::stoi(text, &used);
        if (used == std::strlen(text) && jobs >= 0) return jobs;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("COSIMO_JOBS: expected a non-negative integer, got '") + text + "'");
}

// "default", "none", or "x,y,r;x,y,r;..."
std::vector<HoleDisk> parse_holes(const std::string& text) {
    if (text == "default") return default_holes();
    if (text == "none" || text.empty()) return {};
    std::vector<HoleDisk> holes;
    std::stringstream disks(text);
    std::string disk;
    while (std::getline(disks, disk, ';')) {
        std::stringstream fields(disk);
        std::string field;
        std::vector<double> v;
        try {
            while (std::getline(fields, field, ',')) {
                std::size_t used = 0;
                v.push_back(std::stod(field, &used));
                if (used != field.size()) throw std::invalid_argument(field);
            }
        } catch (const std::exception&) {
            throw UsageError("--holes: cannot parse '" + disk + "' (expected x,y,r)");
        }
        if (v.size() != 3 || !(v[2] > 0.0)) throw UsageError("--holes: '" + disk + "' must be x,y,r with r > 0");
        holes.push_back({{v[0], v[1]}, v[2]});
    }
    return holes;
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

void print_complex_summary(const SimplicialComplex& c, std::ostream& out) {
    out << "vertices: " << c.vertices().size() << "\n"
        << "edges: " << c.edges().size() << "\n"
        << "triangles: " << c.triangles().size() << "\n"
        << "euler_characteristic: " << c.euler_characteristic() << "\n";
    for (int k = 0; k < 3; ++k) {
        if (c.count(k) == 0) continue;
        const auto spectrum = eig_sym(hodge_operators(c, k).full);
        out << "level " << k << " hodge spectrum: min " << format_number(spectrum.eigenvalues.minCoeff()) << ", max "
            << format_number(spectrum.eigenvalues.maxCoeff()) << "\n";
    }
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    int n = 30;
    std::string holes = "default";
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_generate(const GenerateArgs& a) {
    if (a.n < 3) throw UsageError("--n: need at least 3 points, got " + std::to_string(a.n));
    const fs::path out = a.out.empty() ? out_dir_default() / "complex.json" : fs::path(a.out);
    const auto complex = generate_complex({a.n, parse_holes(a.holes)}, a.seed);
    write_text(out, complex_to_json(complex));
    print_complex_summary(complex, std::cout);
    std::cout << "written: " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- run

struct RunArgs {
    std::string experiment;
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    bool strict = false;
};

int cmd_run(const RunArgs& a) {
    if (a.experiment.empty() && a.config.empty()) throw UsageError("run: give --experiment, --config or both");
    ExperimentConfig config = a.config.empty() ? ExperimentConfig{} : load_experiment_config(a.config);
    if (!a.experiment.empty()) {
        try {
            config.kind = parse_experiment_kind(a.experiment);
        } catch (const DomainError& e) {
            throw UsageError(std::string("--experiment: ") + e.what());
        }
    }
    if (a.seed) config.seed = *a.seed;
    if (a.jobs) config.jobs = *a.jobs;
    else if (const auto env = env_jobs()) config.jobs = *env;

    const fs::path dir = a.out.empty() ? out_dir_default() : fs::path(a.out);
    const std::string name = to_string(config.kind);
    const auto started = utc_timestamp();
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = run_experiment(config);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const fs::path results = dir / (name + "_results.csv");
    const fs::path summary = dir / (name + "_summary.csv");
    const fs::path manifest = dir / (name + "_manifest.json");
    write_text(results, result.results.to_csv());
    write_text(summary, result.summary.to_csv());
    const nlohmann::json m = {
        {"tool", "cosimo"},
        {"version", COSIMO_VERSION},
        {"experiment", name},
        {"seed", config.seed},
        {"config", nlohmann::json::parse(experiment_config_to_json(config))},
        {"outputs", {{"results", results.filename().string()}, {"summary", summary.filename().string()}}},
        {"violations", result.violations},
        {"started_at", started},
        {"wall_time_seconds", seconds}};
    write_text(manifest, m.dump(2) + "\n");

    std::cout << result.summary.to_csv();
    std::cout << "violations: " << result.violations << "\n"
              << "written: " << results.string() << ", " << summary.string() << ", " << manifest.string() << "\n";
    if (a.strict && result.violations > 0) {
        std::cerr << "error: " << result.violations << " bound violation(s) with --strict\n";
        return exit_failure;
    }
    return 0;
}

// ---------------------------------------------------------------- inspect

struct InspectArgs {
    std::string complex;
    int level = 0;
    std::string op = "full";
    std::vector<double> taus{0.01, 0.05, 0.1, 0.2};
};

int cmd_inspect(const InspectArgs& a) {
    OperatorTag tag;
    try {
        tag = parse_operator_tag(a.op);
    } catch (const DomainError& e) {
        throw UsageError(std::string("--op: ") + e.what());
    }
    for (double tau : a.taus)
        if (!(tau > 0.0 && tau < 1.0)) throw UsageError("--tau: values must lie in (0, 1)");
    const auto complex = load_complex(a.complex);
    const auto ops = hodge_operators(complex, a.level);
    const auto spectrum = eig_sym(select_operator(ops, tag), tag);
    std::cout << "level: " << a.level << "\n"
              << "operator: " << to_string(tag) << "\n"
              << "size: " << spectrum.size() << "\n"
              << "eigenvalues:";
    // Roundoff-level eigenvalues are shown as 0.
    const double floor = spectrum.size() ? 1e-10 * std::max(1.0, spectrum.eigenvalues.maxCoeff()) : 0.0;
    for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
        const double v = spectrum.eigenvalues(i);
        std::cout << " " << format_number(std::abs(v) < floor ? 0.0 : v);
    }
    std::cout << "\n";
    const auto base = spectral_entropy_select(spectrum.eigenvalues, a.taus.front());
    std::cout << "spectral_entropy: " << (base.defined ? format_number(base.entropy) : "undefined") << "\n"
              << "tau,k\n";
    for (double tau : a.taus) {
        const auto sel = spectral_entropy_select(spectrum.eigenvalues, tau);
        std::cout << format_number(tau) << "," << (sel.defined ? format_number(static_cast<long long>(sel.k)) : "none")
                  << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------- train / eval

struct ModelArgs {
    std::string complex;
    std::string config;
    std::string model;
    std::uint64_t seed = 1;
    std::optional<int> trajectories;
    std::optional<int> epochs;
};

TrajectoryConfig trajectory_config(const ModelArgs& a) {
    TrajectoryConfig c = a.config.empty() ? TrajectoryConfig{} : load_experiment_config(a.config).trajectory;
    if (a.trajectories) c.trajectories = *a.trajectories;
    if (a.epochs) c.epochs = *a.epochs;
    return c;
}

// Training draws trajectories from stream (seed, 0); evaluation from (seed, 1), so they differ.
Dataset trajectory_batch(const SimplicialComplex& complex, const ComplexOperators& ops, const TrajectoryConfig& c,
                         std::uint64_t seed, std::uint64_t stream) {
    const auto data = generate_trajectories(complex, c.trajectories, c.min_length, c.max_length,
                                            c.greedy_probability, realization_seed(seed, stream, 1));
    std::vector<std::size_t> all(data.trajectories.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return trajectory_samples(data, all, ops);
}

int cmd_train(const ModelArgs& a) {
    const auto c = trajectory_config(a);
    const auto complex = load_complex(a.complex);
    const auto ops = make_operators(complex);
    const auto data = trajectory_batch(complex, ops, c, a.seed, 0);
    Network net = trajectory_network(c, realization_seed(a.seed, 0, 3));
    const auto trace = train(net, ops, data, trajectory_train_config(c));
    const fs::path out = a.model.empty() ? out_dir_default() / "model.json" : fs::path(a.model);
    save_checkpoint(net, {}, complex.checksum(), out);
    std::cout << "samples,initial_loss,final_loss,train_accuracy,uniform_baseline\n"
              << data.samples << "," << format_number(trace.losses.front()) << ","
              << format_number(trace.losses.back()) << "," << format_number(candidate_accuracy(net, ops, data)) << ","
              << format_number(uniform_guess_accuracy(data.candidates)) << "\n"
              << "written: " << out.string() << "\n";
    return 0;
}

int cmd_eval(const ModelArgs& a) {
    const auto c = trajectory_config(a);
    const auto complex = load_complex(a.complex);
    const auto checkpoint = load_checkpoint(a.model);
    if (checkpoint.complex_checksum != complex.checksum())
        throw Error("eval: checkpoint " + a.model + " was trained on a different complex");
    const auto ops = make_operators(complex, checkpoint.truncation);
    const auto data = trajectory_batch(complex, ops, c, a.seed, 1);
    const double loss = evaluate_loss(checkpoint.network, ops, data, LossKind::CandidateCrossEntropy);
    std::cout << "samples,loss,accuracy,uniform_baseline\n"
              << data.samples << "," << format_number(loss) << ","
              << format_number(candidate_accuracy(checkpoint.network, ops, data)) << ","
              << format_number(uniform_guess_accuracy(data.candidates)) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continuous simplicial neural networks: complexes, spectra, experiments"};
    app.set_version_flag("--version", std::string(COSIMO_VERSION));
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Sample a random Delaunay complex with holes");
    generate->add_option("--n", gen.n, "Number of points")->capture_default_str();
    generate->add_option("--holes", gen.holes, "'default', 'none' or x,y,r[;x,y,r...]")->capture_default_str();
    generate->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
    generate->add_option("--out", gen.out, "Output complex JSON (default $COSIMO_OUT_DIR/complex.json)");

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment and write CSV results plus a manifest");
    run_cmd->add_option("--experiment", run.experiment, "oversmooth, stability or trajectory");
    run_cmd->add_option("--config", run.config, "Experiment config JSON")->check(CLI::ExistingFile);
    run_cmd->add_option("--out", run.out, "Output directory (default $COSIMO_OUT_DIR, else .)");
    run_cmd->add_option("--seed", run.seed, "Override the master seed");
    run_cmd->add_option("--jobs", run.jobs, "Worker threads, 0 for automatic (default $COSIMO_JOBS)")
        ->check(CLI::NonNegativeNumber);
    run_cmd->add_flag("--strict", run.strict, "Exit 1 when any bound inequality fails");

    InspectArgs ins;
    auto* inspect = app.add_subcommand("inspect", "Print a Hodge spectrum and spectral-entropy K choices");
    inspect->add_option("--complex", ins.complex, "Complex JSON")->required()->check(CLI::ExistingFile);
    inspect->add_option("--level", ins.level, "Simplex level")->check(CLI::Range(0, 2))->capture_default_str();
    inspect->add_option("--op", ins.op, "down, up or full")->capture_default_str();
    inspect->add_option("--tau", ins.taus, "Entropy tolerances")->capture_default_str();

    ModelArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train the trajectory model on a complex and save a checkpoint");
    train_cmd->add_option("--complex", tr.complex, "Complex JSON")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--config", tr.config, "Experiment config JSON (trajectory section)")
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--out", tr.model, "Checkpoint path (default $COSIMO_OUT_DIR/model.json)");
    train_cmd->add_option("--seed", tr.seed, "Seed for trajectories and initialization")->capture_default_str();
    train_cmd->add_option("--trajectories", tr.trajectories, "Number of training trajectories")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--epochs", tr.epochs, "Training epochs")->check(CLI::NonNegativeNumber);

    ModelArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on fresh trajectories");
    eval_cmd->add_option("--complex", ev.complex, "Complex JSON")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--model", ev.model, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--config", ev.config, "Experiment config JSON (trajectory section)")
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--seed", ev.seed, "Seed for the evaluation trajectories")->capture_default_str();
    eval_cmd->add_option("--trajectories", ev.trajectories, "Number of evaluation trajectories")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : exit_usage;
    }

    try {
        if (*generate) return cmd_generate(gen);
        if (*run_cmd) return cmd_run(run);
        if (*inspect) return cmd_inspect(ins);
        if (*train_cmd) return cmd_train(tr);
        if (*eval_cmd) return cmd_eval(ev);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_failure;
    }
    return exit_usage;
}

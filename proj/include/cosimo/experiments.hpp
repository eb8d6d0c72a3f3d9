#pragma once

#include "cosimo/analysis.hpp"
#include "cosimo/complex.hpp"
#include "cosimo/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cosimo {

// ---------------------------------------------------------------- tables

/// Rectangular result table with fixed snake_case headers.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row);
    std::string to_csv() const;
};

/// 12 significant digits; "inf", "-inf" and "nan" for non-finite values.
std::string format_number(double v);
std::string format_number(long long v);

void write_text(const std::filesystem::path& path, const std::string& text);

// ---------------------------------------------------------------- configs

enum class ExperimentKind { Oversmoothing, Stability, Trajectory };

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& name);

std::vector<HoleDisk> default_holes();

struct ComplexSpec {
    int n_points = 30;
    std::vector<HoleDisk> holes = default_holes();
};

/// Generates the random Delaunay complex of one realization.
SimplicialComplex generate_complex(const ComplexSpec& spec, std::uint64_t seed);

struct OversmoothingConfig {
    ComplexSpec complex;
    int features = 4;
    int layers = 100;
    std::vector<double> t_grid{1e-2, 1e-1, 0.2, 0.5};
    int realizations = 50;
    double weight_std = 0.2;
    double threshold = 1e-10;
    bool normalize_discrete = true;
    Activation activation = Activation::ReLU;
};

struct StabilityConfig {
    ComplexSpec complex;
    std::vector<double> snr_grid{-5.0, 0.0, 10.0, 20.0};
    int realizations = 30;
    double t_d = 1.0;
    double t_u = 2.0;
    int train_samples = 20;
    int test_samples = 20;
    int epochs = 300;
    double step_size = 0.02;
};

struct TrajectoryConfig {
    ComplexSpec complex{40, default_holes()};
    int trajectories = 200;
    int min_length = 5;
    int max_length = 10;
    double greedy_probability = 0.8;
    int branches = 3;
    std::vector<int> hidden{4};
    Aggregation aggregation = Aggregation::Sum;
    Activation activation = Activation::Tanh;  // odd, so edge orientation does not bias the scores
    double init_t = 0.5;
    int epochs = 150;
    double step_size = 0.02;  // Adam
    double train_fraction = 0.8;
    int realizations = 10;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Oversmoothing;
    std::uint64_t seed = 1;
    int jobs = 0;  // 0: number of realizations capped at hardware concurrency
    OversmoothingConfig oversmoothing;
    StabilityConfig stability;
    TrajectoryConfig trajectory;
};

/// Parses an experiment config. Missing keys keep their defaults; every
/// schema violation is collected and reported with its JSON path (ConfigError).
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string experiment_config_to_json(const ExperimentConfig& config);

/// Seed of realization `index` derived from the master seed (splitmix64).
std::uint64_t realization_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream = 0);

/// Runs body(i) for i in [0, count) on up to `jobs` threads; results must be
/// written to per-index slots. Exceptions are rethrown after all workers stop.
void parallel_for(int count, int jobs, const std::function<void(int)>& body);

// ---------------------------------------------------------------- results

struct ExperimentResult {
    Table results;
    Table summary;
    int violations = 0;  // bound inequalities that failed
};

// ---------------------------------------------------------------- over-smoothing

struct OversmoothingCurve {
    std::string model;  // "discrete" or "continuous"
    double t = 0.0;     // receptive field; 0 for the discrete model
    std::vector<double> mean_lhs, mean_rhs, mean_energy;  // index l - 1 for layer l
    std::vector<int> violations;
    std::optional<int> crossing;  // first layer with mean energy below the threshold
};

std::vector<OversmoothingCurve> oversmoothing_curves(const OversmoothingConfig& config, std::uint64_t seed,
                                                     int jobs = 1);
ExperimentResult run_oversmoothing(const OversmoothingConfig& config, std::uint64_t seed, int jobs = 1);

// ---------------------------------------------------------------- stability

struct StabilityRow {
    double snr1 = 0.0, snr2 = 0.0;
    int realization = 0;
    std::uint64_t seed = 0;
    BoundReport bound;
    double train_error = 0.0;
    double test_error = 0.0;
};

struct StabilityCell {
    double snr1 = 0.0, snr2 = 0.0;
    double mean_lhs = 0.0, mean_rhs = 0.0, mean_gap = 0.0;
    double mean_test_error = 0.0, std_test_error = 0.0;
    int violations = 0;
};

/// One realization: complex, perturbation, stability-bound report and a trained
/// one-layer model on the perturbed complex.
StabilityRow stability_realization(const StabilityConfig& config, double snr1, double snr2, std::uint64_t seed);
std::vector<StabilityRow> stability_rows(const StabilityConfig& config, std::uint64_t seed, int jobs = 1);
std::vector<StabilityCell> stability_cells(const StabilityConfig& config, const std::vector<StabilityRow>& rows);
ExperimentResult run_stability(const StabilityConfig& config, std::uint64_t seed, int jobs = 1);

// ---------------------------------------------------------------- trajectories

struct Trajectory {
    std::vector<int> vertices;  // vertex indices, consecutive ones share an edge
};

struct TrajectoryDataset {
    SimplicialComplex complex;
    std::vector<Trajectory> trajectories;
    Eigen::MatrixXd flows;  // |edges| x n: oriented flow of each prefix (all but the last vertex)
    std::vector<CandidateSet> candidates;  // neighbors of the prefix end, minus the vertex before it
};

/// Oriented edge flow of a vertex walk: +1 on edges traversed along their
/// orientation, -1 against it, summed over repeats.
Eigen::VectorXd walk_flow(const SimplicialComplex& complex, const std::vector<int>& walk);

/// Non-backtracking walks from a random start vertex towards a random goal at
/// least min_length - 1 hops away. Each step moves to the neighbor closest to
/// the goal with probability `greedy_probability`, otherwise to a uniform
/// non-backtracking neighbor. A walk ends at the goal or after max_length
/// vertices; dead ends are resampled (up to 100 attempts per walk).
TrajectoryDataset generate_trajectories(const SimplicialComplex& complex, int n_traj, int min_length,
                                        int max_length, double greedy_probability, std::uint64_t seed);

/// Mean of 1 / |candidates|.
double uniform_guess_accuracy(const std::vector<CandidateSet>& sets);

/// Batch of the selected trajectories: prefix flows at level 1, zeros elsewhere.
Dataset trajectory_samples(const TrajectoryDataset& data, const std::vector<std::size_t>& indices,
                           const ComplexOperators& ops);
/// Fraction of samples whose highest-scoring candidate is the label.
double candidate_accuracy(const Network& net, const ComplexOperators& ops, const Dataset& data);
/// Edge-level model {1, hidden..., 1} and its training setup (Adam, candidate cross-entropy).
Network trajectory_network(const TrajectoryConfig& config, std::uint64_t seed);
TrainConfig trajectory_train_config(const TrajectoryConfig& config);

struct TrajectoryRun {
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double untrained_accuracy = 0.0;
    double baseline = 0.0;  // uniform guess on the test split
};

TrajectoryRun trajectory_realization(const TrajectoryConfig& config, std::uint64_t seed);
std::vector<TrajectoryRun> trajectory_runs(const TrajectoryConfig& config, std::uint64_t seed, int jobs = 1);
ExperimentResult run_trajectory(const TrajectoryConfig& config, std::uint64_t seed, int jobs = 1);

ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace cosimo

#include "cosimo/errors.hpp"
#include "cosimo/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <random>

namespace cosimo {

Eigen::VectorXd walk_flow(const SimplicialComplex& complex, const std::vector<int>& walk) {
    Eigen::VectorXd flow = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(complex.edges().size()));
    const auto& vertices = complex.vertices();
    for (std::size_t i = 0; i + 1 < walk.size(); ++i) {
        const Vertex a = vertices.at(static_cast<std::size_t>(walk[i]));
        const Vertex b = vertices.at(static_cast<std::size_t>(walk[i + 1]));
        const auto e = complex.edge_index(a, b);
        if (!e) throw DomainError("walk_flow: vertices " + std::to_string(a) + " and " + std::to_string(b) +
                                  " are not adjacent");
        flow(static_cast<Eigen::Index>(*e)) += a < b ? 1.0 : -1.0;
    }
    return flow;
}

namespace {

std::vector<int> hop_distances(const std::vector<std::vector<std::size_t>>& adj, std::size_t source) {
    std::vector<int> dist(adj.size(), -1);
    std::queue<std::size_t> queue;
    dist[source] = 0;
    queue.push(source);
    while (!queue.empty()) {
        const auto v = queue.front();
        queue.pop();
        for (auto w : adj[v])
            if (dist[w] < 0) {
                dist[w] = dist[v] + 1;
                queue.push(w);
            }
    }
    return dist;
}

}  // namespace

TrajectoryDataset generate_trajectories(const SimplicialComplex& complex, int n_traj, int min_length, int max_length,
                                        double greedy_probability, std::uint64_t seed) {
    if (n_traj < 1) throw DomainError("generate_trajectories: need at least one trajectory");
    if (min_length < 3 || max_length < min_length)
        throw DomainError("generate_trajectories: lengths must satisfy 3 <= min_length <= max_length");
    if (!(greedy_probability >= 0.0 && greedy_probability <= 1.0))
        throw DomainError("generate_trajectories: greedy probability must be in [0, 1]");
    const std::size_t n = complex.vertices().size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t v = 0; v < n; ++v) adj[v] = complex.neighbors(v);
    std::vector<std::vector<int>> dist(n);
    for (std::size_t v = 0; v < n; ++v) dist[v] = hop_distances(adj, v);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto pick = [&](std::size_t size) { return std::uniform_int_distribution<std::size_t>(0, size - 1)(rng); };

    TrajectoryDataset out;
    out.complex = complex;
    const int max_attempts = 100;
    for (int t = 0; t < n_traj; ++t) {
        std::vector<int> walk;
        for (int attempt = 0; attempt < max_attempts && walk.empty(); ++attempt) {
            const std::size_t start = pick(n);
            std::vector<std::size_t> goals;
            for (std::size_t v = 0; v < n; ++v)
                if (dist[start][v] >= min_length - 1) goals.push_back(v);
            if (goals.empty()) continue;
            const std::size_t goal = goals[pick(goals.size())];
            // Walk until the goal is reached or the length cap is hit.
            std::vector<int> w{static_cast<int>(start)};
            while (static_cast<int>(w.size()) < max_length && static_cast<std::size_t>(w.back()) != goal) {
                const auto cur = static_cast<std::size_t>(w.back());
                const int prev = w.size() > 1 ? w[w.size() - 2] : -1;
                std::vector<std::size_t> options;
                for (auto x : adj[cur])
                    if (static_cast<int>(x) != prev) options.push_back(x);
                if (options.empty()) break;  // dead end
                std::size_t next;
                if (unit(rng) < greedy_probability) {
                    int best = std::numeric_limits<int>::max();
                    for (auto x : options) best = std::min(best, dist[goal][x]);
                    std::vector<std::size_t> closest;
                    for (auto x : options)
                        if (dist[goal][x] == best) closest.push_back(x);
                    next = closest[pick(closest.size())];
                } else {
                    next = options[pick(options.size())];
                }
                w.push_back(static_cast<int>(next));
            }
            const bool stuck = static_cast<std::size_t>(w.back()) != goal && static_cast<int>(w.size()) < max_length;
            if (!stuck && static_cast<int>(w.size()) >= min_length) walk = std::move(w);
        }
        if (walk.empty())
            throw DomainError("generate_trajectories: no walk of at least " + std::to_string(min_length) +
                              " vertices after " + std::to_string(max_attempts) + " attempts");
        out.trajectories.push_back({walk});
    }

    const auto count = static_cast<Eigen::Index>(out.trajectories.size());
    out.flows.resize(static_cast<Eigen::Index>(complex.edges().size()), count);
    for (Eigen::Index i = 0; i < count; ++i) {
        const auto& walk = out.trajectories[static_cast<std::size_t>(i)].vertices;
        const std::vector<int> prefix(walk.begin(), walk.end() - 1);
        out.flows.col(i) = walk_flow(complex, prefix);
        CandidateSet set;
        // Walks never backtrack, so the vertex before the last one is not a candidate.
        const int came_from = prefix[prefix.size() - 2];
        for (auto v : adj[static_cast<std::size_t>(prefix.back())])
            if (static_cast<int>(v) != came_from) set.candidates.push_back(static_cast<int>(v));
        const auto it = std::find(set.candidates.begin(), set.candidates.end(), walk.back());
        set.label = static_cast<int>(it - set.candidates.begin());
        out.candidates.push_back(std::move(set));
    }
    return out;
}

double uniform_guess_accuracy(const std::vector<CandidateSet>& sets) {
    if (sets.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& s : sets) sum += 1.0 / static_cast<double>(s.candidates.size());
    return sum / static_cast<double>(sets.size());
}

namespace {

// 80/20-style split, stratified by the label's position in its candidate list.
void stratified_split(const TrajectoryDataset& data, double fraction, std::mt19937_64& rng,
                      std::vector<std::size_t>& train, std::vector<std::size_t>& test) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < data.candidates.size(); ++i) groups[data.candidates[i].label].push_back(i);
    for (auto& [label, members] : groups) {
        std::shuffle(members.begin(), members.end(), rng);
        const auto cut = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
        train.insert(train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(cut));
        test.insert(test.end(), members.begin() + static_cast<std::ptrdiff_t>(cut), members.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
}

}  // namespace

Dataset trajectory_samples(const TrajectoryDataset& data, const std::vector<std::size_t>& idx,
                           const ComplexOperators& ops) {
    Dataset d;
    d.samples = static_cast<int>(idx.size());
    d.inputs[0] = Eigen::MatrixXd::Zero(ops.size(0), d.samples);
    d.inputs[1].resize(ops.size(1), d.samples);
    d.inputs[2] = Eigen::MatrixXd::Zero(ops.size(2), d.samples);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        d.inputs[1].col(static_cast<Eigen::Index>(i)) = data.flows.col(static_cast<Eigen::Index>(idx[i]));
        d.candidates.push_back(data.candidates[idx[i]]);
    }
    return d;
}

double candidate_accuracy(const Network& net, const ComplexOperators& ops, const Dataset& d) {
    if (d.samples == 0) return 0.0;
    const auto cache = net.forward(ops, d.inputs, d.samples, false);
    const auto predicted = predict_candidates(cache.final_outputs()[1], ops.b[1], d.candidates);
    int hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == d.candidates[i].label;
    return static_cast<double>(hits) / static_cast<double>(d.samples);
}

Network trajectory_network(const TrajectoryConfig& config, std::uint64_t seed) {
    NetworkConfig nc;
    nc.dims = {1};
    nc.dims.insert(nc.dims.end(), config.hidden.begin(), config.hidden.end());
    nc.dims.push_back(1);
    nc.branches = config.branches;
    nc.aggregation = config.aggregation;
    nc.sigma.kind = config.activation;
    nc.init_t = config.init_t;
    nc.out_level = 1;
    return Network(nc, seed);
}

TrainConfig trajectory_train_config(const TrajectoryConfig& config) {
    TrainConfig tc;
    tc.epochs = config.epochs;
    tc.step_size = config.step_size;
    tc.loss = LossKind::CandidateCrossEntropy;
    tc.optimizer = Optimizer::Adam;
    return tc;
}

TrajectoryRun trajectory_realization(const TrajectoryConfig& config, std::uint64_t seed) {
    const auto complex = generate_complex(config.complex, realization_seed(seed, 0, 0));
    const auto data = generate_trajectories(complex, config.trajectories, config.min_length, config.max_length,
                                            config.greedy_probability, realization_seed(seed, 0, 1));
    std::mt19937_64 rng(realization_seed(seed, 0, 2));
    std::vector<std::size_t> train_idx, test_idx;
    stratified_split(data, config.train_fraction, rng, train_idx, test_idx);
    const auto ops = make_operators(complex);
    const Dataset train_set = trajectory_samples(data, train_idx, ops);
    const Dataset test_set = trajectory_samples(data, test_idx, ops);

    Network net = trajectory_network(config, realization_seed(seed, 0, 3));
    TrajectoryRun run;
    run.baseline = uniform_guess_accuracy(test_set.candidates);
    run.untrained_accuracy = candidate_accuracy(net, ops, test_set);
    train(net, ops, train_set, trajectory_train_config(config));
    run.train_accuracy = candidate_accuracy(net, ops, train_set);
    run.test_accuracy = candidate_accuracy(net, ops, test_set);
    return run;
}

std::vector<TrajectoryRun> trajectory_runs(const TrajectoryConfig& config, std::uint64_t seed, int jobs) {
    if (config.realizations < 1) throw DomainError("trajectory: realizations must be >= 1");
    std::vector<TrajectoryRun> runs(static_cast<std::size_t>(config.realizations));
    parallel_for(config.realizations, jobs, [&](int i) {
        runs[static_cast<std::size_t>(i)] =
            trajectory_realization(config, realization_seed(seed, static_cast<std::uint64_t>(i), 7));
    });
    return runs;
}

ExperimentResult run_trajectory(const TrajectoryConfig& config, std::uint64_t seed, int jobs) {
    const auto runs = trajectory_runs(config, seed, jobs);
    ExperimentResult out;
    out.results.header = {"realization", "train_accuracy", "test_accuracy", "untrained_accuracy", "uniform_baseline"};
    std::vector<double> test;
    double base = 0.0, untrained = 0.0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        out.results.add({format_number(static_cast<long long>(i)), format_number(r.train_accuracy),
                         format_number(r.test_accuracy), format_number(r.untrained_accuracy),
                         format_number(r.baseline)});
        test.push_back(r.test_accuracy);
        base += r.baseline;
        untrained += r.untrained_accuracy;
    }
    const double n = static_cast<double>(runs.size());
    const double mean = std::accumulate(test.begin(), test.end(), 0.0) / n;
    double var = 0.0;
    for (double a : test) var += (a - mean) * (a - mean);
    const double std_dev = runs.size() > 1 ? std::sqrt(var / (n - 1)) : 0.0;
    out.summary.header = {"branches", "mean_test_accuracy", "std_test_accuracy", "mean_untrained_accuracy",
                          "mean_uniform_baseline"};
    out.summary.add({format_number(static_cast<long long>(config.branches)), format_number(mean),
                     format_number(std_dev), format_number(untrained / n), format_number(base / n)});
    return out;
}

}  // namespace cosimo

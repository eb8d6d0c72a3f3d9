#include "cosimo/errors.hpp"
#include "cosimo/experiments.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>

using namespace cosimo;

namespace {

const double inf = std::numeric_limits<double>::infinity();

bool has_issue(const ConfigError& e, const std::string& prefix) {
    for (const auto& issue : e.issues())
        if (issue.rfind(prefix, 0) == 0) return true;
    return false;
}

OversmoothingConfig small_oversmoothing() {
    OversmoothingConfig c;
    c.realizations = 2;
    c.layers = 20;
    c.complex.n_points = 15;
    return c;
}

StabilityConfig small_stability() {
    StabilityConfig c;
    c.complex.n_points = 12;
    c.snr_grid = {0.0, 20.0};
    c.realizations = 2;
    c.train_samples = 4;
    c.test_samples = 4;
    c.epochs = 10;
    return c;
}

TrajectoryConfig small_trajectory() {
    TrajectoryConfig c;
    c.complex.n_points = 20;
    c.trajectories = 30;
    c.min_length = 3;
    c.max_length = 6;
    c.epochs = 5;
    c.realizations = 2;
    return c;
}

}  // namespace

TEST(FormatNumber, TwelveSignificantDigits) {
    EXPECT_EQ(format_number(0.0), "0");
    EXPECT_EQ(format_number(1.5), "1.5");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(format_number(-2.5e-12), "-2.5e-12");
    EXPECT_EQ(format_number(inf), "inf");
    EXPECT_EQ(format_number(-inf), "-inf");
    EXPECT_EQ(format_number(std::nan("")), "nan");
    EXPECT_EQ(format_number(42LL), "42");
}

TEST(Table, CsvAndWidthCheck) {
    Table t;
    t.header = {"a", "b"};
    t.add({"1", "2"});
    t.add({"x", "0.5"});
    EXPECT_EQ(t.to_csv(), "a,b\n1,2\nx,0.5\n");
    EXPECT_THROW(t.add({"only"}), DimensionError);
}

TEST(Config, DefaultsFromMinimalDocument) {
    const auto c = parse_experiment_config(R"({"experiment": "stability"})");
    EXPECT_EQ(c.kind, ExperimentKind::Stability);
    EXPECT_EQ(c.seed, 1u);
    EXPECT_EQ(c.stability.realizations, 30);
    EXPECT_EQ(c.stability.snr_grid, (std::vector<double>{-5, 0, 10, 20}));
    EXPECT_EQ(c.oversmoothing.layers, 100);
    EXPECT_EQ(c.trajectory.branches, 3);
}

TEST(Config, EveryIssueReportedWithItsPath) {
    const std::string text = R"({
        "experiment": "bogus",
        "seed": -1,
        "colour": "red",
        "stability": {"realizations": 0, "snr_grid": [1, "x"], "extra": 1},
        "oversmooth": {"complex": {"n_points": 2, "holes": [{"center": [0.5], "radius": 0.1}]}},
        "trajectory": {"min_length": 8, "max_length": 4, "activation": "sigmoid"}
    })";
    try {
        parse_experiment_config(text);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_TRUE(has_issue(e, "/experiment:"));
        EXPECT_TRUE(has_issue(e, "/seed:"));
        EXPECT_TRUE(has_issue(e, "/colour: unknown key"));
        EXPECT_TRUE(has_issue(e, "/stability/realizations:"));
        EXPECT_TRUE(has_issue(e, "/stability/snr_grid/1:"));
        EXPECT_TRUE(has_issue(e, "/stability/extra: unknown key"));
        EXPECT_TRUE(has_issue(e, "/oversmooth/complex/n_points:"));
        EXPECT_TRUE(has_issue(e, "/oversmooth/complex/holes/0/center:"));
        EXPECT_TRUE(has_issue(e, "/trajectory/max_length:"));
        EXPECT_TRUE(has_issue(e, "/trajectory/activation:"));
        EXPECT_EQ(e.issues().size(), 10u);
    }
}

TEST(Config, MissingExperimentAndBadJson) {
    try {
        parse_experiment_config("{}");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_TRUE(has_issue(e, "/experiment: missing"));
    }
    EXPECT_THROW(parse_experiment_config("{\"experiment\": "), ConfigError);
    EXPECT_THROW(parse_experiment_config("[1, 2]"), ConfigError);
    EXPECT_THROW(load_experiment_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, JsonEchoRoundTrips) {
    const auto c = parse_experiment_config(R"({
        "experiment": "stability", "seed": 99, "jobs": 2,
        "stability": {"snr_grid": ["inf", 3.5, -5], "complex": {"n_points": 17, "holes": []}},
        "trajectory": {"hidden": [3, 5], "aggregation": "mlp", "activation": "relu"}
    })");
    EXPECT_TRUE(std::isinf(c.stability.snr_grid.front()));
    EXPECT_TRUE(c.stability.complex.holes.empty());
    const auto text = experiment_config_to_json(c);
    const auto again = parse_experiment_config(text);
    EXPECT_EQ(experiment_config_to_json(again), text);
    EXPECT_EQ(again.seed, 99u);
    EXPECT_EQ(again.trajectory.hidden, (std::vector<int>{3, 5}));
    EXPECT_EQ(again.trajectory.aggregation, Aggregation::Mlp);
}

TEST(Seeds, DeterministicAndDistinct) {
    EXPECT_EQ(realization_seed(5, 3, 1), realization_seed(5, 3, 1));
    std::set<std::uint64_t> seen;
    for (std::uint64_t m = 0; m < 3; ++m)
        for (std::uint64_t i = 0; i < 50; ++i)
            for (std::uint64_t s = 0; s < 4; ++s) seen.insert(realization_seed(m, i, s));
    EXPECT_EQ(seen.size(), 3u * 50u * 4u);
}

TEST(ParallelFor, VisitsEachIndexOnceAndRethrows) {
    for (int jobs : {1, 3, 8}) {
        std::vector<std::atomic<int>> hits(37);
        parallel_for(37, jobs, [&](int i) { ++hits[static_cast<std::size_t>(i)]; });
        for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
    EXPECT_THROW(parallel_for(10, 4,
                              [](int i) {
                                  if (i == 6) throw DomainError("boom");
                              }),
                 DomainError);
    parallel_for(0, 4, [](int) { FAIL(); });
}

TEST(GenerateComplex, ValidatesAndDeletesTriangles) {
    EXPECT_THROW(generate_complex({2, {}}, 1), DomainError);
    int seeds_with_holes = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto full = generate_complex({30, {}}, seed);
        const auto holed = generate_complex({30, default_holes()}, seed);
        EXPECT_EQ(holed.edges().size(), full.edges().size());
        seeds_with_holes += holed.triangles().size() < full.triangles().size();
    }
    EXPECT_GE(seeds_with_holes, 15);
}

TEST(Trajectories, StructuralInvariants) {
    const auto complex = generate_complex({40, default_holes()}, 3);
    const auto data = generate_trajectories(complex, 150, 5, 10, 0.8, 11);
    ASSERT_EQ(data.trajectories.size(), 150u);
    ASSERT_EQ(data.flows.cols(), 150);
    for (std::size_t i = 0; i < data.trajectories.size(); ++i) {
        const auto& w = data.trajectories[i].vertices;
        ASSERT_GE(w.size(), 5u);
        ASSERT_LE(w.size(), 10u);
        for (std::size_t j = 0; j + 1 < w.size(); ++j) {
            const auto nb = complex.neighbors(static_cast<std::size_t>(w[j]));
            EXPECT_TRUE(std::count(nb.begin(), nb.end(), static_cast<std::size_t>(w[j + 1])));
            if (j + 2 < w.size()) {
                EXPECT_NE(w[j], w[j + 2]);  // non-backtracking
            }
        }
        const auto& set = data.candidates[i];
        ASSERT_GE(set.label, 0);
        ASSERT_LT(set.label, static_cast<int>(set.candidates.size()));
        EXPECT_EQ(set.candidates[static_cast<std::size_t>(set.label)], w.back());
        const std::vector<int> prefix(w.begin(), w.end() - 1);
        EXPECT_TRUE(data.flows.col(static_cast<Eigen::Index>(i)).isApprox(walk_flow(complex, prefix)));
    }
    const double base = uniform_guess_accuracy(data.candidates);
    EXPECT_GT(base, 0.1);
    EXPECT_LT(base, 0.35);
}

TEST(Trajectories, PathGraphHasForcedContinuations) {
    std::vector<Edge> edges;
    for (int v = 0; v + 1 < 10; ++v) edges.push_back({v, v + 1});
    const auto path = build_complex(edges, {});
    const auto data = generate_trajectories(path, 40, 3, 6, 0.5, 2);
    for (const auto& set : data.candidates) {
        EXPECT_EQ(set.candidates.size(), 1u);
        EXPECT_EQ(set.label, 0);
    }
    EXPECT_DOUBLE_EQ(uniform_guess_accuracy(data.candidates), 1.0);
}

TEST(Trajectories, WalkFlowSignsAndErrors) {
    const std::vector<Edge> edges{{0, 1}, {1, 2}, {0, 2}};
    const auto c = build_complex(edges, {});
    const auto f = walk_flow(c, {0, 1, 2, 0});
    // edges sorted: (0,1), (0,2), (1,2)
    EXPECT_EQ(f(0), 1.0);
    EXPECT_EQ(f(1), -1.0);
    EXPECT_EQ(f(2), 1.0);
    std::vector<Edge> chain{{0, 1}, {1, 2}};
    EXPECT_THROW(walk_flow(build_complex(chain, {}), {0, 2}), DomainError);
    EXPECT_THROW(generate_trajectories(c, 5, 2, 6, 0.5, 1), DomainError);
    EXPECT_THROW(generate_trajectories(c, 5, 4, 3, 0.5, 1), DomainError);
    EXPECT_THROW(generate_trajectories(c, 5, 3, 6, 1.5, 1), DomainError);
    EXPECT_THROW(generate_trajectories(c, 0, 3, 6, 0.5, 1), DomainError);
}

TEST(Oversmoothing, SingleRealizationShapeAndBounds) {
    OversmoothingConfig c;
    c.realizations = 1;
    const auto r = run_oversmoothing(c, 4);
    EXPECT_EQ(r.results.header,
              (std::vector<std::string>{"model", "t", "layer", "mean_lhs", "mean_rhs", "mean_energy", "violations"}));
    EXPECT_EQ(r.results.rows.size(), 100u * (c.t_grid.size() + 1));
    EXPECT_EQ(r.summary.rows.size(), c.t_grid.size() + 1);
    EXPECT_EQ(r.violations, 0);
    for (const auto& row : r.results.rows) EXPECT_LE(std::stod(row[3]), std::stod(row[4]) * (1 + 1e-9) + 1e-300);
}

TEST(Oversmoothing, RejectsBadConfigs) {
    auto c = small_oversmoothing();
    c.t_grid = {0.1, 0.0};
    EXPECT_THROW(oversmoothing_curves(c, 1), DomainError);
    c = small_oversmoothing();
    c.realizations = 0;
    EXPECT_THROW(oversmoothing_curves(c, 1), DomainError);
}

TEST(Stability, InfiniteSnrHasZeroLhsAndRecoversTargets) {
    StabilityConfig c;
    const auto row = stability_realization(c, inf, inf, 21);
    EXPECT_EQ(row.bound.lhs, 0.0);
    EXPECT_TRUE(row.bound.satisfied);
    EXPECT_LT(row.test_error, 1e-2);
}

TEST(Stability, GridShapeAndCells) {
    const auto c = small_stability();
    const auto r = run_stability(c, 3);
    EXPECT_EQ(r.results.rows.size(), 4u * 2u);
    EXPECT_EQ(r.summary.rows.size(), 4u);
    EXPECT_EQ(r.violations, 0);
    // Matched seeds: realization r uses the same seed in every cell.
    const auto rows = stability_rows(c, 3);
    EXPECT_EQ(rows[0].seed, rows[2].seed);
    EXPECT_NE(rows[0].seed, rows[1].seed);
}

TEST(Determinism, ByteIdenticalAcrossRerunsAndJobCounts) {
    ExperimentConfig c;
    c.oversmoothing = small_oversmoothing();
    c.stability = small_stability();
    c.trajectory = small_trajectory();
    for (auto kind : {ExperimentKind::Oversmoothing, ExperimentKind::Stability, ExperimentKind::Trajectory}) {
        c.kind = kind;
        c.jobs = 1;
        const auto a = run_experiment(c);
        c.jobs = 3;
        const auto b = run_experiment(c);
        EXPECT_EQ(a.results.to_csv(), b.results.to_csv()) << to_string(kind);
        EXPECT_EQ(a.summary.to_csv(), b.summary.to_csv()) << to_string(kind);
        c.seed = 2;
        EXPECT_NE(run_experiment(c).results.to_csv(), a.results.to_csv()) << to_string(kind);
        c.seed = 1;
    }
}

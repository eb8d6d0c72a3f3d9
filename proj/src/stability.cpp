#include "cosimo/errors.hpp"
#include "cosimo/experiments.hpp"

#include <cmath>
#include <random>

namespace cosimo {

namespace {

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    return Eigen::MatrixXd::NullaryExpr(rows, cols, [&] { return normal(rng); });
}

}  // namespace

StabilityRow stability_realization(const StabilityConfig& config, double snr1, double snr2, std::uint64_t seed) {
    if (config.train_samples < 1 || config.test_samples < 1)
        throw DomainError("stability: need at least one training and one test sample");
    const auto complex = generate_complex(config.complex, realization_seed(seed, 0, 0));
    const auto perturbed = perturb_incidence(complex, snr1, snr2, realization_seed(seed, 0, 1));
    const Eigen::MatrixXd& b1 = perturbed.b1;
    const Eigen::MatrixXd& b2 = perturbed.b2;

    std::mt19937_64 rng(realization_seed(seed, 0, 2));
    const int total = config.train_samples + config.test_samples;
    const Eigen::MatrixXd x0 = normal_matrix(b1.rows(), total, rng);
    const Eigen::MatrixXd x1 = normal_matrix(b1.cols(), total, rng);
    const Eigen::MatrixXd x2 = normal_matrix(b2.cols(), total, rng);

    // Targets: clean closed-form filter with unit weights on the clean projections.
    const auto clean = level_spectra(hodge_operators_from_incidence(1, b1, b2));
    const Eigen::MatrixXd xd = b1.transpose() * x0;
    const Eigen::MatrixXd xu = b2 * x2;
    Eigen::MatrixXd y(x1.rows(), total);
    for (int s = 0; s < total; ++s)
        y.col(s) = cosimo_filter(clean, xd.col(s), xu.col(s), x1.col(s), config.t_d, config.t_u);

    StabilityRow row;
    row.snr1 = snr1;
    row.snr2 = snr2;
    row.seed = seed;
    const int first_test = config.train_samples;
    row.bound = stability_bound(perturbed, 1, xd.col(first_test), xu.col(first_test), x1.col(first_test),
                                config.t_d, config.t_u);

    // One-layer, one-feature model trained on the perturbed complex.
    const auto ops = make_operators(perturbed.perturbed_b1(), perturbed.perturbed_b2());
    NetworkConfig nc;
    nc.dims = {1, 1};
    nc.sigma.kind = Activation::Identity;
    nc.out_level = 1;
    nc.init_t = 1.0;
    Network net(nc, realization_seed(seed, 0, 3));
    const auto split = [&](int begin, int count) {
        Dataset d;
        d.samples = count;
        d.inputs = {x0.middleCols(begin, count), x1.middleCols(begin, count), x2.middleCols(begin, count)};
        d.targets = y.middleCols(begin, count);
        return d;
    };
    const Dataset train_set = split(0, config.train_samples);
    const Dataset test_set = split(first_test, config.test_samples);
    TrainConfig tc;
    tc.epochs = config.epochs;
    tc.step_size = config.step_size;
    tc.grad_clip = 10.0;
    const auto trace = train(net, ops, train_set, tc);
    row.train_error = trace.losses.back();
    row.test_error = evaluate_loss(net, ops, test_set, LossKind::Mse);
    return row;
}

std::vector<StabilityRow> stability_rows(const StabilityConfig& config, std::uint64_t seed, int jobs) {
    if (config.realizations < 1) throw DomainError("stability: realizations must be >= 1");
    if (config.snr_grid.empty()) throw DomainError("stability: SNR grid is empty");
    const auto g = config.snr_grid.size();
    const auto r = static_cast<std::size_t>(config.realizations);
    std::vector<StabilityRow> rows(g * g * r);
    parallel_for(static_cast<int>(rows.size()), jobs, [&](int index) {
        const auto i = static_cast<std::size_t>(index);
        const auto cell = i / r;
        const auto rep = i % r;
        // Matched seeds: realization rep sees the same complex, noise pattern and signals in every cell.
        auto& row = rows[i];
        row = stability_realization(config, config.snr_grid[cell / g], config.snr_grid[cell % g],
                                    realization_seed(seed, rep, 5));
        row.realization = static_cast<int>(rep);
    });
    return rows;
}

std::vector<StabilityCell> stability_cells(const StabilityConfig& config, const std::vector<StabilityRow>& rows) {
    const auto g = config.snr_grid.size();
    const auto r = static_cast<std::size_t>(config.realizations);
    if (rows.size() != g * g * r) throw DimensionError("stability_cells: row count does not match the grid");
    std::vector<StabilityCell> cells;
    for (std::size_t c = 0; c < g * g; ++c) {
        StabilityCell cell;
        cell.snr1 = config.snr_grid[c / g];
        cell.snr2 = config.snr_grid[c % g];
        const double n = static_cast<double>(r);
        for (std::size_t k = 0; k < r; ++k) {
            const auto& row = rows[c * r + k];
            cell.mean_lhs += row.bound.lhs / n;
            cell.mean_rhs += row.bound.rhs / n;
            cell.mean_gap += row.bound.gap / n;
            cell.mean_test_error += row.test_error / n;
            cell.violations += !row.bound.satisfied;
        }
        double var = 0.0;
        for (std::size_t k = 0; k < r; ++k) {
            const double d = rows[c * r + k].test_error - cell.mean_test_error;
            var += d * d;
        }
        cell.std_test_error = r > 1 ? std::sqrt(var / (n - 1)) : 0.0;
        cells.push_back(cell);
    }
    return cells;
}

ExperimentResult run_stability(const StabilityConfig& config, std::uint64_t seed, int jobs) {
    const auto rows = stability_rows(config, seed, jobs);
    ExperimentResult out;
    out.results.header = {"snr1", "snr2", "realization", "lhs", "rhs", "gap", "satisfied", "train_error", "test_error"};
    for (const auto& row : rows)
        out.results.add({format_number(row.snr1), format_number(row.snr2),
                         format_number(static_cast<long long>(row.realization)), format_number(row.bound.lhs),
                         format_number(row.bound.rhs), format_number(row.bound.gap), row.bound.satisfied ? "1" : "0",
                         format_number(row.train_error), format_number(row.test_error)});
    out.summary.header = {"snr1", "snr2", "mean_lhs", "mean_rhs", "mean_gap", "mean_test_error", "std_test_error",
                          "violations"};
    for (const auto& c : stability_cells(config, rows)) {
        out.summary.add({format_number(c.snr1), format_number(c.snr2), format_number(c.mean_lhs),
                         format_number(c.mean_rhs), format_number(c.mean_gap), format_number(c.mean_test_error),
                         format_number(c.std_test_error), format_number(static_cast<long long>(c.violations))});
        out.violations += c.violations;
    }
    return out;
}

}  // namespace cosimo

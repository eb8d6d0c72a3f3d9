#include "cosimo/errors.hpp"
#include "cosimo/experiments.hpp"

#include <cmath>
#include <random>

namespace cosimo {

namespace {

struct ModelTrace {
    std::vector<double> lhs, rhs, energy;
    std::vector<int> violations;
};

LevelSignals normal_inputs(const ComplexOperators& ops, int features, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    LevelSignals x;
    for (int k = 0; k < 3; ++k)
        x[static_cast<std::size_t>(k)] =
            Eigen::MatrixXd::NullaryExpr(ops.size(k), features, [&] { return normal(rng); });
    return x;
}

ModelTrace trace_model(const Network& net, const ComplexOperators& ops, const LevelSignals& x, bool continuous,
                       double energy_scale) {
    const auto trace = energy_trace(net, ops, x);
    const auto c = oversmoothing_constants(net, ops);
    ModelTrace out;
    for (std::size_t l = 0; l < trace.layers(); ++l) {
        int bad = 0;
        BoundReport at_edges;
        for (int k = 0; k < 3; ++k) {
            const auto r = continuous ? oversmoothing_rhs_continuous(trace, l, k, c)
                                      : oversmoothing_rhs_discrete(trace, l, k, c);
            bad += !r.satisfied;
            if (k == 1) at_edges = r;
        }
        out.lhs.push_back(at_edges.lhs);
        out.rhs.push_back(at_edges.rhs);
        out.energy.push_back(energy_scale * trace.energy[l + 1][1]);
        out.violations.push_back(bad);
    }
    return out;
}

}  // namespace

std::vector<OversmoothingCurve> oversmoothing_curves(const OversmoothingConfig& config, std::uint64_t seed,
                                                     int jobs) {
    if (config.realizations < 1) throw DomainError("oversmoothing: realizations must be >= 1");
    if (config.layers < 1) throw DomainError("oversmoothing: layers must be >= 1");
    if (config.t_grid.empty()) throw DomainError("oversmoothing: t grid is empty");
    for (double t : config.t_grid)
        if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("oversmoothing: t values must be positive and finite");
    const std::size_t models = config.t_grid.size() + 1;  // discrete first
    std::vector<std::vector<ModelTrace>> per(static_cast<std::size_t>(config.realizations));

    parallel_for(config.realizations, jobs, [&](int r) {
        const auto ri = static_cast<std::uint64_t>(r);
        const auto complex = generate_complex(config.complex, realization_seed(seed, ri, 0));
        const auto ops = make_operators(complex);
        const auto x = normal_inputs(ops, config.features, realization_seed(seed, ri, 1));
        const std::uint64_t weight_seed = realization_seed(seed, ri, 2);
        auto& out = per[static_cast<std::size_t>(r)];

        NetworkConfig nc;
        nc.dims.assign(static_cast<std::size_t>(config.layers) + 1, config.features);
        nc.init_std = config.weight_std;
        nc.sigma.kind = config.activation;

        NetworkConfig dc = nc;
        dc.family = ModelFamily::Discrete;
        dc.discrete_order = 1;
        dc.discrete_zero_order = false;
        double scale = 1.0;
        if (config.normalize_discrete) {
            scale = lambda_tilde(ops);
            if (!(scale > 0.0)) throw DomainError("oversmoothing: complex has an all-zero spectrum");
            const double root = std::sqrt(scale);
            const auto norm_ops = make_operators(ops.b[1] / root, ops.b[2] / root);
            out.push_back(trace_model(Network(dc, weight_seed), norm_ops, x, false, scale));
        } else {
            out.push_back(trace_model(Network(dc, weight_seed), ops, x, false, 1.0));
        }
        for (double t : config.t_grid) {
            NetworkConfig cc = nc;
            cc.init_t = t;
            out.push_back(trace_model(Network(cc, weight_seed), ops, x, true, 1.0));
        }
    });

    std::vector<OversmoothingCurve> curves(models);
    const double n = static_cast<double>(config.realizations);
    const auto layers = static_cast<std::size_t>(config.layers);
    for (std::size_t m = 0; m < models; ++m) {
        auto& c = curves[m];
        c.model = m == 0 ? "discrete" : "continuous";
        c.t = m == 0 ? 0.0 : config.t_grid[m - 1];
        c.mean_lhs.assign(layers, 0.0);
        c.mean_rhs.assign(layers, 0.0);
        c.mean_energy.assign(layers, 0.0);
        c.violations.assign(layers, 0);
        for (const auto& realization : per) {
            const auto& t = realization[m];
            for (std::size_t l = 0; l < layers; ++l) {
                c.mean_lhs[l] += t.lhs[l] / n;
                c.mean_rhs[l] += t.rhs[l] / n;
                c.mean_energy[l] += t.energy[l] / n;
                c.violations[l] += t.violations[l];
            }
        }
        for (std::size_t l = 0; l < layers; ++l)
            if (c.mean_energy[l] < config.threshold) {
                c.crossing = static_cast<int>(l) + 1;
                break;
            }
    }
    return curves;
}

ExperimentResult run_oversmoothing(const OversmoothingConfig& config, std::uint64_t seed, int jobs) {
    const auto curves = oversmoothing_curves(config, seed, jobs);
    ExperimentResult out;
    out.results.header = {"model", "t", "layer", "mean_lhs", "mean_rhs", "mean_energy", "violations"};
    out.summary.header = {"model", "t", "crossing_layer", "violations"};
    for (const auto& c : curves) {
        int total = 0;
        for (std::size_t l = 0; l < c.mean_lhs.size(); ++l) {
            out.results.add({c.model, format_number(c.t), format_number(static_cast<long long>(l + 1)),
                             format_number(c.mean_lhs[l]), format_number(c.mean_rhs[l]),
                             format_number(c.mean_energy[l]), format_number(static_cast<long long>(c.violations[l]))});
            total += c.violations[l];
        }
        out.summary.add({c.model, format_number(c.t), c.crossing ? format_number(static_cast<long long>(*c.crossing)) : "none",
                         format_number(static_cast<long long>(total))});
        out.violations += total;
    }
    return out;
}

}  // namespace cosimo

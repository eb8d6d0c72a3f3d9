#include "cosimo/analysis.hpp"

#include "cosimo/errors.hpp"
#include "cosimo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace cosimo {

double matrix_norm(const Eigen::MatrixXd& m, NormKind kind) {
    return kind == NormKind::Spectral ? linalg::spectral_norm(m) : m.norm();
}

double dirichlet_energy(const Eigen::MatrixXd& x, const Eigen::MatrixXd& b_lower, const Eigen::MatrixXd& b_upper) {
    if (b_lower.cols() != x.rows() || b_upper.rows() != x.rows())
        throw DimensionError("dirichlet_energy: signal has " + std::to_string(x.rows()) + " rows, incidences expect " +
                             std::to_string(b_lower.cols()));
    return (b_lower * x).squaredNorm() + (b_upper.transpose() * x).squaredNorm();
}

double dirichlet_energy(const Eigen::MatrixXd& x, const ComplexOperators& ops, int k) {
    if (k < 0 || k > 2) throw UnsupportedLevelError("dirichlet_energy: level must be in [0, 2]");
    const auto ki = static_cast<std::size_t>(k);
    return dirichlet_energy(x, ops.b[ki], ops.b[ki + 1]);
}

double dirichlet_energy_quadratic(const Eigen::MatrixXd& x, const Eigen::MatrixXd& laplacian) {
    if (laplacian.rows() != x.rows()) throw DimensionError("dirichlet_energy_quadratic: shape mismatch");
    return (x.transpose() * laplacian * x).trace();
}

EnergyTrace energy_trace(const Network& net, const ComplexOperators& ops, const LevelSignals& inputs, NormKind norm) {
    const auto cache = net.forward(ops, inputs, 1, true);
    EnergyTrace trace;
    for (const auto& level : cache.outputs) {
        std::array<double, 3> e{}, n{};
        for (int k = 0; k < 3; ++k) {
            const auto ki = static_cast<std::size_t>(k);
            e[ki] = dirichlet_energy(level[ki], ops, k);
            n[ki] = matrix_norm(level[ki], norm);
        }
        trace.energy.push_back(e);
        trace.norm.push_back(n);
    }
    return trace;
}

BoundReport make_report(std::string name, double lhs, double rhs, std::vector<std::pair<std::string, double>> constants) {
    BoundReport r;
    r.name = std::move(name);
    r.lhs = lhs;
    r.rhs = rhs;
    r.gap = rhs - lhs;
    r.satisfied = lhs <= rhs + 1e-9 * std::max(1.0, std::abs(rhs));
    r.constants = std::move(constants);
    return r;
}

std::optional<double> smallest_nonzero(const Eigen::VectorXd& eigenvalues) {
    if (eigenvalues.size() == 0) return std::nullopt;
    const double cut = 1e-9 * std::max(1.0, eigenvalues.cwiseAbs().maxCoeff());
    std::optional<double> best;
    for (double v : eigenvalues)
        if (v > cut && (!best || v < *best)) best = v;
    return best;
}

namespace {

Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& l) {
    if (l.size() == 0) return Eigen::VectorXd();
    return eig_sym(l).eigenvalues;
}

double largest(const Eigen::VectorXd& v) { return v.size() ? v.maxCoeff() : 0.0; }

}  // namespace

double lambda_tilde(const ComplexOperators& ops) {
    double best = 0.0;
    for (int k = 0; k < 3; ++k) {
        const auto& h = ops.hodge[static_cast<std::size_t>(k)];
        if (h.has_lower) best = std::max(best, largest(eigenvalues(h.lower)));
        best = std::max(best, largest(eigenvalues(h.upper)));
    }
    return best;
}

std::optional<double> phi_constant(const ComplexOperators& ops, double t_d, double t_u) {
    std::optional<double> phi;
    const auto consider = [&](const Eigen::MatrixXd& l, double t) {
        if (const auto m = smallest_nonzero(eigenvalues(l))) phi = std::min(phi.value_or(t * *m), t * *m);
    };
    for (int k = 0; k < 3; ++k) {
        const auto& h = ops.hodge[static_cast<std::size_t>(k)];
        if (h.has_lower) consider(h.lower, t_d);
        consider(h.upper, t_u);
    }
    return phi;
}

OversmoothingConstants oversmoothing_constants(const Network& net, const ComplexOperators& ops, NormKind norm) {
    OversmoothingConstants c;
    c.s = std::sqrt(net.max_weight_norm(norm == NormKind::Spectral));
    c.lambda_tilde = lambda_tilde(ops);
    c.features = *std::max_element(net.config().dims.begin(), net.config().dims.end());
    if (net.config().family == ModelFamily::Continuous) {
        double t_d = std::numeric_limits<double>::infinity(), t_u = t_d;
        for (const auto& layer : net.params())
            for (const auto& level : layer)
                for (const auto& p : level.branches) {
                    t_d = std::min(t_d, p.t_d());
                    t_u = std::min(t_u, p.t_u());
                }
        c.phi = phi_constant(ops, t_d, t_u).value_or(0.0);
    }
    return c;
}

namespace {

struct Neighbors {
    double e_k, e_lo, e_hi, n_k, n_lo, n_hi, lhs;
};

Neighbors neighbors(const EnergyTrace& trace, std::size_t layer, int k) {
    if (k < 0 || k > 2) throw UnsupportedLevelError("over-smoothing bound: level must be in [0, 2]");
    if (layer + 1 >= trace.energy.size() || trace.norm.size() != trace.energy.size())
        throw DomainError("over-smoothing bound: trace has no layer " + std::to_string(layer + 1));
    const auto& e = trace.energy[layer];
    const auto& n = trace.norm[layer];
    const auto ki = static_cast<std::size_t>(k);
    // Levels outside [0, 2] carry no signal.
    return {e[ki],          k > 0 ? e[ki - 1] : 0.0, k < 2 ? e[ki + 1] : 0.0, n[ki], k > 0 ? n[ki - 1] : 0.0,
            k < 2 ? n[ki + 1] : 0.0, trace.energy[layer + 1][ki]};
}

std::vector<std::pair<std::string, double>> constant_list(const OversmoothingConstants& c, bool with_phi) {
    std::vector<std::pair<std::string, double>> out{
        {"s", c.s}, {"lambda_tilde", c.lambda_tilde}, {"F", static_cast<double>(c.features)}};
    if (with_phi) out.emplace_back("phi", c.phi);
    return out;
}

}  // namespace

BoundReport oversmoothing_rhs_discrete(const EnergyTrace& trace, std::size_t layer, int k,
                                       const OversmoothingConstants& c) {
    const auto v = neighbors(trace, layer, k);
    const double lam = c.lambda_tilde;
    const double f = c.features;
    const double rhs = c.s * lam * lam * v.e_k + c.s * std::pow(lam, 3) * (v.e_lo + v.e_hi) +
                       2 * f * c.s * std::pow(lam, 3.5) * v.n_k * (v.n_lo + v.n_hi);
    return make_report("oversmoothing_discrete", v.lhs, rhs, constant_list(c, false));
}

BoundReport oversmoothing_rhs_continuous(const EnergyTrace& trace, std::size_t layer, int k,
                                         const OversmoothingConstants& c) {
    const auto v = neighbors(trace, layer, k);
    const double lam = c.lambda_tilde;
    const double f = c.features;
    const double e1 = std::exp(-c.phi), e2 = std::exp(-2 * c.phi);
    const double rhs = c.s * (e2 + 1) * v.e_k + c.s * e2 * lam * (v.e_lo + v.e_hi) +
                       2 * f * c.s * (e1 + e2) * std::pow(lam, 1.5) * v.n_k * (v.n_lo + v.n_hi) +
                       2 * f * c.s * e1 * lam * v.n_k * v.n_k;
    return make_report("oversmoothing_continuous", v.lhs, rhs, constant_list(c, true));
}

CorollaryReport corollary_conditions(const OversmoothingConstants& c, const Eigen::VectorXd& lk_eigenvalues) {
    CorollaryReport r;
    const double s = c.s, lam = c.lambda_tilde, f = c.features, phi = c.phi;
    r.discrete = lam < std::min({std::pow(s, -1.0 / 3), std::pow(2 * f * s, -1.0 / 3.5), std::pow(s, -0.5)});
    const double e1 = std::exp(-phi), e2 = std::exp(-2 * phi);
    r.continuous = std::log(s) < std::min({-std::log1p(e2), 2 * phi - std::log(lam),
                                           phi - std::log(2 * f * (1 + e1) * std::pow(lam, 1.5)),
                                           phi - std::log(2 * f * lam)});
    if (const auto lmin = smallest_nonzero(lk_eigenvalues)) {
        const double lmax = lk_eigenvalues.maxCoeff();
        r.t_heuristic_max = std::log(s * lam) / (2 * *lmin) + lmax / *lmin;
    }
    return r;
}

BoundReport stability_bound(const PerturbedComplex& perturbed, int k, const Eigen::VectorXd& x_lower0,
                            const Eigen::VectorXd& x_upper0, const Eigen::VectorXd& x0, double t_d, double t_u) {
    if (k < 0 || k > 2) throw UnsupportedLevelError("stability_bound: level must be in [0, 2]");
    const auto clean_boundary = [&](int j) -> Eigen::MatrixXd {
        switch (j) {
            case 0: return Eigen::MatrixXd::Zero(0, perturbed.b1.rows());
            case 1: return perturbed.b1;
            case 2: return perturbed.b2;
            default: return Eigen::MatrixXd::Zero(perturbed.b2.cols(), 0);
        }
    };
    const auto clean = hodge_operators_from_incidence(k, clean_boundary(k), clean_boundary(k + 1));
    const auto noisy = perturbed.operators(k);
    if (clean.size() != noisy.size() || x0.size() != clean.size() || x_lower0.size() != clean.size() ||
        x_upper0.size() != clean.size())
        throw DimensionError("stability_bound: signals and operators differ in size");
    const Eigen::VectorXd y = cosimo_filter(level_spectra(clean), x_lower0, x_upper0, x0, t_d, t_u);
    const Eigen::VectorXd y_tilde = cosimo_filter(level_spectra(noisy), x_lower0, x_upper0, x0, t_d, t_u);
    const double lhs = (y_tilde - y).norm();

    const double eps_k = k == 1 ? perturbed.epsilon1 : k == 2 ? perturbed.epsilon2 : 0.0;
    const double eps_k1 = k == 0 ? perturbed.epsilon1 : k == 1 ? perturbed.epsilon2 : 0.0;
    const double lam_d = clean.has_lower ? largest(eigenvalues(clean.lower)) : 0.0;
    const double lam_u = largest(eigenvalues(clean.upper));
    const double delta_d = clean.has_lower ? 2 * std::sqrt(std::max(0.0, lam_d)) * eps_k + eps_k * eps_k : 0.0;
    const double delta_u = 2 * std::sqrt(std::max(0.0, lam_u)) * eps_k1 + eps_k1 * eps_k1;
    const double rhs = t_d * delta_d * std::exp(t_d * delta_d) * (x_lower0.norm() + x0.norm()) +
                       t_u * delta_u * std::exp(t_u * delta_u) * (x_upper0.norm() + x0.norm());
    return make_report("stability", lhs, rhs,
                       {{"t_d", t_d}, {"t_u", t_u}, {"epsilon_k", eps_k}, {"epsilon_k1", eps_k1},
                        {"delta_d", delta_d}, {"delta_u", delta_u}});
}

EntropySelection spectral_entropy_select(const Eigen::VectorXd& eigenvalues, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw DomainError("spectral_entropy_select: tau must be in (0, 1)");
    EntropySelection out;
    std::vector<double> lam(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
    for (double& v : lam) v = std::max(0.0, v);  // round-off negatives of a PSD spectrum
    const double total = std::accumulate(lam.begin(), lam.end(), 0.0);
    if (!(total > 0.0)) return out;
    std::sort(lam.begin(), lam.end(), std::greater<>());
    double cumulative = 0.0;
    for (double v : lam) {
        const double p = v / total;
        if (p > 0.0) out.entropy -= p * std::log(p);
        if (cumulative < 1.0 - tau - 1e-12) {
            cumulative += p;
            ++out.k;
        }
    }
    out.defined = true;
    return out;
}

namespace {

Eigen::MatrixXd permute_rows(const Eigen::MatrixXd& m, const std::vector<int>& p) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.row(i) = m.row(p[static_cast<std::size_t>(i)]);
    return out;
}

Eigen::MatrixXd permute_cols(const Eigen::MatrixXd& m, const std::vector<int>& p) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.col(j) = m.col(p[static_cast<std::size_t>(j)]);
    return out;
}

}  // namespace

double permutation_deviation(const Network& net, const Eigen::MatrixXd& b1, const Eigen::MatrixXd& b2,
                             const std::array<std::vector<int>, 3>& perm, const LevelSignals& inputs) {
    const auto ops = make_operators(b1, b2);
    const auto pb1 = permute_cols(permute_rows(b1, perm[0]), perm[1]);
    const auto pb2 = permute_cols(permute_rows(b2, perm[1]), perm[2]);
    const auto pops = make_operators(pb1, pb2);
    LevelSignals pin;
    for (std::size_t k = 0; k < 3; ++k) pin[k] = permute_rows(inputs[k], perm[k]);
    const Eigen::Index samples = inputs[0].cols() / net.config().dims.front();
    const auto out = net.forward(ops, inputs, static_cast<int>(samples)).final_outputs();
    const auto pout = net.forward(pops, pin, static_cast<int>(samples)).final_outputs();
    double dev = 0.0;
    for (std::size_t k = 0; k < 3; ++k)
        if (out[k].size()) dev = std::max(dev, (permute_rows(out[k], perm[k]) - pout[k]).cwiseAbs().maxCoeff());
    return dev;
}

double permutation_equivariance_check(const Network& net, const SimplicialComplex& complex, std::uint64_t seed,
                                      int trials) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::MatrixXd b1 = boundary_operator(complex, 1);
    const Eigen::MatrixXd b2 = boundary_operator(complex, 2);
    const std::array<Eigen::Index, 3> sizes{b1.rows(), b1.cols(), b2.cols()};
    const int f = net.config().dims.front();
    double dev = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        std::array<std::vector<int>, 3> perm;
        LevelSignals inputs;
        for (std::size_t k = 0; k < 3; ++k) {
            perm[k].resize(static_cast<std::size_t>(sizes[k]));
            std::iota(perm[k].begin(), perm[k].end(), 0);
            std::shuffle(perm[k].begin(), perm[k].end(), rng);
            inputs[k] = Eigen::MatrixXd::NullaryExpr(sizes[k], f, [&] { return normal(rng); });
        }
        dev = std::max(dev, permutation_deviation(net, b1, b2, perm, inputs));
    }
    return dev;
}

}  // namespace cosimo

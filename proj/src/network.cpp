#include "cosimo/errors.hpp"
#include "cosimo/linalg.hpp"
#include "cosimo/nn.hpp"

#include <cmath>
#include <random>

namespace cosimo {

std::string to_string(ModelFamily f) { return f == ModelFamily::Continuous ? "continuous" : "discrete"; }

ModelFamily parse_model_family(const std::string& name) {
    if (name == "continuous" || name == "cosimo") return ModelFamily::Continuous;
    if (name == "discrete") return ModelFamily::Discrete;
    throw DomainError("unknown model family '" + name + "' (expected continuous or discrete)");
}

// Batch helpers ----------------------------------------------------------

Eigen::MatrixXd apply_weight(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w, int samples) {
    const Eigen::Index n = x.rows();
    if (x.cols() != w.rows() * samples)
        throw DimensionError("apply_weight: batch has " + std::to_string(x.cols()) + " columns, expected " +
                             std::to_string(w.rows() * samples));
    Eigen::MatrixXd out(n, w.cols() * samples);
    if (out.size() == 0) return out;
    Eigen::Map<const Eigen::MatrixXd> xm(x.data(), n * samples, w.rows());
    Eigen::Map<Eigen::MatrixXd>(out.data(), n * samples, w.cols()).noalias() = xm * w;
    return out;
}

Eigen::MatrixXd weight_gradient(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int samples) {
    const Eigen::Index n = a.rows();
    const Eigen::Index fa = a.cols() / samples;
    const Eigen::Index fb = b.cols() / samples;
    if (n == 0) return Eigen::MatrixXd::Zero(fa, fb);
    Eigen::Map<const Eigen::MatrixXd> am(a.data(), n * samples, fa);
    Eigen::Map<const Eigen::MatrixXd> bm(b.data(), n * samples, fb);
    return am.transpose() * bm;
}

Eigen::MatrixXd pack_samples(const std::vector<Eigen::MatrixXd>& samples) {
    if (samples.empty()) return {};
    const Eigen::Index n = samples[0].rows();
    const Eigen::Index f = samples[0].cols();
    const auto s_count = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd out(n, f * s_count);
    for (Eigen::Index s = 0; s < s_count; ++s) {
        const auto& m = samples[static_cast<std::size_t>(s)];
        if (m.rows() != n || m.cols() != f) throw DimensionError("pack_samples: samples differ in shape");
        for (Eigen::Index c = 0; c < f; ++c) out.col(c * s_count + s) = m.col(c);
    }
    return out;
}

Eigen::MatrixXd sample_block(const Eigen::MatrixXd& batch, int samples, int s) {
    const Eigen::Index f = batch.cols() / samples;
    Eigen::MatrixXd out(batch.rows(), f);
    for (Eigen::Index c = 0; c < f; ++c) out.col(c) = batch.col(c * samples + s);
    return out;
}

// Operators --------------------------------------------------------------

ComplexOperators make_operators(const Eigen::MatrixXd& b1, const Eigen::MatrixXd& b2,
                                const TruncationConfig& truncation) {
    if (b1.cols() != b2.rows())
        throw DimensionError("make_operators: B_1 has " + std::to_string(b1.cols()) + " columns, B_2 has " +
                             std::to_string(b2.rows()) + " rows");
    ComplexOperators ops;
    ops.b[0] = Eigen::MatrixXd::Zero(0, b1.rows());
    ops.b[1] = b1;
    ops.b[2] = b2;
    ops.b[3] = Eigen::MatrixXd::Zero(b2.cols(), 0);
    for (int k = 0; k < 3; ++k) {
        const auto i = static_cast<std::size_t>(k);
        ops.hodge[i] = hodge_operators_from_incidence(k, ops.b[i], ops.b[i + 1]);
        ops.spectra[i] = level_spectra(ops.hodge[i], truncation.k_lower[i], truncation.k_upper[i], truncation.policy);
    }
    return ops;
}

ComplexOperators make_operators(const SimplicialComplex& complex, const TruncationConfig& truncation) {
    return make_operators(boundary_operator(complex, 1), boundary_operator(complex, 2), truncation);
}

ComplexOperators make_operators(const PerturbedComplex& perturbed, const TruncationConfig& truncation) {
    return make_operators(perturbed.perturbed_b1(), perturbed.perturbed_b2(), truncation);
}

// Network ----------------------------------------------------------------

namespace {

bool lower_active(int k) { return k > 0; }
bool theta_u_active(int k) { return k < 2; }

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, double std, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, std);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

void push(std::vector<double>& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
}

void pull(const Eigen::VectorXd& flat, Eigen::Index& pos, Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = flat(pos++);
}

void push(std::vector<double>& out, const Eigen::RowVectorXd& v) {
    for (Eigen::Index j = 0; j < v.size(); ++j) out.push_back(v(j));
}

void pull(const Eigen::VectorXd& flat, Eigen::Index& pos, Eigen::RowVectorXd& v) {
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = flat(pos++);
}

using Layers = std::vector<std::array<LayerLevel, 3>>;

// Visits every trainable scalar in the canonical order. `weight` receives
// matrices, `row` bias vectors, `shared_tau` the per-(layer, branch) receptive
// fields when they are shared (as a list of the per-level copies).
template <typename Weight, typename Row, typename Scalar, typename Shared>
void visit_parameters(const NetworkConfig& config, Layers& layers, Weight weight, Row row, Scalar scalar,
                      Shared shared_tau) {
    for (auto& layer : layers) {
        for (int k = 0; k < 3; ++k) {
            auto& level = layer[static_cast<std::size_t>(k)];
            if (config.family == ModelFamily::Continuous) {
                for (auto& p : level.branches) {
                    if (lower_active(k)) weight(p.theta_d);
                    if (theta_u_active(k)) weight(p.theta_u);
                    if (lower_active(k)) weight(p.psi_d);
                    weight(p.psi_u);
                    if (!config.share_t) {
                        if (lower_active(k)) scalar(p.tau_d);
                        scalar(p.tau_u);
                    }
                }
            } else {
                for (auto& p : level.discrete) {
                    const std::size_t first = config.discrete_zero_order ? 0 : 1;
                    for (std::size_t i = first; i < p.psi_u.size(); ++i) {
                        if (lower_active(k)) weight(p.theta_d[i]);
                        if (theta_u_active(k)) weight(p.theta_u[i]);
                        if (lower_active(k)) weight(p.psi_d[i]);
                        weight(p.psi_u[i]);
                    }
                }
            }
            if (level.mlp) {
                weight(level.mlp->weight);
                row(level.mlp->bias);
            }
        }
    }
    if (config.family == ModelFamily::Continuous && config.share_t) {
        for (auto& layer : layers) {
            for (std::size_t m = 0; m < layer[0].branches.size(); ++m) {
                std::vector<double*> d, u;
                for (auto& level : layer) {
                    d.push_back(&level.branches[m].tau_d);
                    u.push_back(&level.branches[m].tau_u);
                }
                shared_tau(d);
                shared_tau(u);
            }
        }
    }
}

}  // namespace

Network::Network(NetworkConfig config, std::uint64_t seed) : config_(std::move(config)) {
    if (config_.layers() < 1) throw DomainError("network: need at least one layer");
    if (config_.branches < 1) throw DomainError("network: need at least one branch");
    for (int d : config_.dims)
        if (d < 1) throw DomainError("network: feature dimensions must be positive");
    if (config_.out_level < 0 || config_.out_level > 2) throw UnsupportedLevelError("network: output level not in [0, 2]");
    if (!(config_.init_t > 0.0)) throw DomainError("network: initial receptive field must be positive");
    if (config_.discrete_order < 0) throw DomainError("network: polynomial order must be >= 0");

    std::mt19937_64 rng(seed);
    const double tau = std::log(config_.init_t);
    layers_.resize(static_cast<std::size_t>(config_.layers()));
    for (int l = 0; l < config_.layers(); ++l) {
        const Eigen::Index f_in = config_.dims[static_cast<std::size_t>(l)];
        const Eigen::Index f_out = config_.dims[static_cast<std::size_t>(l) + 1];
        const double std = config_.init_std > 0 ? config_.init_std : 1.0 / std::sqrt(static_cast<double>(f_in));
        for (int k = 0; k < 3; ++k) {
            auto& level = layers_[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
            const auto draw = [&](bool active) {
                return active ? normal_matrix(f_in, f_out, std, rng) : Eigen::MatrixXd::Zero(f_in, f_out);
            };
            for (int m = 0; m < config_.branches; ++m) {
                if (config_.family == ModelFamily::Continuous) {
                    CosimoParams p;
                    p.theta_d = draw(lower_active(k));
                    p.theta_u = draw(theta_u_active(k));
                    p.psi_d = draw(lower_active(k));
                    p.psi_u = draw(true);
                    p.tau_d = tau;
                    p.tau_u = tau;
                    p.sigma = config_.sigma;
                    level.branches.push_back(std::move(p));
                } else {
                    DiscreteParams p;
                    p.sigma = config_.sigma;
                    for (int i = 0; i <= config_.discrete_order; ++i) {
                        const bool on = i > 0 || config_.discrete_zero_order;
                        p.theta_d.push_back(draw(on && lower_active(k)));
                        p.theta_u.push_back(draw(on && theta_u_active(k)));
                        p.psi_d.push_back(draw(on && lower_active(k)));
                        p.psi_u.push_back(draw(on));
                    }
                    level.discrete.push_back(std::move(p));
                }
            }
            if (config_.aggregation == Aggregation::Mlp) {
                MlpAggregator agg;
                const Eigen::Index width = f_out * config_.branches;
                agg.weight = normal_matrix(width, f_out, 1.0 / std::sqrt(static_cast<double>(width)), rng);
                agg.bias = Eigen::RowVectorXd::Zero(f_out);
                agg.sigma = config_.sigma;
                level.mlp = std::move(agg);
            }
        }
    }
}

bool Network::level_needed(int layer, int k, bool all_levels) const {
    if (all_levels) return true;
    const int remaining = config_.layers() - 1 - layer;
    return std::abs(k - config_.out_level) <= remaining;
}

Eigen::VectorXd Network::parameters() const {
    std::vector<double> out;
    auto& layers = const_cast<Layers&>(layers_);
    visit_parameters(
        config_, layers, [&](Eigen::MatrixXd& m) { push(out, m); }, [&](Eigen::RowVectorXd& v) { push(out, v); },
        [&](double& v) { out.push_back(v); }, [&](const std::vector<double*>& copies) { out.push_back(*copies[1]); });
    return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

void Network::set_parameters(const Eigen::VectorXd& flat) {
    if (flat.size() != parameter_count())
        throw DimensionError("set_parameters: expected " + std::to_string(parameter_count()) + " values, got " +
                             std::to_string(flat.size()));
    Eigen::Index pos = 0;
    visit_parameters(
        config_, layers_, [&](Eigen::MatrixXd& m) { pull(flat, pos, m); },
        [&](Eigen::RowVectorXd& v) { pull(flat, pos, v); }, [&](double& v) { v = flat(pos++); },
        [&](const std::vector<double*>& copies) {
            const double v = flat(pos++);
            for (double* c : copies) *c = v;
        });
}

Eigen::Index Network::parameter_count() const { return parameters().size(); }

double Network::max_weight_norm(bool spectral) const {
    double best = 0.0;
    const auto norm = [&](const Eigen::MatrixXd& m) { return spectral ? linalg::spectral_norm(m) : m.norm(); };
    for (const auto& layer : layers_) {
        for (int k = 0; k < 3; ++k) {
            const auto& level = layer[static_cast<std::size_t>(k)];
            for (const auto& p : level.branches) {
                if (lower_active(k)) best = std::max({best, norm(p.theta_d), norm(p.psi_d)});
                if (theta_u_active(k)) best = std::max(best, norm(p.theta_u));
                best = std::max(best, norm(p.psi_u));
            }
            for (const auto& p : level.discrete) {
                for (std::size_t i = 0; i < p.psi_u.size(); ++i) {
                    if (lower_active(k)) best = std::max({best, norm(p.theta_d[i]), norm(p.psi_d[i])});
                    if (theta_u_active(k)) best = std::max(best, norm(p.theta_u[i]));
                    best = std::max(best, norm(p.psi_u[i]));
                }
            }
        }
    }
    return best;
}

namespace {

void add_bias(Eigen::MatrixXd& z, const Eigen::RowVectorXd& bias, int samples) {
    for (Eigen::Index f = 0; f < bias.size(); ++f) z.middleCols(f * samples, samples).array() += bias(f);
}

}  // namespace

ForwardCache Network::forward(const ComplexOperators& ops, const LevelSignals& inputs, int samples,
                              bool all_levels) const {
    if (samples < 1) throw DomainError("forward: need at least one sample");
    const Eigen::Index f0 = config_.dims[0];
    for (int k = 0; k < 3; ++k) {
        const auto& x = inputs[static_cast<std::size_t>(k)];
        if (x.rows() != ops.size(k) || x.cols() != f0 * samples)
            throw DimensionError("forward: level-" + std::to_string(k) + " input is " + std::to_string(x.rows()) + "x" +
                                 std::to_string(x.cols()) + ", expected " + std::to_string(ops.size(k)) + "x" +
                                 std::to_string(f0 * samples));
    }
    ForwardCache cache;
    cache.samples = samples;
    cache.outputs.push_back(inputs);
    cache.layers.resize(layers_.size());

    for (int l = 0; l < config_.layers(); ++l) {
        const auto& prev = cache.outputs.back();
        LevelSignals next;
        const Eigen::Index f_out = config_.dims[static_cast<std::size_t>(l) + 1];
        for (int k = 0; k < 3; ++k) {
            if (!level_needed(l, k, all_levels)) continue;
            const auto ki = static_cast<std::size_t>(k);
            const auto& x = prev[ki];
            const Eigen::Index n = x.rows();
            const auto& level = layers_[static_cast<std::size_t>(l)][ki];
            auto& state = cache.layers[static_cast<std::size_t>(l)][ki];
            state.computed = true;

            const auto& sp = ops.spectra[ki];
            std::vector<Eigen::MatrixXd> branch_out;
            if (config_.family == ModelFamily::Continuous) {
                const auto& vu = sp.upper.vectors;
                state.c_upper_own = vu.transpose() * x;
                if (theta_u_active(k)) state.c_upper_proj = vu.transpose() * (ops.b[ki + 1] * prev[ki + 1]);
                if (lower_active(k)) {
                    const auto& vd = sp.lower.vectors;
                    state.c_lower_own = vd.transpose() * x;
                    state.c_lower_proj = vd.transpose() * (ops.b[ki].transpose() * prev[ki - 1]);
                }
                for (const auto& p : level.branches) {
                    ForwardCache::BranchState bs;
                    bs.h_upper = apply_weight(state.c_upper_own, p.psi_u, samples);
                    if (theta_u_active(k)) bs.h_upper += apply_weight(state.c_upper_proj, p.theta_u, samples);
                    bs.g_upper = (-p.t_u() * sp.upper.values.array()).exp();
                    bs.pre = vu * (bs.g_upper.asDiagonal() * bs.h_upper);
                    if (lower_active(k)) {
                        bs.h_lower = apply_weight(state.c_lower_own, p.psi_d, samples) +
                                     apply_weight(state.c_lower_proj, p.theta_d, samples);
                        bs.g_lower = (-p.t_d() * sp.lower.values.array()).exp();
                        bs.pre += sp.lower.vectors * (bs.g_lower.asDiagonal() * bs.h_lower);
                    }
                    branch_out.push_back(p.sigma.apply(bs.pre));
                    state.branches.push_back(std::move(bs));
                }
            } else {
                const auto& hodge = ops.hodge[ki];
                Eigen::MatrixXd p_u, p_d;
                if (theta_u_active(k)) p_u = ops.b[ki + 1] * prev[ki + 1];
                if (lower_active(k)) p_d = ops.b[ki].transpose() * prev[ki - 1];
                for (const auto& p : level.discrete) {
                    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, f_out * samples);
                    const auto accumulate = [&](const Eigen::MatrixXd& lap, const Eigen::MatrixXd& src,
                                                const std::vector<Eigen::MatrixXd>& w) {
                        Eigen::MatrixXd power = src;
                        for (std::size_t i = 0; i < w.size(); ++i) {
                            if (i > 0) power = lap * power;
                            if (i > 0 || config_.discrete_zero_order) z += apply_weight(power, w[i], samples);
                        }
                    };
                    if (lower_active(k)) {
                        accumulate(hodge.lower, p_d, p.theta_d);
                        accumulate(hodge.lower, x, p.psi_d);
                    }
                    accumulate(hodge.upper, x, p.psi_u);
                    if (theta_u_active(k)) accumulate(hodge.upper, p_u, p.theta_u);
                    branch_out.push_back(p.sigma.apply(z));
                    ForwardCache::BranchState bs;
                    bs.pre = std::move(z);
                    state.branches.push_back(std::move(bs));
                }
            }

            if (level.mlp) {
                state.concat.resize(n, f_out * samples * static_cast<Eigen::Index>(branch_out.size()));
                for (std::size_t m = 0; m < branch_out.size(); ++m)
                    state.concat.middleCols(static_cast<Eigen::Index>(m) * f_out * samples, f_out * samples) =
                        branch_out[m];
                state.agg_pre = apply_weight(state.concat, level.mlp->weight, samples);
                add_bias(state.agg_pre, level.mlp->bias, samples);
                next[ki] = level.mlp->sigma.apply(state.agg_pre);
            } else {
                next[ki] = branch_out[0];
                for (std::size_t m = 1; m < branch_out.size(); ++m) next[ki] += branch_out[m];
            }
        }
        cache.outputs.push_back(std::move(next));
    }
    return cache;
}

Eigen::VectorXd Network::backward(const ComplexOperators& ops, const ForwardCache& cache,
                                  const LevelSignals& output_grad) const {
    if (config_.family != ModelFamily::Continuous)
        throw DomainError("backward: gradients are implemented for the continuous family only");
    if (cache.layers.size() != layers_.size() || cache.outputs.size() != layers_.size() + 1)
        throw MissingCacheError("backward: forward cache does not belong to this network");
    const int samples = cache.samples;

    // Gradients accumulate in a zeroed copy of the parameters.
    Layers grads = layers_;
    visit_parameters(
        config_, grads, [](Eigen::MatrixXd& m) { m.setZero(); }, [](Eigen::RowVectorXd& v) { v.setZero(); },
        [](double& v) { v = 0.0; },
        [](const std::vector<double*>& copies) {
            for (double* c : copies) *c = 0.0;
        });
    // Receptive-field slots are zeroed even when shared/unused.
    for (auto& layer : grads)
        for (auto& level : layer)
            for (auto& p : level.branches) p.tau_d = p.tau_u = 0.0;

    LevelSignals d_out = output_grad;
    for (int l = config_.layers() - 1; l >= 0; --l) {
        const auto li = static_cast<std::size_t>(l);
        const auto& prev = cache.outputs[li];
        LevelSignals d_in;
        for (std::size_t k = 0; k < 3; ++k) d_in[k] = Eigen::MatrixXd::Zero(prev[k].rows(), prev[k].cols());
        const Eigen::Index f_out = config_.dims[li + 1];

        for (int k = 0; k < 3; ++k) {
            const auto ki = static_cast<std::size_t>(k);
            const auto& state = cache.layers[li][ki];
            if (!state.computed || d_out[ki].size() == 0) continue;
            const auto& level = layers_[li][ki];
            auto& glevel = grads[li][ki];
            const auto& sp = ops.spectra[ki];
            const Eigen::Index n = prev[ki].rows();

            std::vector<Eigen::MatrixXd> d_branch;
            if (level.mlp) {
                const Eigen::MatrixXd dz = d_out[ki].cwiseProduct(level.mlp->sigma.derivative(state.agg_pre));
                glevel.mlp->weight += weight_gradient(state.concat, dz, samples);
                for (Eigen::Index f = 0; f < f_out; ++f) glevel.mlp->bias(f) += dz.middleCols(f * samples, samples).sum();
                const Eigen::MatrixXd d_concat = apply_weight(dz, level.mlp->weight.transpose(), samples);
                for (std::size_t m = 0; m < level.branches.size(); ++m)
                    d_branch.push_back(d_concat.middleCols(static_cast<Eigen::Index>(m) * f_out * samples, f_out * samples));
            } else {
                d_branch.assign(level.branches.size(), d_out[ki]);
            }

            const Eigen::Index f_in = prev[ki].cols() / samples;
            Eigen::MatrixXd dc_upper_own = Eigen::MatrixXd::Zero(sp.upper.k, f_in * samples);
            Eigen::MatrixXd dc_upper_proj = Eigen::MatrixXd::Zero(sp.upper.k, f_in * samples);
            Eigen::MatrixXd dc_lower_own, dc_lower_proj;
            if (lower_active(k)) {
                dc_lower_own = Eigen::MatrixXd::Zero(sp.lower.k, f_in * samples);
                dc_lower_proj = Eigen::MatrixXd::Zero(sp.lower.k, f_in * samples);
            }

            for (std::size_t m = 0; m < level.branches.size(); ++m) {
                const auto& p = level.branches[m];
                auto& gp = glevel.branches[m];
                const auto& bs = state.branches[m];
                const Eigen::MatrixXd dz = d_branch[m].cwiseProduct(p.sigma.derivative(bs.pre));

                const Eigen::MatrixXd du = sp.upper.vectors.transpose() * dz;
                const Eigen::MatrixXd eu = bs.g_upper.asDiagonal() * du;
                gp.psi_u += weight_gradient(state.c_upper_own, eu, samples);
                dc_upper_own += apply_weight(eu, p.psi_u.transpose(), samples);
                if (theta_u_active(k)) {
                    gp.theta_u += weight_gradient(state.c_upper_proj, eu, samples);
                    dc_upper_proj += apply_weight(eu, p.theta_u.transpose(), samples);
                }
                const Eigen::VectorXd slope_u = -sp.upper.values.cwiseProduct(bs.g_upper);
                gp.tau_u += (slope_u.asDiagonal() * bs.h_upper).cwiseProduct(du).sum() * p.t_u();

                if (lower_active(k)) {
                    const Eigen::MatrixXd dd = sp.lower.vectors.transpose() * dz;
                    const Eigen::MatrixXd ed = bs.g_lower.asDiagonal() * dd;
                    gp.psi_d += weight_gradient(state.c_lower_own, ed, samples);
                    gp.theta_d += weight_gradient(state.c_lower_proj, ed, samples);
                    dc_lower_own += apply_weight(ed, p.psi_d.transpose(), samples);
                    dc_lower_proj += apply_weight(ed, p.theta_d.transpose(), samples);
                    const Eigen::VectorXd slope_d = -sp.lower.values.cwiseProduct(bs.g_lower);
                    gp.tau_d += (slope_d.asDiagonal() * bs.h_lower).cwiseProduct(dd).sum() * p.t_d();
                }
            }

            if (n > 0) d_in[ki] += sp.upper.vectors * dc_upper_own;
            if (theta_u_active(k) && d_in[ki + 1].size() > 0)
                d_in[ki + 1] += ops.b[ki + 1].transpose() * (sp.upper.vectors * dc_upper_proj);
            if (lower_active(k)) {
                if (n > 0) d_in[ki] += sp.lower.vectors * dc_lower_own;
                if (d_in[ki - 1].size() > 0) d_in[ki - 1] += ops.b[ki] * (sp.lower.vectors * dc_lower_proj);
            }
        }
        d_out = std::move(d_in);
    }

    std::vector<double> out;
    visit_parameters(
        config_, grads, [&](Eigen::MatrixXd& m) { push(out, m); }, [&](Eigen::RowVectorXd& v) { push(out, v); },
        [&](double& v) { out.push_back(v); },
        [&](const std::vector<double*>& copies) {
            double sum = 0.0;
            for (double* c : copies) sum += *c;
            out.push_back(sum);
        });
    return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

}  // namespace cosimo

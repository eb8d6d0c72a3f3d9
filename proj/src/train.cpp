#include "cosimo/errors.hpp"
#include "cosimo/nn.hpp"

#include <cmath>
#include <sstream>

namespace cosimo {

LossValue mse_loss(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target) {
    if (prediction.rows() != target.rows() || prediction.cols() != target.cols())
        throw DimensionError("mse_loss: prediction and target differ in shape");
    LossValue out;
    const Eigen::MatrixXd diff = prediction - target;
    const double count = static_cast<double>(std::max<Eigen::Index>(1, diff.size()));
    out.loss = diff.squaredNorm() / count;
    out.grad = 2.0 * diff / count;
    return out;
}

namespace {

Eigen::MatrixXd node_scores(const Eigen::MatrixXd& edge_output, const Eigen::MatrixXd& b1,
                            const std::vector<CandidateSet>& sets) {
    if (edge_output.rows() != b1.cols() || edge_output.cols() != static_cast<Eigen::Index>(sets.size()))
        throw DimensionError("candidate readout: expected a " + std::to_string(b1.cols()) + "x" +
                             std::to_string(sets.size()) + " edge output");
    return b1 * edge_output;
}

}  // namespace

LossValue candidate_cross_entropy(const Eigen::MatrixXd& edge_output, const Eigen::MatrixXd& b1,
                                  const std::vector<CandidateSet>& sets) {
    const Eigen::MatrixXd scores = node_scores(edge_output, b1, sets);
    Eigen::MatrixXd d_scores = Eigen::MatrixXd::Zero(scores.rows(), scores.cols());
    LossValue out;
    const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(1, sets.size()));
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const auto& set = sets[s];
        const auto col = static_cast<Eigen::Index>(s);
        double top = -std::numeric_limits<double>::infinity();
        for (int v : set.candidates) top = std::max(top, scores(v, col));
        double z = 0.0;
        for (int v : set.candidates) z += std::exp(scores(v, col) - top);
        const double log_z = top + std::log(z);
        out.loss -= (scores(set.candidates[static_cast<std::size_t>(set.label)], col) - log_z) * inv;
        for (std::size_t c = 0; c < set.candidates.size(); ++c) {
            const int v = set.candidates[c];
            const double p = std::exp(scores(v, col) - log_z);
            d_scores(v, col) += (p - (static_cast<int>(c) == set.label ? 1.0 : 0.0)) * inv;
        }
    }
    out.grad = b1.transpose() * d_scores;
    return out;
}

std::vector<int> predict_candidates(const Eigen::MatrixXd& edge_output, const Eigen::MatrixXd& b1,
                                    const std::vector<CandidateSet>& sets) {
    const Eigen::MatrixXd scores = node_scores(edge_output, b1, sets);
    std::vector<int> out;
    out.reserve(sets.size());
    for (std::size_t s = 0; s < sets.size(); ++s) {
        int best = 0;
        for (std::size_t c = 1; c < sets[s].candidates.size(); ++c)
            if (scores(sets[s].candidates[c], static_cast<Eigen::Index>(s)) >
                scores(sets[s].candidates[static_cast<std::size_t>(best)], static_cast<Eigen::Index>(s)))
                best = static_cast<int>(c);
        out.push_back(best);
    }
    return out;
}

double evaluate_loss(const Network& net, const ComplexOperators& ops, const Dataset& data, LossKind kind,
                     Eigen::VectorXd* gradient) {
    const auto cache = net.forward(ops, data.inputs, data.samples, false);
    const int out_level = net.config().out_level;
    const auto& y = cache.final_outputs()[static_cast<std::size_t>(out_level)];
    LossValue value;
    if (kind == LossKind::Mse) {
        value = mse_loss(y, data.targets);
    } else {
        if (out_level != 1 || net.config().dims.back() != 1)
            throw DomainError("candidate loss needs a single-feature edge output");
        value = candidate_cross_entropy(y, ops.b[1], data.candidates);
    }
    if (gradient) {
        LevelSignals d_out;
        d_out[static_cast<std::size_t>(out_level)] = value.grad;
        *gradient = net.backward(ops, cache, d_out);
    }
    return value.loss;
}

TrainTrace train(Network& net, const ComplexOperators& ops, const Dataset& data, const TrainConfig& config) {
    if (config.epochs < 0) throw DomainError("train: epochs must be >= 0");
    if (!(config.step_size >= 0.0)) throw DomainError("train: step size must be >= 0");
    TrainTrace trace;
    Eigen::VectorXd params = net.parameters();
    Eigen::VectorXd velocity = Eigen::VectorXd::Zero(params.size());
    Eigen::VectorXd second = Eigen::VectorXd::Zero(params.size());
    Eigen::VectorXd grad;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double loss = evaluate_loss(net, ops, data, config.loss, &grad);
        if (!std::isfinite(loss) || !grad.allFinite()) {
            std::ostringstream msg;
            msg << "training diverged at epoch " << epoch << ": loss " << loss << ", gradient norm " << grad.norm()
                << ", step size " << config.step_size;
            throw DivergenceError(msg.str());
        }
        trace.losses.push_back(loss);
        if (config.grad_clip > 0.0) {
            const double norm = grad.norm();
            if (norm > config.grad_clip) grad *= config.grad_clip / norm;
        }
        if (config.step_size == 0.0) continue;
        if (config.optimizer == Optimizer::Adam) {
            const double b1 = config.momentum, b2 = config.adam_beta2;
            velocity = b1 * velocity + (1.0 - b1) * grad;
            second = b2 * second + (1.0 - b2) * grad.cwiseAbs2();
            const double c1 = 1.0 - std::pow(b1, epoch + 1), c2 = 1.0 - std::pow(b2, epoch + 1);
            params.array() -= config.step_size * (velocity.array() / c1) / ((second.array() / c2).sqrt() + 1e-8);
        } else if (config.optimizer == Optimizer::Momentum) {
            velocity = config.momentum * velocity + grad;
            params -= config.step_size * velocity;
        } else {
            params -= config.step_size * grad;
        }
        net.set_parameters(params);
    }
    const double final_loss = evaluate_loss(net, ops, data, config.loss);
    if (!std::isfinite(final_loss)) throw DivergenceError("training diverged: final loss is not finite");
    trace.losses.push_back(final_loss);
    return trace;
}

}  // namespace cosimo

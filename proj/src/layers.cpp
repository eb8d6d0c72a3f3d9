#include "cosimo/errors.hpp"
#include "cosimo/nn.hpp"

namespace cosimo {

Eigen::MatrixXd Nonlinearity::apply(const Eigen::MatrixXd& z) const {
    switch (kind) {
        case Activation::Identity: return z;
        case Activation::ReLU: return z.cwiseMax(0.0);
        case Activation::LeakyReLU: return z.unaryExpr([s = slope](double v) { return v > 0 ? v : s * v; });
        case Activation::Tanh: return z.array().tanh().matrix();
    }
    return z;
}

Eigen::MatrixXd Nonlinearity::derivative(const Eigen::MatrixXd& z) const {
    switch (kind) {
        case Activation::Identity: return Eigen::MatrixXd::Ones(z.rows(), z.cols());
        case Activation::ReLU: return z.unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; });
        case Activation::LeakyReLU: return z.unaryExpr([s = slope](double v) { return v > 0 ? 1.0 : s; });
        case Activation::Tanh: return (1.0 - z.array().tanh().square()).matrix();
    }
    return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::ReLU: return "relu";
        case Activation::LeakyReLU: return "leaky_relu";
        case Activation::Tanh: return "tanh";
    }
    return "relu";
}

Activation parse_activation(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::ReLU;
    if (name == "leaky_relu") return Activation::LeakyReLU;
    if (name == "tanh") return Activation::Tanh;
    throw DomainError("unknown nonlinearity '" + name + "' (expected identity, relu, leaky_relu or tanh)");
}

std::string to_string(Aggregation a) { return a == Aggregation::Sum ? "sum" : "mlp"; }

Aggregation parse_aggregation(const std::string& name) {
    if (name == "sum") return Aggregation::Sum;
    if (name == "mlp") return Aggregation::Mlp;
    throw DomainError("unknown aggregation '" + name + "' (expected sum or mlp)");
}

CochainTriple project(const Eigen::MatrixXd& b_lower, const Eigen::MatrixXd& b_upper, const Cochain* lower,
                      const Cochain& own, const Cochain* upper) {
    const Eigen::Index n = own.values.rows();
    const Eigen::Index f = own.values.cols();
    if (b_lower.cols() != n || b_upper.rows() != n)
        throw DimensionError("project: level-" + std::to_string(own.level) + " signal has " + std::to_string(n) +
                             " rows, incidence matrices expect " + std::to_string(b_lower.cols()) + " and " +
                             std::to_string(b_upper.rows()));
    CochainTriple out;
    out.own = own;
    out.lower_proj = Eigen::MatrixXd::Zero(n, f);
    out.upper_proj = Eigen::MatrixXd::Zero(n, f);
    if (lower) {
        if (lower->values.rows() != b_lower.rows() || lower->values.cols() != f)
            throw DimensionError("project: lower signal shape does not match B_k");
        out.lower_proj = b_lower.transpose() * lower->values;
    }
    if (upper) {
        if (upper->values.rows() != b_upper.cols() || upper->values.cols() != f)
            throw DimensionError("project: upper signal shape does not match B_{k+1}");
        out.upper_proj = b_upper * upper->values;
    }
    return out;
}

CochainTriple project(const SimplicialComplex& complex, const Cochain* lower, const Cochain& own,
                      const Cochain* upper) {
    if (own.level < 0 || own.level > 2) throw UnsupportedLevelError("project: level must be in [0, 2]");
    return project(boundary_operator(complex, own.level), boundary_operator(complex, own.level + 1), lower, own,
                   upper);
}

Eigen::MatrixXd simplicial_filter(const Eigen::MatrixXd& x, const std::vector<double>& alphas,
                                  const std::vector<double>& betas, const HodgeOperators& ops) {
    if (x.rows() != ops.size()) throw DimensionError("simplicial_filter: signal size does not match the operator");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    const auto accumulate = [&](const Eigen::MatrixXd& l, const std::vector<double>& coeffs) {
        Eigen::MatrixXd power = x;
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            if (i > 0) power = l * power;
            out += coeffs[i] * power;
        }
    };
    if (ops.has_lower) accumulate(ops.lower, alphas);
    else if (!alphas.empty()) out += alphas[0] * x;  // L_d^0 = I even where L_d is undefined
    accumulate(ops.upper, betas);
    return out;
}

namespace {

void check_triple(const CochainTriple& triple, Eigen::Index n) {
    const auto& x = triple.own.values;
    if (x.rows() != n || triple.lower_proj.rows() != n || triple.upper_proj.rows() != n ||
        triple.lower_proj.cols() != x.cols() || triple.upper_proj.cols() != x.cols())
        throw DimensionError("layer: signal and projections must all be " + std::to_string(n) + " x F");
}

void check_weight(const Eigen::MatrixXd& w, Eigen::Index f_in, Eigen::Index f_out, const char* name) {
    if (w.rows() != f_in || w.cols() != f_out)
        throw DimensionError(std::string("layer: weight ") + name + " has shape " + std::to_string(w.rows()) + "x" +
                             std::to_string(w.cols()));
}

}  // namespace

Cochain discrete_layer(const CochainTriple& triple, const DiscreteParams& params, const HodgeOperators& ops) {
    check_triple(triple, ops.size());
    if (params.theta_u.size() != params.psi_u.size() || params.theta_d.size() != params.psi_d.size())
        throw DimensionError("discrete_layer: coefficient lists of one Laplacian must have equal lengths");
    if (params.psi_u.empty()) throw DimensionError("discrete_layer: no upper coefficients");
    const auto& x = triple.own.values;
    const Eigen::Index f_in = x.cols();
    const Eigen::Index f_out = params.psi_u[0].cols();

    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(x.rows(), f_out);
    const auto accumulate = [&](const Eigen::MatrixXd& l, const Eigen::MatrixXd& src, const std::vector<Eigen::MatrixXd>& w) {
        Eigen::MatrixXd power = src;
        for (std::size_t i = 0; i < w.size(); ++i) {
            check_weight(w[i], f_in, f_out, "discrete");
            if (i > 0) power = l * power;
            z += power * w[i];
        }
    };
    if (ops.has_lower) {
        accumulate(ops.lower, triple.lower_proj, params.theta_d);
        accumulate(ops.lower, x, params.psi_d);
    }
    accumulate(ops.upper, x, params.psi_u);
    accumulate(ops.upper, triple.upper_proj, params.theta_u);
    return {triple.own.level, params.sigma.apply(z)};
}

Cochain cosimo_layer(const CochainTriple& triple, const CosimoParams& params, const LevelSpectra* spectra) {
    if (!spectra)
        throw MissingSpectraError("cosimo_layer: spectra of the level-" + std::to_string(triple.own.level) +
                                  " Laplacians must be computed before the layer is applied");
    check_triple(triple, spectra->size());
    const auto& x = triple.own.values;
    const Eigen::Index f_out = params.psi_u.cols();
    check_weight(params.psi_u, x.cols(), f_out, "psi_u");
    check_weight(params.theta_u, x.cols(), f_out, "theta_u");
    Eigen::MatrixXd z = exp_filter(spectra->upper, params.t_u(), triple.upper_proj, params.theta_u) +
                        exp_filter(spectra->upper, params.t_u(), x, params.psi_u);
    if (spectra->has_lower) {
        check_weight(params.psi_d, x.cols(), f_out, "psi_d");
        check_weight(params.theta_d, x.cols(), f_out, "theta_d");
        z += exp_filter(spectra->lower, params.t_d(), triple.lower_proj, params.theta_d) +
             exp_filter(spectra->lower, params.t_d(), x, params.psi_d);
    }
    return {triple.own.level, params.sigma.apply(z)};
}

Cochain aggregate_branches(const std::vector<Cochain>& outputs, Aggregation mode, const MlpAggregator* mlp) {
    if (outputs.empty()) throw DomainError("aggregate_branches: need at least one branch");
    const auto& first = outputs.front().values;
    for (const auto& o : outputs)
        if (o.values.rows() != first.rows() || o.values.cols() != first.cols())
            throw DimensionError("aggregate_branches: branch outputs differ in shape");
    if (mode == Aggregation::Sum) {
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(first.rows(), first.cols());
        for (const auto& o : outputs) sum += o.values;
        return {outputs.front().level, sum};
    }
    if (!mlp) throw DomainError("aggregate_branches: MLP aggregation needs its weights");
    const Eigen::Index f = first.cols();
    Eigen::MatrixXd concat(first.rows(), f * static_cast<Eigen::Index>(outputs.size()));
    for (std::size_t m = 0; m < outputs.size(); ++m) concat.middleCols(static_cast<Eigen::Index>(m) * f, f) = outputs[m].values;
    if (mlp->weight.rows() != concat.cols() || mlp->bias.size() != mlp->weight.cols())
        throw DimensionError("aggregate_branches: MLP weight shape does not match M * F");
    Eigen::MatrixXd z = concat * mlp->weight;
    z.rowwise() += mlp->bias;
    return {outputs.front().level, mlp->sigma.apply(z)};
}

}  // namespace cosimo

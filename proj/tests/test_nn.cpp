#include "cosimo/errors.hpp"
#include "cosimo/nn.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace cosimo;
using cosimo::testing::filled_triangle;
using cosimo::testing::random_delaunay;
using cosimo::testing::random_matrix;

namespace {

CosimoParams identity_params(Eigen::Index f) {
    CosimoParams p;
    p.theta_d = p.theta_u = p.psi_d = p.psi_u = Eigen::MatrixXd::Identity(f, f);
    p.sigma.kind = Activation::Identity;
    return p;
}

LevelSignals random_inputs(const ComplexOperators& ops, Eigen::Index cols, std::mt19937_64& rng) {
    LevelSignals x;
    for (int k = 0; k < 3; ++k) x[static_cast<std::size_t>(k)] = random_matrix(ops.size(k), cols, rng);
    return x;
}

// Dense exp(-tL) route of the continuous layer, independent of the spectra.
Eigen::MatrixXd dense_cosimo(const HodgeOperators& h, const CochainTriple& tr, const CosimoParams& p) {
    Eigen::MatrixXd z = matrix_exp_oracle(h.upper, p.t_u()) * (tr.upper_proj * p.theta_u + tr.own.values * p.psi_u);
    if (h.has_lower)
        z += matrix_exp_oracle(h.lower, p.t_d()) * (tr.lower_proj * p.theta_d + tr.own.values * p.psi_d);
    return p.sigma.apply(z);
}

double rel_error(double a, double b) { return std::abs(a - b) / std::max({1e-7, std::abs(a), std::abs(b)}); }

}  // namespace

TEST(Project, Cases) {
    const auto c = filled_triangle();
    const Cochain ones{0, Eigen::MatrixXd::Ones(3, 1)};
    const Cochain edge{1, Eigen::MatrixXd::Zero(3, 1)};
    const auto t = project(c, &ones, edge, nullptr);
    EXPECT_TRUE(t.lower_proj.isZero(0.0));
    EXPECT_TRUE(t.upper_proj.isZero(0.0));

    Cochain e1{1, Eigen::MatrixXd::Zero(3, 1)};
    e1.values(0, 0) = 1.0;  // indicator of edge (0,1)
    const Cochain tri{2, Eigen::MatrixXd::Zero(1, 1)};
    // Level 2: B_2^T e_(0,1) is the (0,1) row of B_2, which is +1.
    EXPECT_EQ(project(c, &e1, tri, nullptr).lower_proj(0, 0), 1.0);
    // Level 0: B_1 e_(0,1) is the (0,1) column of B_1, (-1, +1, 0).
    const Cochain nodes{0, Eigen::MatrixXd::Zero(3, 1)};
    EXPECT_EQ(project(c, nullptr, nodes, &e1).upper_proj, Eigen::Vector3d(-1, 1, 0));

    const std::vector<Edge> edges{{0, 1}, {1, 2}};
    const auto path = build_complex(edges, {});
    const Cochain x{1, Eigen::MatrixXd::Ones(2, 2)};
    const Cochain none{2, Eigen::MatrixXd::Zero(0, 2)};
    EXPECT_TRUE(project(path, nullptr, x, &none).upper_proj.isZero(0.0));
    const Cochain bad{0, Eigen::MatrixXd::Ones(2, 2)};
    EXPECT_THROW(project(path, &bad, x, nullptr), DimensionError);
}

TEST(SimplicialFilter, Cases) {
    const auto c = random_delaunay(12, 1, false);
    const auto h = hodge_operators(c, 1);
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd x = random_matrix(h.size(), 1, rng);
    EXPECT_EQ(simplicial_filter(x, {1.0}, {0.0}, h), x);
    EXPECT_LE((simplicial_filter(x, {0.0, 1.0}, {}, h) - h.lower * x).cwiseAbs().maxCoeff(), 1e-12);
    const auto h0 = hodge_operators(c, 0);
    const Eigen::MatrixXd y = random_matrix(h0.size(), 1, rng);
    const Eigen::MatrixXd l0 = h0.full;
    const Eigen::MatrixXd want = 0.5 * y - 2.0 * l0 * y + 0.25 * l0 * l0 * y;
    EXPECT_LE((simplicial_filter(y, {}, {0.5, -2.0, 0.25}, h0) - want).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(DiscreteLayer, Cases) {
    const auto c = random_delaunay(12, 2, true);
    const auto h = hodge_operators(c, 1);
    std::mt19937_64 rng(2);
    const Eigen::Index n = h.size();
    CochainTriple tr{{1, random_matrix(n, 2, rng)}, random_matrix(n, 2, rng), random_matrix(n, 2, rng)};

    DiscreteParams zero;
    zero.theta_d = zero.theta_u = zero.psi_d = zero.psi_u = {Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)};
    EXPECT_TRUE(discrete_layer(tr, zero, h).values.isZero(0.0));

    DiscreteParams id;
    id.sigma.kind = Activation::Identity;
    id.theta_d = id.theta_u = id.psi_d = id.psi_u = {Eigen::MatrixXd::Identity(2, 2)};
    const Eigen::MatrixXd want = tr.lower_proj + 2 * tr.own.values + tr.upper_proj;
    EXPECT_LE((discrete_layer(tr, id, h).values - want).cwiseAbs().maxCoeff(), 1e-12);

    // Scalar one-dimensional layer: H_d x_d + H x + H_u x_u with explicit polynomial matrices.
    CochainTriple scalar{{1, tr.own.values.col(0)}, tr.lower_proj.col(0), tr.upper_proj.col(0)};
    DiscreteParams s;
    s.sigma.kind = Activation::Identity;
    const auto one = [](double v) { return Eigen::MatrixXd::Constant(1, 1, v); };
    s.theta_d = {one(0.3), one(-0.7)};
    s.theta_u = {one(1.1), one(0.2)};
    s.psi_d = {one(-0.4), one(0.9)};
    s.psi_u = {one(0.6), one(-0.1)};
    const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd hd = 0.3 * i - 0.7 * h.lower;
    const Eigen::MatrixXd hu = 1.1 * i + 0.2 * h.upper;
    const Eigen::MatrixXd hk = -0.4 * i + 0.9 * h.lower + 0.6 * i - 0.1 * h.upper;
    const Eigen::MatrixXd want1 = hd * scalar.lower_proj + hk * scalar.own.values + hu * scalar.upper_proj;
    EXPECT_LE((discrete_layer(scalar, s, h).values - want1).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CosimoLayer, ZeroTimeIdentityWeights) {
    const auto c = random_delaunay(15, 3, true);
    const auto ops = make_operators(c);
    std::mt19937_64 rng(3);
    const Eigen::Index n = ops.size(1);
    CochainTriple tr{{1, random_matrix(n, 3, rng)}, random_matrix(n, 3, rng), random_matrix(n, 3, rng)};
    auto p = identity_params(3);
    p.tau_d = p.tau_u = -800.0;  // t = e^{-800} underflows to 0
    const Eigen::MatrixXd want = tr.lower_proj + tr.upper_proj + 2 * tr.own.values;
    EXPECT_LE((cosimo_layer(tr, p, &ops.spectra[1]).values - want).cwiseAbs().maxCoeff(), 1e-10);
    // Matches the closed-form filter column by column.
    for (int f = 0; f < 3; ++f) {
        const Eigen::VectorXd ref =
            cosimo_filter(ops.spectra[1], tr.lower_proj.col(f), tr.upper_proj.col(f), tr.own.values.col(f), 0.0, 0.0);
        EXPECT_LE((ref - want.col(f)).cwiseAbs().maxCoeff(), 1e-10);
    }
    EXPECT_THROW(cosimo_layer(tr, p, nullptr), MissingSpectraError);
}

TEST(CosimoLayer, MatchesDenseOracleAndPolicyInvariantAtFullK) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        const auto c = random_delaunay(14, 10 + trial, true);
        for (int k = 0; k < 3; ++k) {
            const auto h = hodge_operators(c, k);
            const Eigen::Index n = h.size();
            CochainTriple tr{{k, random_matrix(n, 3, rng)}, random_matrix(n, 3, rng), random_matrix(n, 3, rng)};
            if (k == 0) tr.lower_proj.setZero();
            CosimoParams p;
            p.theta_d = random_matrix(3, 2, rng);
            p.theta_u = random_matrix(3, 2, rng);
            p.psi_d = random_matrix(3, 2, rng);
            p.psi_u = random_matrix(3, 2, rng);
            p.tau_d = std::log(0.3 + trial * 0.2);
            p.tau_u = std::log(1.7 - trial * 0.2);
            p.sigma.kind = trial % 2 ? Activation::ReLU : Activation::LeakyReLU;
            const auto low = level_spectra(h, 0, 0, TruncationPolicy::LowFrequency);
            const auto lit = level_spectra(h, 0, 0, TruncationPolicy::HighFrequency);
            const Eigen::MatrixXd got = cosimo_layer(tr, p, &low).values;
            EXPECT_LE(cosimo::testing::max_rel_error(got, dense_cosimo(h, tr, p)), 1e-8);
            EXPECT_LE((cosimo_layer(tr, p, &lit).values - got).cwiseAbs().maxCoeff(), 1e-12);
        }
    }
}

TEST(Aggregate, SumAndMlp) {
    std::mt19937_64 rng(5);
    const Cochain a{1, random_matrix(6, 2, rng)}, b{1, random_matrix(6, 2, rng)}, c{1, random_matrix(6, 2, rng)};
    EXPECT_EQ(aggregate_branches({a}, Aggregation::Sum).values, a.values);
    EXPECT_LE((aggregate_branches({a, b, c}, Aggregation::Sum).values - (a.values + b.values + c.values))
                  .cwiseAbs().maxCoeff(), 1e-15);
    MlpAggregator mlp;
    mlp.weight = random_matrix(6, 2, rng);
    mlp.bias = random_matrix(1, 2, rng).row(0);
    mlp.sigma.kind = Activation::ReLU;
    Eigen::MatrixXd concat(6, 6);
    concat << a.values, b.values, c.values;
    const Eigen::MatrixXd want = ((concat * mlp.weight).rowwise() + mlp.bias).cwiseMax(0.0);
    EXPECT_LE((aggregate_branches({a, b, c}, Aggregation::Mlp, &mlp).values - want).cwiseAbs().maxCoeff(), 1e-14);
    const Cochain wrong{1, random_matrix(5, 2, rng)};
    EXPECT_THROW(aggregate_branches({a, wrong}, Aggregation::Sum), DimensionError);
    EXPECT_THROW(aggregate_branches({}, Aggregation::Sum), DomainError);
}

TEST(BatchLayout, PackAndWeights) {
    std::mt19937_64 rng(6);
    std::vector<Eigen::MatrixXd> s{random_matrix(5, 3, rng), random_matrix(5, 3, rng)};
    const Eigen::MatrixXd batch = pack_samples(s);
    const Eigen::MatrixXd w = random_matrix(3, 4, rng);
    const Eigen::MatrixXd out = apply_weight(batch, w, 2);
    for (int i = 0; i < 2; ++i) {
        EXPECT_EQ(sample_block(batch, 2, i), s[static_cast<std::size_t>(i)]);
        EXPECT_LE((sample_block(out, 2, i) - s[static_cast<std::size_t>(i)] * w).cwiseAbs().maxCoeff(), 1e-14);
    }
    const Eigen::MatrixXd g = random_matrix(5, 8, rng);
    const Eigen::MatrixXd want = s[0].transpose() * sample_block(g, 2, 0) + s[1].transpose() * sample_block(g, 2, 1);
    EXPECT_LE((weight_gradient(batch, g, 2) - want).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Network, SingleLayerEqualsCosimoLayerPerLevel) {
    const auto c = random_delaunay(16, 4, true);
    const auto ops = make_operators(c);
    NetworkConfig cfg;
    cfg.dims = {3, 2};
    cfg.share_t = false;
    const Network net(cfg, 7);
    std::mt19937_64 rng(7);
    const auto x = random_inputs(ops, 3, rng);
    const auto cache = net.forward(ops, x, 1);
    for (int k = 0; k < 3; ++k) {
        const auto ki = static_cast<std::size_t>(k);
        const Cochain lower{k - 1, k > 0 ? x[ki - 1] : Eigen::MatrixXd()};
        const Cochain upper{k + 1, k < 2 ? x[ki + 1] : Eigen::MatrixXd()};
        const auto tr = project(ops.b[ki], ops.b[ki + 1], k > 0 ? &lower : nullptr, Cochain{k, x[ki]},
                                k < 2 ? &upper : nullptr);
        const auto want = cosimo_layer(tr, net.params()[0][ki].branches[0], &ops.spectra[ki]);
        EXPECT_LE((cache.final_outputs()[ki] - want.values).cwiseAbs().maxCoeff(), 1e-12) << "level " << k;
    }
}

TEST(Network, TruncatedSpectraMatchLayer) {
    const auto c = random_delaunay(16, 5, true);
    TruncationConfig trunc;
    trunc.k_lower = {0, 10, 4};
    trunc.k_upper = {6, 8, 3};
    const auto ops = make_operators(c, trunc);
    EXPECT_EQ(ops.spectra[1].lower.k, 10);
    NetworkConfig cfg;
    cfg.dims = {2, 2};
    const Network net(cfg, 8);
    std::mt19937_64 rng(8);
    const auto x = random_inputs(ops, 2, rng);
    const Cochain lower{0, x[0]}, upper{2, x[2]};
    const auto tr = project(ops.b[1], ops.b[2], &lower, Cochain{1, x[1]}, &upper);
    const auto want = cosimo_layer(tr, net.params()[0][1].branches[0], &ops.spectra[1]);
    EXPECT_LE((net.forward(ops, x, 1).final_outputs()[1] - want.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Network, TwoLinearLayersEqualComposedOperator) {
    const auto c = random_delaunay(12, 6, true);
    // With all Laplacian gains equal to one the layer is a fixed block operator.
    const auto ops = make_operators(c);
    NetworkConfig cfg;
    cfg.dims = {1, 1, 1};
    cfg.sigma.kind = Activation::Identity;
    Network net(cfg, 9);
    for (auto& layer : net.params())
        for (auto& level : layer)
            for (auto& p : level.branches) p.tau_d = p.tau_u = -800.0;
    const Eigen::Index n0 = ops.size(0), n1 = ops.size(1), n2 = ops.size(2);
    const auto block = [&](const std::array<LayerLevel, 3>& layer) {
        const auto s = [](const Eigen::MatrixXd& m) { return m(0, 0); };
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n0 + n1 + n2, n0 + n1 + n2);
        const auto& p0 = layer[0].branches[0];
        const auto& p1 = layer[1].branches[0];
        const auto& p2 = layer[2].branches[0];
        m.block(0, 0, n0, n0) = s(p0.psi_u) * Eigen::MatrixXd::Identity(n0, n0);
        m.block(0, n0, n0, n1) = s(p0.theta_u) * ops.b[1];
        m.block(n0, 0, n1, n0) = s(p1.theta_d) * ops.b[1].transpose();
        m.block(n0, n0, n1, n1) = (s(p1.psi_d) + s(p1.psi_u)) * Eigen::MatrixXd::Identity(n1, n1);
        m.block(n0, n0 + n1, n1, n2) = s(p1.theta_u) * ops.b[2];
        m.block(n0 + n1, n0, n2, n1) = s(p2.theta_d) * ops.b[2].transpose();
        m.block(n0 + n1, n0 + n1, n2, n2) = (s(p2.psi_d) + s(p2.psi_u)) * Eigen::MatrixXd::Identity(n2, n2);
        return m;
    };
    std::mt19937_64 rng(9);
    const auto x = random_inputs(ops, 1, rng);
    Eigen::VectorXd stacked(n0 + n1 + n2);
    stacked << x[0], x[1], x[2];
    const Eigen::VectorXd want = block(net.params()[1]) * (block(net.params()[0]) * stacked);
    const auto out = net.forward(ops, x, 1).final_outputs();
    Eigen::VectorXd got(n0 + n1 + n2);
    got << out[0], out[1], out[2];
    EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, want.cwiseAbs().maxCoeff()));
}

TEST(Network, HundredLayersKeepShapes) {
    const auto c = random_delaunay(12, 7, true);
    const auto ops = make_operators(c);
    for (auto family : {ModelFamily::Continuous, ModelFamily::Discrete}) {
        NetworkConfig cfg;
        cfg.family = family;
        cfg.dims.assign(101, 4);
        const Network net(cfg, 10);
        std::mt19937_64 rng(10);
        const auto cache = net.forward(ops, random_inputs(ops, 4, rng), 1);
        ASSERT_EQ(cache.outputs.size(), 101u);
        for (const auto& level : cache.outputs)
            for (int k = 0; k < 3; ++k) {
                EXPECT_EQ(level[static_cast<std::size_t>(k)].rows(), ops.size(k));
                EXPECT_EQ(level[static_cast<std::size_t>(k)].cols(), 4);
            }
    }
}

TEST(Network, DiscreteNetworkMatchesDiscreteLayer) {
    const auto c = random_delaunay(14, 8, true);
    const auto ops = make_operators(c);
    NetworkConfig cfg;
    cfg.family = ModelFamily::Discrete;
    cfg.dims = {2, 3};
    cfg.discrete_zero_order = false;
    const Network net(cfg, 11);
    std::mt19937_64 rng(11);
    const auto x = random_inputs(ops, 2, rng);
    const auto out = net.forward(ops, x, 1).final_outputs();
    for (int k = 0; k < 3; ++k) {
        const auto ki = static_cast<std::size_t>(k);
        const Cochain lower{k - 1, k > 0 ? x[ki - 1] : Eigen::MatrixXd()};
        const Cochain upper{k + 1, k < 2 ? x[ki + 1] : Eigen::MatrixXd()};
        const auto tr = project(ops.b[ki], ops.b[ki + 1], k > 0 ? &lower : nullptr, Cochain{k, x[ki]},
                                k < 2 ? &upper : nullptr);
        auto p = net.params()[0][ki].discrete[0];
        for (auto* w : {&p.theta_d, &p.theta_u, &p.psi_d, &p.psi_u}) EXPECT_TRUE((*w)[0].isZero(0.0));
        EXPECT_LE((out[ki] - discrete_layer(tr, p, ops.hodge[ki]).values).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Network, FirstOrderAgreementWithDiscrete) {
    const auto c = random_delaunay(14, 9, true);
    const auto h = hodge_operators(c, 1);
    const auto spectra = level_spectra(h);
    std::mt19937_64 rng(12);
    const Eigen::Index n = h.size();
    CochainTriple tr{{1, random_matrix(n, 2, rng)}, random_matrix(n, 2, rng), random_matrix(n, 2, rng)};
    CosimoParams p;
    p.theta_d = random_matrix(2, 2, rng);
    p.theta_u = random_matrix(2, 2, rng);
    p.psi_d = random_matrix(2, 2, rng);
    p.psi_u = random_matrix(2, 2, rng);
    p.sigma.kind = Activation::Identity;
    std::vector<double> ts, errs;
    for (double t = 0.1; t > 0.005; t /= 2) {
        p.tau_d = p.tau_u = std::log(t);
        DiscreteParams d;
        d.sigma.kind = Activation::Identity;
        d.theta_d = {p.theta_d, -t * p.theta_d};
        d.theta_u = {p.theta_u, -t * p.theta_u};
        d.psi_d = {p.psi_d, -t * p.psi_d};
        d.psi_u = {p.psi_u, -t * p.psi_u};
        ts.push_back(t);
        errs.push_back((cosimo_layer(tr, p, &spectra).values - discrete_layer(tr, d, h).values).norm());
    }
    EXPECT_NEAR(cosimo::testing::loglog_slope(ts, errs), 2.0, 0.1);
}

TEST(Backward, MatchesFiniteDifferences) {
    std::mt19937_64 rng(13);
    int model = 0;
    for (int layers = 1; layers <= 2; ++layers) {
        for (auto agg : {Aggregation::Sum, Aggregation::Mlp}) {
            for (bool share : {true, false}) {
                const auto c = random_delaunay(10, 20 + model, true);
                TruncationConfig trunc;
                if (model % 3 == 2) trunc.k_lower = {0, 8, 2};
                const auto ops = make_operators(c, trunc);
                NetworkConfig cfg;
                cfg.dims = layers == 1 ? std::vector<int>{3, 2} : std::vector<int>{2, 4, 3};
                cfg.branches = 2;
                cfg.aggregation = agg;
                cfg.share_t = share;
                cfg.sigma.kind = Activation::LeakyReLU;
                cfg.sigma.slope = 0.1;
                cfg.init_t = 0.4;
                Network net(cfg, 100 + static_cast<std::uint64_t>(model));
                Dataset data;
                data.samples = 3;
                data.inputs = random_inputs(ops, cfg.dims[0] * 3, rng);
                data.targets = random_matrix(ops.size(1), cfg.dims.back() * 3, rng);
                Eigen::VectorXd grad;
                evaluate_loss(net, ops, data, LossKind::Mse, &grad);
                const Eigen::VectorXd theta = net.parameters();
                ASSERT_EQ(grad.size(), theta.size());
                for (Eigen::Index i = 0; i < theta.size(); ++i) {
                    Eigen::VectorXd tp = theta, tm = theta;
                    tp(i) += 1e-5;
                    tm(i) -= 1e-5;
                    net.set_parameters(tp);
                    const double fp = evaluate_loss(net, ops, data, LossKind::Mse);
                    net.set_parameters(tm);
                    const double fm = evaluate_loss(net, ops, data, LossKind::Mse);
                    EXPECT_LE(rel_error(grad(i), (fp - fm) / 2e-5), 1e-5) << "model " << model << " param " << i;
                }
                net.set_parameters(theta);
                ++model;
            }
        }
    }
}

TEST(Backward, CandidateLossFiniteDifferences) {
    std::mt19937_64 rng(14);
    const auto c = random_delaunay(12, 30, true);
    const auto ops = make_operators(c);
    NetworkConfig cfg;
    cfg.dims = {1, 3, 1};
    cfg.branches = 3;
    cfg.sigma.kind = Activation::LeakyReLU;
    Network net(cfg, 5);
    Dataset data;
    data.samples = 4;
    data.inputs = {Eigen::MatrixXd::Zero(ops.size(0), 4), random_matrix(ops.size(1), 4, rng),
                   Eigen::MatrixXd::Zero(ops.size(2), 4)};
    for (int s = 0; s < 4; ++s) {
        const auto nb = c.neighbors(static_cast<std::size_t>(s));
        CandidateSet set;
        for (auto v : nb) set.candidates.push_back(static_cast<int>(v));
        set.label = s % static_cast<int>(set.candidates.size());
        data.candidates.push_back(set);
    }
    Eigen::VectorXd grad;
    evaluate_loss(net, ops, data, LossKind::CandidateCrossEntropy, &grad);
    const Eigen::VectorXd theta = net.parameters();
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        Eigen::VectorXd tp = theta, tm = theta;
        tp(i) += 1e-5;
        tm(i) -= 1e-5;
        net.set_parameters(tp);
        const double fp = evaluate_loss(net, ops, data, LossKind::CandidateCrossEntropy);
        net.set_parameters(tm);
        const double fm = evaluate_loss(net, ops, data, LossKind::CandidateCrossEntropy);
        EXPECT_LE(rel_error(grad(i), (fp - fm) / 2e-5), 1e-5) << "param " << i;
    }
}

TEST(Backward, ZeroUpstreamAndFlatSpectrum) {
    const auto c = random_delaunay(10, 31, true);
    const auto ops = make_operators(c);
    NetworkConfig cfg;
    cfg.dims = {2, 2};
    const Network net(cfg, 3);
    std::mt19937_64 rng(15);
    const auto x = random_inputs(ops, 2, rng);
    const auto cache = net.forward(ops, x, 1);
    LevelSignals zero;
    for (int k = 0; k < 3; ++k) zero[static_cast<std::size_t>(k)] = Eigen::MatrixXd::Zero(ops.size(k), 2);
    EXPECT_TRUE(net.backward(ops, cache, zero).isZero(0.0));

    // All-zero incidences give zero Laplacians: the receptive fields have no effect.
    const auto flat_ops = make_operators(Eigen::MatrixXd::Zero(ops.size(0), ops.size(1)),
                                         Eigen::MatrixXd::Zero(ops.size(1), ops.size(2)));
    NetworkConfig cfg2 = cfg;
    cfg2.share_t = false;
    const Network net2(cfg2, 4);
    LevelSignals up;
    for (int k = 0; k < 3; ++k) up[static_cast<std::size_t>(k)] = random_matrix(ops.size(k), 2, rng);
    const auto cache2 = net2.forward(flat_ops, x, 1);
    const Eigen::VectorXd g = net2.backward(flat_ops, cache2, up);
    // Receptive fields sit right after each branch's weights when not shared.
    const Eigen::VectorXd theta = net2.parameters();
    Network shifted = net2;
    for (auto& level : shifted.params()[0])
        for (auto& p : level.branches) p.tau_d = p.tau_u = 2.0;
    const auto cache3 = shifted.forward(flat_ops, x, 1);
    for (int k = 0; k < 3; ++k)
        EXPECT_EQ(cache3.final_outputs()[static_cast<std::size_t>(k)], cache2.final_outputs()[static_cast<std::size_t>(k)]);
    Eigen::Index pos = 0;
    for (int k = 0; k < 3; ++k) {
        pos += (k > 0 ? 2 : 0) * 4 + (k < 2 ? 4 : 0) + 4;  // weights of this level (F = 2)
        if (k > 0) {
            EXPECT_EQ(g(pos++), 0.0);
        }
        EXPECT_EQ(g(pos++), 0.0);
    }
    EXPECT_EQ(pos, theta.size());
}

TEST(Train, ZeroStepLeavesParameters) {
    const auto c = random_delaunay(10, 40, true);
    const auto ops = make_operators(c);
    NetworkConfig cfg;
    Network net(cfg, 1);
    std::mt19937_64 rng(16);
    Dataset data;
    data.samples = 2;
    data.inputs = random_inputs(ops, 2, rng);
    data.targets = random_matrix(ops.size(1), 2, rng);
    const Eigen::VectorXd before = net.parameters();
    TrainConfig tc;
    tc.step_size = 0.0;
    tc.epochs = 5;
    const auto trace = train(net, ops, data, tc);
    EXPECT_EQ(net.parameters(), before);
    ASSERT_EQ(trace.losses.size(), 6u);
    for (double l : trace.losses) EXPECT_EQ(l, trace.losses[0]);
}

TEST(Train, ReachesLeastSquaresOptimum) {
    // Zero incidences make the level-0 output psi_u * x: a one-weight regression.
    const Eigen::Index n0 = 6, n1 = 4, n2 = 0;
    const auto ops = make_operators(Eigen::MatrixXd::Zero(n0, n1), Eigen::MatrixXd::Zero(n1, n2));
    NetworkConfig cfg;
    cfg.dims = {1, 1};
    cfg.sigma.kind = Activation::Identity;
    cfg.out_level = 0;
    Network net(cfg, 2);
    std::mt19937_64 rng(17);
    Dataset data;
    data.samples = 5;
    data.inputs = {random_matrix(n0, 5, rng), random_matrix(n1, 5, rng), Eigen::MatrixXd::Zero(n2, 5)};
    data.targets = 1.7 * data.inputs[0] + 0.3 * random_matrix(n0, 5, rng);
    const double optimum = (data.inputs[0].array() * data.targets.array()).sum() / data.inputs[0].squaredNorm();
    TrainConfig tc;
    tc.step_size = 0.2;
    tc.epochs = 400;
    const auto trace = train(net, ops, data, tc);
    EXPECT_NEAR(net.params()[0][0].branches[0].psi_u(0, 0), optimum, 1e-6);
    EXPECT_LT(trace.losses.back(), trace.losses.front());
}

TEST(Train, DivergenceGuard) {
    const auto c = random_delaunay(10, 41, true);
    const auto ops = make_operators(c);
    NetworkConfig cfg;
    cfg.sigma.kind = Activation::Identity;
    Network net(cfg, 1);
    std::mt19937_64 rng(18);
    Dataset data;
    data.samples = 2;
    data.inputs = random_inputs(ops, 2, rng);
    data.targets = random_matrix(ops.size(1), 2, rng);
    TrainConfig tc;
    tc.step_size = 1e6;
    tc.epochs = 200;
    EXPECT_THROW(train(net, ops, data, tc), DivergenceError);
}

TEST(Checkpoint, RoundTrip) {
    for (auto family : {ModelFamily::Continuous, ModelFamily::Discrete}) {
        NetworkConfig cfg;
        cfg.family = family;
        cfg.dims = {2, 3, 1};
        cfg.branches = 2;
        cfg.aggregation = Aggregation::Mlp;
        cfg.sigma.kind = Activation::LeakyReLU;
        const Network net(cfg, 77);
        TruncationConfig trunc;
        trunc.k_upper = {3, 4, 5};
        trunc.policy = TruncationPolicy::HighFrequency;
        const auto text = checkpoint_to_json(net, trunc, 1234567890123ULL);
        const auto back = checkpoint_from_json(text);
        EXPECT_EQ(back.network.parameters(), net.parameters());
        EXPECT_EQ(back.truncation.k_upper, trunc.k_upper);
        EXPECT_EQ(back.truncation.policy, TruncationPolicy::HighFrequency);
        EXPECT_EQ(back.complex_checksum, 1234567890123ULL);
        EXPECT_EQ(checkpoint_to_json(back.network, back.truncation, back.complex_checksum), text);
    }
    EXPECT_THROW(checkpoint_from_json("{}"), ConfigError);
    const auto path = std::filesystem::temp_directory_path() / "cosimo_checkpoint.json";
    const Network net(NetworkConfig{}, 3);
    save_checkpoint(net, {}, 5, path);
    EXPECT_EQ(load_checkpoint(path).network.parameters(), net.parameters());
    std::filesystem::remove(path);
}

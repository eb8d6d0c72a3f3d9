#pragma once

#include "cosimo/complex.hpp"
#include "cosimo/spectral.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cosimo {

enum class Activation { Identity, ReLU, LeakyReLU, Tanh };

struct Nonlinearity {
    Activation kind = Activation::ReLU;
    double slope = 0.01;  // LeakyReLU only

    Eigen::MatrixXd apply(const Eigen::MatrixXd& z) const;
    /// Elementwise derivative at the pre-activation `z` (0 at z = 0 for ReLU).
    Eigen::MatrixXd derivative(const Eigen::MatrixXd& z) const;
};

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

/// Multi-feature signal on the k-simplices, |X_k| x F.
struct Cochain {
    int level = 0;
    Eigen::MatrixXd values;
};

/// A level-k signal together with its lower and upper projections.
struct CochainTriple {
    Cochain own;
    Eigen::MatrixXd lower_proj;  // B_k^T X_{k-1}
    Eigen::MatrixXd upper_proj;  // B_{k+1} X_{k+1}
};

/// Projects neighbor-level signals onto level k. A null neighbor yields zeros.
/// `b_lower` is B_k (0 x |X_0| at k = 0) and `b_upper` is B_{k+1}.
CochainTriple project(const Eigen::MatrixXd& b_lower, const Eigen::MatrixXd& b_upper, const Cochain* lower,
                      const Cochain& own, const Cochain* upper);
CochainTriple project(const SimplicialComplex& complex, const Cochain* lower, const Cochain& own,
                      const Cochain* upper);

/// (sum_i alpha_i L_d^i + sum_i beta_i L_u^i) x by repeated products.
Eigen::MatrixXd simplicial_filter(const Eigen::MatrixXd& x, const std::vector<double>& alphas,
                                  const std::vector<double>& betas, const HodgeOperators& ops);

/// Weights of one continuous layer at one level (one branch).
struct CosimoParams {
    Eigen::MatrixXd theta_d, theta_u, psi_d, psi_u;  // F_in x F_out
    double tau_d = 0.0;                              // t_d = exp(tau_d)
    double tau_u = 0.0;
    Nonlinearity sigma;

    double t_d() const { return std::exp(tau_d); }
    double t_u() const { return std::exp(tau_u); }
};

/// Polynomial-filter weights of one discrete layer; index i multiplies L^i.
struct DiscreteParams {
    std::vector<Eigen::MatrixXd> theta_d, theta_u, psi_d, psi_u;
    Nonlinearity sigma;

    int order_d() const { return static_cast<int>(theta_d.size()) - 1; }
    int order_u() const { return static_cast<int>(theta_u.size()) - 1; }
};

/// sigma(sum_i L_d^i X_d Theta_d,i + L_d^i X Psi_d,i + L_u^i X Psi_u,i + L_u^i X_u Theta_u,i).
/// Lower terms are skipped at level 0.
Cochain discrete_layer(const CochainTriple& triple, const DiscreteParams& params, const HodgeOperators& ops);

/// sigma(e^{-t_d L_d} X_d Theta_d + e^{-t_u L_u} X_u Theta_u + e^{-t_d L_d} X Psi_d + e^{-t_u L_u} X Psi_u),
/// each exponential applied through the (possibly truncated) spectra. Throws
/// MissingSpectraError when `spectra` is null. Lower terms are skipped at level 0.
Cochain cosimo_layer(const CochainTriple& triple, const CosimoParams& params, const LevelSpectra* spectra);

enum class Aggregation { Sum, Mlp };

std::string to_string(Aggregation a);
Aggregation parse_aggregation(const std::string& name);

/// Affine map M*F -> F followed by a nonlinearity, used by Aggregation::Mlp.
struct MlpAggregator {
    Eigen::MatrixXd weight;  // (M*F) x F
    Eigen::RowVectorXd bias;
    Nonlinearity sigma;
};

/// Sum, or concatenate along features and apply `mlp`.
Cochain aggregate_branches(const std::vector<Cochain>& outputs, Aggregation mode, const MlpAggregator* mlp = nullptr);

/// Everything the network needs to know about one complex: incidence
/// matrices B_0..B_3 (the ends are empty), Hodge operators and spectra of
/// levels 0..2. Can be built from a clean complex or from arbitrary (for
/// example perturbed or permuted) incidence matrices.
struct ComplexOperators {
    std::array<Eigen::MatrixXd, 4> b;
    std::array<HodgeOperators, 3> hodge;
    std::array<LevelSpectra, 3> spectra;

    Eigen::Index size(int k) const { return hodge[static_cast<std::size_t>(k)].size(); }
};

/// Truncation settings per level; a value <= 0 keeps every mode.
struct TruncationConfig {
    std::array<int, 3> k_lower{0, 0, 0};
    std::array<int, 3> k_upper{0, 0, 0};
    TruncationPolicy policy = TruncationPolicy::LowFrequency;
};

ComplexOperators make_operators(const SimplicialComplex& complex, const TruncationConfig& truncation = {});
ComplexOperators make_operators(const Eigen::MatrixXd& b1, const Eigen::MatrixXd& b2,
                                const TruncationConfig& truncation = {});
ComplexOperators make_operators(const PerturbedComplex& perturbed, const TruncationConfig& truncation = {});

enum class ModelFamily { Continuous, Discrete };

std::string to_string(ModelFamily f);
ModelFamily parse_model_family(const std::string& name);

struct NetworkConfig {
    ModelFamily family = ModelFamily::Continuous;
    std::vector<int> dims{1, 1};  // F_0 ... F_L
    int branches = 1;             // M
    Aggregation aggregation = Aggregation::Sum;
    Nonlinearity sigma;
    bool share_t = true;  // one (t_d, t_u) per layer and branch, shared by all levels
    double init_t = 1.0;
    double init_std = -1.0;  // <= 0 selects 1 / sqrt(F_in)
    int discrete_order = 1;  // T_d = T_u for the discrete family
    bool discrete_zero_order = true;  // false removes the i = 0 terms
    int out_level = 1;

    int layers() const { return static_cast<int>(dims.size()) - 1; }
};

/// Parameters of one layer at one level.
struct LayerLevel {
    std::vector<CosimoParams> branches;      // continuous family
    std::vector<DiscreteParams> discrete;    // discrete family
    std::optional<MlpAggregator> mlp;        // Aggregation::Mlp with M > 1
};

/// Signals on levels 0..2. Batches of S samples are laid out feature-major:
/// column f * S + s holds feature f of sample s.
using LevelSignals = std::array<Eigen::MatrixXd, 3>;

struct ForwardCache;

/// Stack of layers acting on the 0-, 1- and 2-simplices simultaneously.
class Network {
public:
    Network() = default;
    Network(NetworkConfig config, std::uint64_t seed);

    const NetworkConfig& config() const noexcept { return config_; }
    /// params()[l][k] is layer l (0-based) at level k.
    const std::vector<std::array<LayerLevel, 3>>& params() const noexcept { return layers_; }
    std::vector<std::array<LayerLevel, 3>>& params() noexcept { return layers_; }

    /// Levels whose output at layer l (0-based) can influence the output level.
    bool level_needed(int layer, int k, bool all_levels) const;

    /// Runs every layer. With `all_levels` false, levels that cannot reach
    /// `out_level` are skipped (their outputs are left empty).
    ForwardCache forward(const ComplexOperators& ops, const LevelSignals& inputs, int samples,
                         bool all_levels = true) const;

    /// Gradient of a scalar loss with respect to the flattened parameters,
    /// given its gradient with respect to the final output at every level
    /// (entries may be empty for zero). Continuous family only.
    Eigen::VectorXd backward(const ComplexOperators& ops, const ForwardCache& cache,
                             const LevelSignals& output_grad) const;

    /// Flattened trainable parameters (weights row-major, then receptive fields).
    Eigen::VectorXd parameters() const;
    void set_parameters(const Eigen::VectorXd& flat);
    Eigen::Index parameter_count() const;

    /// Largest weight norm over all layers, levels and branches (spectral or
    /// Frobenius), the quantity inside the square root of s.
    double max_weight_norm(bool spectral = true) const;

private:
    NetworkConfig config_;
    std::vector<std::array<LayerLevel, 3>> layers_;
};

struct ForwardCache {
    int samples = 0;
    /// outputs[l][k]: signal at level k after l layers; outputs[0] are the inputs.
    std::vector<LevelSignals> outputs;

    struct BranchState {
        Eigen::MatrixXd pre;      // pre-activation Z
        Eigen::MatrixXd h_lower;  // spectral coefficients before the lower gain
        Eigen::MatrixXd h_upper;
        Eigen::VectorXd g_lower;  // exp(-t lambda)
        Eigen::VectorXd g_upper;
    };
    struct LevelState {
        bool computed = false;
        Eigen::MatrixXd c_lower_proj, c_lower_own;  // V_d^T X_d, V_d^T X
        Eigen::MatrixXd c_upper_proj, c_upper_own;  // V_u^T X_u, V_u^T X
        std::vector<BranchState> branches;
        Eigen::MatrixXd concat;  // branch outputs side by side (MLP aggregation)
        Eigen::MatrixXd agg_pre;
    };
    std::vector<std::array<LevelState, 3>> layers;

    const LevelSignals& final_outputs() const { return outputs.back(); }
};

/// Multiplies every sample block of a feature-major batch by `w` (F x F').
Eigen::MatrixXd apply_weight(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w, int samples);
/// Sum over samples of block_s(a)^T block_s(b), an F_a x F_b matrix.
Eigen::MatrixXd weight_gradient(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int samples);
/// Packs per-sample N x F matrices into the feature-major batch layout, and back.
Eigen::MatrixXd pack_samples(const std::vector<Eigen::MatrixXd>& samples);
Eigen::MatrixXd sample_block(const Eigen::MatrixXd& batch, int samples, int s);

// Losses ---------------------------------------------------------------

struct LossValue {
    double loss = 0.0;
    Eigen::MatrixXd grad;  // same shape as the prediction
};

/// Mean of squared entries.
LossValue mse_loss(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target);

/// Candidate-node classification on an edge output with one feature per sample
/// (N_1 x S). Node scores are B_1 y; softmax over each sample's candidates.
struct CandidateSet {
    std::vector<int> candidates;  // vertex indices
    int label = 0;                // position inside `candidates`
};
LossValue candidate_cross_entropy(const Eigen::MatrixXd& edge_output, const Eigen::MatrixXd& b1,
                                  const std::vector<CandidateSet>& sets);
/// Index into each sample's candidate list with the highest score.
std::vector<int> predict_candidates(const Eigen::MatrixXd& edge_output, const Eigen::MatrixXd& b1,
                                    const std::vector<CandidateSet>& sets);

// Training -------------------------------------------------------------

enum class Optimizer { GradientDescent, Momentum, Adam };
enum class LossKind { Mse, CandidateCrossEntropy };

struct TrainConfig {
    double step_size = 0.01;
    int epochs = 100;
    Optimizer optimizer = Optimizer::Momentum;
    double momentum = 0.9;  // also Adam's first-moment decay
    double adam_beta2 = 0.999;
    LossKind loss = LossKind::Mse;
    double grad_clip = 0.0;  // > 0 rescales gradients with a larger norm
};

struct Dataset {
    LevelSignals inputs;  // feature-major batches
    int samples = 0;
    Eigen::MatrixXd targets;             // for Mse: same shape as the output level
    std::vector<CandidateSet> candidates;  // for CandidateCrossEntropy
};

struct TrainTrace {
    std::vector<double> losses;  // loss before each epoch's update, then the final loss
};

/// Loss and parameter gradient of `net` on `data`.
double evaluate_loss(const Network& net, const ComplexOperators& ops, const Dataset& data, LossKind kind,
                     Eigen::VectorXd* gradient = nullptr);

/// Full-batch training. Deterministic; throws DivergenceError when the loss
/// or gradient turns non-finite.
TrainTrace train(Network& net, const ComplexOperators& ops, const Dataset& data, const TrainConfig& config);

// Checkpoints ----------------------------------------------------------

std::string checkpoint_to_json(const Network& net, const TruncationConfig& truncation, std::uint64_t complex_checksum);
struct Checkpoint {
    Network network;
    TruncationConfig truncation;
    std::uint64_t complex_checksum = 0;
};
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const Network& net, const TruncationConfig& truncation, std::uint64_t complex_checksum,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cosimo

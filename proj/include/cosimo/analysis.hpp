#pragma once

#include "cosimo/complex.hpp"
#include "cosimo/nn.hpp"
#include "cosimo/spectral.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cosimo {

enum class NormKind { Spectral, Frobenius };

double matrix_norm(const Eigen::MatrixXd& m, NormKind kind);

/// x^T L_k x as ||B_k x||^2 + ||B_{k+1}^T x||^2, summed over columns.
double dirichlet_energy(const Eigen::MatrixXd& x, const Eigen::MatrixXd& b_lower, const Eigen::MatrixXd& b_upper);
double dirichlet_energy(const Eigen::MatrixXd& x, const ComplexOperators& ops, int k);
/// tr(X^T L X); the second route used to cross-check the incidence form.
double dirichlet_energy_quadratic(const Eigen::MatrixXd& x, const Eigen::MatrixXd& laplacian);

struct EnergyTrace {
    std::vector<std::array<double, 3>> energy;  // [layer][level], layer 0 = inputs
    std::vector<std::array<double, 3>> norm;

    std::size_t layers() const { return energy.empty() ? 0 : energy.size() - 1; }
};

/// Energies and norms of every level after every layer of `net` (one sample).
EnergyTrace energy_trace(const Network& net, const ComplexOperators& ops, const LevelSignals& inputs,
                         NormKind norm = NormKind::Spectral);

struct BoundReport {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;
    bool satisfied = true;
    std::vector<std::pair<std::string, double>> constants;
};

BoundReport make_report(std::string name, double lhs, double rhs,
                        std::vector<std::pair<std::string, double>> constants = {});

/// Architectural and structural constants entering the over-smoothing bounds.
struct OversmoothingConstants {
    double s = 0.0;             // sqrt of the largest weight norm
    double lambda_tilde = 0.0;  // largest eigenvalue over all lower and upper Laplacians
    double phi = 0.0;           // min of t * smallest nonzero eigenvalue (continuous model only)
    int features = 1;
};

/// Largest eigenvalue of every L_{k,d}, L_{k,u}.
double lambda_tilde(const ComplexOperators& ops);

/// min over levels of t_d * lambda_min(L_{k,d}) and t_u * lambda_min(L_{k,u}),
/// taking lambda_min over nonzero eigenvalues. Returns nullopt if all spectra vanish.
std::optional<double> phi_constant(const ComplexOperators& ops, double t_d, double t_u);

/// Smallest eigenvalue above a relative zero threshold, if any.
std::optional<double> smallest_nonzero(const Eigen::VectorXd& eigenvalues);

OversmoothingConstants oversmoothing_constants(const Network& net, const ComplexOperators& ops,
                                               NormKind norm = NormKind::Spectral);

/// E(X_k^{l+1}) against the discrete-model bound evaluated at layer l.
BoundReport oversmoothing_rhs_discrete(const EnergyTrace& trace, std::size_t layer, int k,
                                       const OversmoothingConstants& c);
/// E(X_k^{l+1}) against the continuous-model bound evaluated at layer l.
BoundReport oversmoothing_rhs_continuous(const EnergyTrace& trace, std::size_t layer, int k,
                                         const OversmoothingConstants& c);

struct CorollaryReport {
    bool discrete = false;
    bool continuous = false;
    std::optional<double> t_heuristic_max;  // undefined when L_k has no nonzero eigenvalue
};

/// `lk_eigenvalues` is the spectrum of the full L_k used by the receptive-field heuristic.
CorollaryReport corollary_conditions(const OversmoothingConstants& c, const Eigen::VectorXd& lk_eigenvalues);

/// Stability of the closed-form filter at level k under incidence perturbations.
/// Both filters start from the same initial conditions; full spectra are used.
BoundReport stability_bound(const PerturbedComplex& perturbed, int k, const Eigen::VectorXd& x_lower0,
                            const Eigen::VectorXd& x_upper0, const Eigen::VectorXd& x0, double t_d, double t_u);

struct EntropySelection {
    bool defined = false;
    int k = 0;
    double entropy = 0.0;
};

EntropySelection spectral_entropy_select(const Eigen::VectorXd& eigenvalues, double tau = 0.05);

/// Largest deviation between P_k * output and the output on relabeled simplices.
double permutation_equivariance_check(const Network& net, const SimplicialComplex& complex, std::uint64_t seed,
                                      int trials = 1);

/// Same check with explicit permutations (index maps new -> old) for each level.
double permutation_deviation(const Network& net, const Eigen::MatrixXd& b1, const Eigen::MatrixXd& b2,
                             const std::array<std::vector<int>, 3>& perm, const LevelSignals& inputs);

}  // namespace cosimo

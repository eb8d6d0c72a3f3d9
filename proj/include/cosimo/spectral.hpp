#pragma once

#include "cosimo/complex.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cosimo {

/// Which Laplacian of a level a spectrum was computed from.
enum class OperatorTag { Lower, Upper, Full };

std::string to_string(OperatorTag tag);
/// Accepts "down"/"lower", "up"/"upper" and "full".
OperatorTag parse_operator_tag(const std::string& name);

const Eigen::MatrixXd& select_operator(const HodgeOperators& ops, OperatorTag tag);

struct HodgeSpectrum {
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;  // orthonormal columns aligned with eigenvalues
    OperatorTag source = OperatorTag::Full;

    Eigen::Index size() const noexcept { return eigenvalues.size(); }
};

/// Full eigendecomposition of a symmetric matrix (cyclic Jacobi).
///
/// Eigenvalues come back ascending; each eigenvector is flipped so that its
/// first component with magnitude above 1e-10 is positive. Throws
/// SymmetryError when ||L - L^T||_max exceeds 1e-12 * max(1, ||L||_max).
HodgeSpectrum eig_sym(const Eigen::MatrixXd& l, OperatorTag source = OperatorTag::Full);

enum class TruncationPolicy {
    LowFrequency,  // keep the K smallest eigenvalues
    HighFrequency,  // keep the K largest eigenvalues
};

std::string to_string(TruncationPolicy policy);
TruncationPolicy parse_truncation_policy(const std::string& name);

struct TruncatedSpectrum {
    int k = 0;
    std::vector<int> indices;  // positions in the parent spectrum, ascending
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;  // N x K
    TruncationPolicy policy = TruncationPolicy::LowFrequency;
    OperatorTag source = OperatorTag::Full;

    Eigen::Index size() const noexcept { return vectors.rows(); }
};

/// Retains K eigenpairs; throws DomainError unless 1 <= K <= N. An empty
/// spectrum (N = 0) is allowed with K = 0.
TruncatedSpectrum truncate(const HodgeSpectrum& spectrum, int k,
                           TruncationPolicy policy = TruncationPolicy::LowFrequency);

/// All N modes.
TruncatedSpectrum full(const HodgeSpectrum& spectrum);

/// V_K diag(exp(-t lambda_K)) V_K^T X W.
Eigen::MatrixXd exp_filter(const TruncatedSpectrum& spectrum, double t, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& w);
/// Same with W = I.
Eigen::MatrixXd exp_filter(const TruncatedSpectrum& spectrum, double t, const Eigen::MatrixXd& x);

/// Dense exp(-t L) by scaling and squaring around a Taylor core. Reference
/// implementation for tests; independent of the eigensolver.
Eigen::MatrixXd matrix_exp_oracle(const Eigen::MatrixXd& l, double t);

/// Spectra of the lower and upper Laplacian of one level.
struct LevelSpectra {
    int level = 0;
    bool has_lower = false;
    TruncatedSpectrum lower;
    TruncatedSpectrum upper;

    Eigen::Index size() const noexcept { return upper.size(); }
};

/// Eigendecomposes both Laplacians of `ops`; `k_lower`/`k_upper` <= 0 keep all modes.
LevelSpectra level_spectra(const HodgeOperators& ops, int k_lower = 0, int k_upper = 0,
                           TruncationPolicy policy = TruncationPolicy::LowFrequency);

/// Closed-form diffusion solution
///   e^{-t_d L_d} x_d + e^{-t_u L_u} x_u + e^{-t_d L_d} x_0 + e^{-t_u L_u} x_0.
/// At level 0 the lower Laplacian is undefined and the two lower terms are
/// dropped (x_d must then be zero or empty).
Eigen::VectorXd cosimo_filter(const LevelSpectra& spectra, const Eigen::VectorXd& x_d, const Eigen::VectorXd& x_u,
                              const Eigen::VectorXd& x_0, double t_d, double t_u);

/// Explicit Euler for dx/dt = -L x with ceil(t_end / dt) equal steps.
/// Throws DomainError when dt >= 2 / lambda_max(L), the message naming the threshold.
Eigen::VectorXd integrate_diffusion(const Eigen::MatrixXd& l, const Eigen::VectorXd& x0, double t_end, double dt);

// Spectrum cache: JSON with the operator tag, eigenvalues, row-major
// eigenvectors and the checksum of the Laplacian it was computed from.
std::string spectrum_to_json(const HodgeSpectrum& spectrum, std::uint64_t laplacian_checksum);
/// Throws StaleCacheError when the stored checksum does not match `laplacian`.
HodgeSpectrum spectrum_from_json(const std::string& text, const Eigen::MatrixXd& laplacian);
void save_spectrum(const HodgeSpectrum& spectrum, const Eigen::MatrixXd& laplacian, const std::filesystem::path& path);
HodgeSpectrum load_spectrum(const std::filesystem::path& path, const Eigen::MatrixXd& laplacian);

/// Loads the cached spectrum if present and fresh, otherwise computes and stores it.
HodgeSpectrum cached_spectrum(const Eigen::MatrixXd& laplacian, OperatorTag tag, const std::filesystem::path& path);

}  // namespace cosimo

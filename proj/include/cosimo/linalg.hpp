#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace cosimo::linalg {

struct SymmetricEigen {
    Eigen::VectorXd values;   // unsorted, as left on the diagonal
    Eigen::MatrixXd vectors;  // columns
    int sweeps = 0;
};

/// Cyclic Jacobi eigensolver for dense symmetric matrices.
///
/// Iterates until the off-diagonal Frobenius mass drops below
/// `rel_tol * ||a||_F`; throws ConvergenceError after `max_sweeps`.
/// Only the upper triangle is trusted to be symmetric with the lower one;
/// callers validate symmetry beforehand.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& a, double rel_tol = 1e-12, int max_sweeps = 100);

/// Largest singular value.
double spectral_norm(const Eigen::MatrixXd& m);

double max_abs(const Eigen::MatrixXd& m);

/// FNV-1a over shape and raw values; used to detect stale spectrum caches.
std::uint64_t checksum(const Eigen::MatrixXd& m);

}  // namespace cosimo::linalg

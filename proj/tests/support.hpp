#pragma once

#include "cosimo/complex.hpp"

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace cosimo::testing {

inline SimplicialComplex filled_triangle() {
    const std::vector<Triangle> tris{{0, 1, 2}};
    return build_complex({}, tris);
}

inline SimplicialComplex hollow_triangle() {
    const std::vector<Edge> edges{{0, 1}, {0, 2}, {1, 2}};
    return build_complex(edges, {});
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double std = 1.0) {
    std::normal_distribution<double> normal(0.0, std);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

// G G^T with a rank deficit, so the result has a nontrivial kernel like a Laplacian.
inline Eigen::MatrixXd random_psd(Eigen::Index n, std::mt19937_64& rng, Eigen::Index rank = -1) {
    if (rank < 0) rank = n;
    const Eigen::MatrixXd g = random_matrix(n, rank, rng) / std::sqrt(static_cast<double>(n));
    return g * g.transpose();
}

inline SimplicialComplex random_delaunay(std::size_t n, std::uint64_t seed, bool holes) {
    const auto pts = random_points(n, seed);
    std::vector<HoleDisk> disks;
    if (holes) disks = {{{0.3, 0.3}, 0.12}, {{0.7, 0.7}, 0.12}};
    return delaunay_complex(pts, disks);
}

// Permutation matrix P with P x = x permuted by `order` (row i picks entry order[i]).
inline Eigen::MatrixXd permutation_matrix(const std::vector<int>& order) {
    const Eigen::Index n = static_cast<Eigen::Index>(order.size());
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) p(i, order[static_cast<std::size_t>(i)]) = 1.0;
    return p;
}

inline double max_rel_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
    const double scale = std::max(1e-300, want.cwiseAbs().maxCoeff());
    return (got - want).cwiseAbs().maxCoeff() / scale;
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

}  // namespace cosimo::testing

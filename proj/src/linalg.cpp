#include "cosimo/linalg.hpp"

#include "cosimo/errors.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace cosimo::linalg {

namespace {

double off_diagonal_norm(const Eigen::MatrixXd& a) {
    double sum = 0.0;
    const Eigen::Index n = a.rows();
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            if (i != j) sum += a(i, j) * a(i, j);
    return std::sqrt(sum);
}

}  // namespace

SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& input, double rel_tol, int max_sweeps) {
    const Eigen::Index n = input.rows();
    if (input.cols() != n) throw DimensionError("jacobi_eigen: matrix is not square");

    Eigen::MatrixXd a = input;
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    const double scale = a.norm();
    SymmetricEigen out;
    if (n == 0 || scale == 0.0) {
        out.values = Eigen::VectorXd::Zero(n);
        out.vectors = v;
        return out;
    }
    const double target = rel_tol * scale;

    int sweep = 0;
    while (off_diagonal_norm(a) > target) {
        if (sweep == max_sweeps)
            throw ConvergenceError("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) +
                                   " sweeps");
        ++sweep;
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 0.5 / theta;
                } else {
                    t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                auto col_p = a.col(p);
                auto col_q = a.col(q);
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = col_p(k);
                    const double akq = col_q(k);
                    col_p(k) = c * akp - s * akq;
                    col_q(k) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;

                auto vp = v.col(p);
                auto vq = v.col(q);
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double x = vp(k);
                    const double y = vq(k);
                    vp(k) = c * x - s * y;
                    vq(k) = s * x + c * y;
                }
            }
        }
    }

    out.values = a.diagonal();
    out.vectors = std::move(v);
    out.sweeps = sweep;
    return out;
}

double spectral_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    const Eigen::MatrixXd gram = m.rows() <= m.cols() ? Eigen::MatrixXd(m * m.transpose())
                                                      : Eigen::MatrixXd(m.transpose() * m);
    const auto eig = jacobi_eigen(gram);
    return std::sqrt(std::max(0.0, eig.values.maxCoeff()));
}

double max_abs(const Eigen::MatrixXd& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

std::uint64_t checksum(const Eigen::MatrixXd& m) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    };
    const std::int64_t rows = m.rows();
    const std::int64_t cols = m.cols();
    mix(&rows, sizeof rows);
    mix(&cols, sizeof cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            double x = m(i, j);
            if (x == 0.0) x = 0.0;  // fold -0.0
            mix(&x, sizeof x);
        }
    return h;
}

}  // namespace cosimo::linalg

#include "cosimo/complex.hpp"

#include "cosimo/errors.hpp"
#include "cosimo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace cosimo {

namespace {

template <std::size_t N>
std::string describe(const std::array<Vertex, N>& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < N; ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

template <std::size_t N>
std::array<Vertex, N> canonical(std::array<Vertex, N> s) {
    std::sort(s.begin(), s.end());
    for (std::size_t i = 0; i < N; ++i) {
        if (s[i] < 0) throw DomainError("negative vertex id in simplex " + describe(s));
        if (i > 0 && s[i] == s[i - 1]) throw DegenerateSimplexError("repeated vertex in simplex " + describe(s));
    }
    return s;
}

template <std::size_t N>
std::set<std::array<Vertex, N>> canonical_set(std::span<const std::array<Vertex, N>> input,
                                              std::vector<std::string>& duplicates) {
    std::set<std::array<Vertex, N>> out;
    for (const auto& raw : input) {
        const auto s = canonical(raw);
        if (!out.insert(s).second) duplicates.push_back(describe(s));
    }
    return out;
}

}  // namespace

std::size_t SimplicialComplex::count(int k) const noexcept {
    switch (k) {
        case 0: return vertices_.size();
        case 1: return edges_.size();
        case 2: return triangles_.size();
        default: return 0;
    }
}

std::optional<std::size_t> SimplicialComplex::vertex_index(Vertex v) const {
    const auto it = vertex_lookup_.find(v);
    if (it == vertex_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> SimplicialComplex::edge_index(Vertex a, Vertex b) const {
    const Edge e = a < b ? Edge{a, b} : Edge{b, a};
    const auto it = edge_lookup_.find(e);
    if (it == edge_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> SimplicialComplex::triangle_index(Vertex a, Vertex b, Vertex c) const {
    Triangle t{a, b, c};
    std::sort(t.begin(), t.end());
    const auto it = triangle_lookup_.find(t);
    if (it == triangle_lookup_.end()) return std::nullopt;
    return it->second;
}

long SimplicialComplex::euler_characteristic() const noexcept {
    return static_cast<long>(vertices_.size()) - static_cast<long>(edges_.size()) +
           static_cast<long>(triangles_.size());
}

std::vector<std::size_t> SimplicialComplex::neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    const Vertex v = vertices_.at(i);
    for (const auto& e : edges_) {
        if (e[0] == v) out.push_back(vertex_lookup_.at(e[1]));
        else if (e[1] == v) out.push_back(vertex_lookup_.at(e[0]));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::uint64_t SimplicialComplex::checksum() const {
    Eigen::MatrixXd flat(1, static_cast<Eigen::Index>(vertices_.size() + 2 * edges_.size() + 3 * triangles_.size()));
    Eigen::Index c = 0;
    for (Vertex v : vertices_) flat(0, c++) = v;
    for (const auto& e : edges_)
        for (Vertex v : e) flat(0, c++) = v;
    for (const auto& t : triangles_)
        for (Vertex v : t) flat(0, c++) = v;
    return linalg::checksum(flat);
}

SimplicialComplex build_complex(std::span<const Edge> edges, std::span<const Triangle> triangles,
                                std::span<const Vertex> vertices, std::optional<std::vector<Point2>> positions) {
    std::vector<std::string> duplicates;
    const auto tri_set = canonical_set<3>(triangles, duplicates);
    auto edge_set = canonical_set<2>(edges, duplicates);
    if (!duplicates.empty()) {
        std::string msg = "duplicate simplices:";
        for (const auto& d : duplicates) msg += " " + d;
        throw DuplicateSimplexError(msg, duplicates);
    }

    std::set<Vertex> vertex_set;
    for (Vertex v : vertices) {
        if (v < 0) throw DomainError("negative vertex id " + std::to_string(v));
        vertex_set.insert(v);
    }
    for (const auto& t : tri_set) {
        edge_set.insert({t[0], t[1]});
        edge_set.insert({t[0], t[2]});
        edge_set.insert({t[1], t[2]});
    }
    for (const auto& e : edge_set) {
        vertex_set.insert(e[0]);
        vertex_set.insert(e[1]);
    }

    SimplicialComplex out;
    out.vertices_.assign(vertex_set.begin(), vertex_set.end());
    out.edges_.assign(edge_set.begin(), edge_set.end());
    out.triangles_.assign(tri_set.begin(), tri_set.end());
    for (std::size_t i = 0; i < out.vertices_.size(); ++i) out.vertex_lookup_[out.vertices_[i]] = i;
    for (std::size_t i = 0; i < out.edges_.size(); ++i) out.edge_lookup_[out.edges_[i]] = i;
    for (std::size_t i = 0; i < out.triangles_.size(); ++i) out.triangle_lookup_[out.triangles_[i]] = i;

    if (positions) {
        if (positions->size() != out.vertices_.size())
            throw DimensionError("positions: expected " + std::to_string(out.vertices_.size()) + " entries, got " +
                                 std::to_string(positions->size()));
        out.positions_ = std::move(positions);
    }
    return out;
}

Eigen::MatrixXi boundary_matrix(const SimplicialComplex& complex, int k) {
    if (k == 1) {
        Eigen::MatrixXi b = Eigen::MatrixXi::Zero(complex.count(0), complex.count(1));
        const auto& edges = complex.edges();
        for (std::size_t j = 0; j < edges.size(); ++j) {
            b(*complex.vertex_index(edges[j][0]), j) = -1;
            b(*complex.vertex_index(edges[j][1]), j) = +1;
        }
        return b;
    }
    if (k == 2) {
        Eigen::MatrixXi b = Eigen::MatrixXi::Zero(complex.count(1), complex.count(2));
        const auto& tris = complex.triangles();
        for (std::size_t j = 0; j < tris.size(); ++j) {
            const auto& t = tris[j];
            // Face omitting vertex p carries sign (-1)^p.
            b(*complex.edge_index(t[1], t[2]), j) = +1;
            b(*complex.edge_index(t[0], t[2]), j) = -1;
            b(*complex.edge_index(t[0], t[1]), j) = +1;
        }
        return b;
    }
    throw UnsupportedLevelError("boundary_matrix: level " + std::to_string(k) + " is not in {1, 2}");
}

Eigen::MatrixXd boundary_operator(const SimplicialComplex& complex, int k) {
    switch (k) {
        case 0: return Eigen::MatrixXd::Zero(0, complex.count(0));
        case 1:
        case 2: return boundary_matrix(complex, k).cast<double>();
        case 3: return Eigen::MatrixXd::Zero(complex.count(2), 0);
        default:
            throw UnsupportedLevelError("boundary_operator: level " + std::to_string(k) + " is not in [0, 3]");
    }
}

HodgeOperators hodge_operators_from_incidence(int k, const Eigen::MatrixXd& b_lower, const Eigen::MatrixXd& b_upper) {
    if (k < 0 || k > 2) throw UnsupportedLevelError("hodge_operators: level " + std::to_string(k) + " is not in [0, 2]");
    if (b_lower.cols() != b_upper.rows())
        throw DimensionError("hodge_operators: B_k has " + std::to_string(b_lower.cols()) + " columns but B_{k+1} has " +
                             std::to_string(b_upper.rows()) + " rows");
    HodgeOperators ops;
    ops.level = k;
    ops.has_lower = k > 0;
    ops.lower = b_lower.transpose() * b_lower;
    ops.upper = b_upper * b_upper.transpose();
    ops.full = ops.lower + ops.upper;
    return ops;
}

HodgeOperators hodge_operators(const SimplicialComplex& complex, int k) {
    if (k < 0 || k > 2) throw UnsupportedLevelError("hodge_operators: level " + std::to_string(k) + " is not in [0, 2]");
    return hodge_operators_from_incidence(k, boundary_operator(complex, k), boundary_operator(complex, k + 1));
}

std::vector<Point2> random_points(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Point2> out(n);
    for (auto& p : out) {
        p[0] = unit(rng);
        p[1] = unit(rng);
    }
    return out;
}

HodgeOperators PerturbedComplex::operators(int k) const {
    return hodge_operators_from_incidence(k, perturbed_boundary(k), perturbed_boundary(k + 1));
}

Eigen::MatrixXd PerturbedComplex::perturbed_boundary(int k) const {
    switch (k) {
        case 0: return Eigen::MatrixXd::Zero(0, b1.rows());
        case 1: return perturbed_b1();
        case 2: return perturbed_b2();
        case 3: return Eigen::MatrixXd::Zero(b2.cols(), 0);
        default:
            throw UnsupportedLevelError("perturbed_boundary: level " + std::to_string(k) + " is not in [0, 3]");
    }
}

namespace {

Eigen::MatrixXd scaled_noise(const Eigen::MatrixXd& clean, double snr_db, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd e(clean.rows(), clean.cols());
    for (Eigen::Index j = 0; j < e.cols(); ++j)
        for (Eigen::Index i = 0; i < e.rows(); ++i) e(i, j) = normal(rng);
    if (std::isinf(snr_db) && snr_db > 0) return Eigen::MatrixXd::Zero(clean.rows(), clean.cols());
    const double raw = e.norm();
    if (raw == 0.0 || clean.norm() == 0.0) return Eigen::MatrixXd::Zero(clean.rows(), clean.cols());
    const double wanted = clean.norm() / std::pow(10.0, snr_db / 20.0);
    return e * (wanted / raw);
}

}  // namespace

PerturbedComplex perturb_incidence(const SimplicialComplex& complex, double snr1_db, double snr2_db,
                                   std::uint64_t seed) {
    if (std::isnan(snr1_db) || std::isnan(snr2_db)) throw DomainError("perturb_incidence: SNR is NaN");
    PerturbedComplex out;
    out.b1 = boundary_operator(complex, 1);
    out.b2 = boundary_operator(complex, 2);
    out.snr1_db = snr1_db;
    out.snr2_db = snr2_db;
    std::mt19937_64 rng(seed);
    out.e1 = scaled_noise(out.b1, snr1_db, rng);
    out.e2 = scaled_noise(out.b2, snr2_db, rng);
    out.epsilon1 = linalg::spectral_norm(out.e1);
    out.epsilon2 = linalg::spectral_norm(out.e2);
    return out;
}

double measured_snr_db(const Eigen::MatrixXd& clean, const Eigen::MatrixXd& error) {
    const double e2 = error.squaredNorm();
    if (e2 == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(clean.squaredNorm() / e2);
}

}  // namespace cosimo

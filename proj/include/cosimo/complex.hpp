#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cosimo {

using Vertex = int;
using Edge = std::array<Vertex, 2>;
using Triangle = std::array<Vertex, 3>;
using Point2 = std::array<double, 2>;

/// Oriented simplicial 2-complex.
///
/// Every stored edge and triangle lists its vertices in strictly ascending
/// order, each level is sorted lexicographically and every face of a stored
/// simplex is itself stored. Instances are immutable once built; use
/// build_complex() or load_complex() to obtain one.
class SimplicialComplex {
public:
    SimplicialComplex() = default;

    const std::vector<Vertex>& vertices() const noexcept { return vertices_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
    const std::optional<std::vector<Point2>>& positions() const noexcept { return positions_; }

    /// Number of k-simplices; zero for k outside [0, 2].
    std::size_t count(int k) const noexcept;

    std::optional<std::size_t> vertex_index(Vertex v) const;
    std::optional<std::size_t> edge_index(Vertex a, Vertex b) const;
    std::optional<std::size_t> triangle_index(Vertex a, Vertex b, Vertex c) const;

    /// V - E + T.
    long euler_characteristic() const noexcept;

    /// Vertex indices adjacent to vertex index `i` through an edge, ascending.
    std::vector<std::size_t> neighbors(std::size_t i) const;

    std::uint64_t checksum() const;

private:
    friend SimplicialComplex build_complex(std::span<const Edge>, std::span<const Triangle>,
                                           std::span<const Vertex>, std::optional<std::vector<Point2>>);

    std::vector<Vertex> vertices_;
    std::vector<Edge> edges_;
    std::vector<Triangle> triangles_;
    std::optional<std::vector<Point2>> positions_;
    std::map<Vertex, std::size_t> vertex_lookup_;
    std::map<Edge, std::size_t> edge_lookup_;
    std::map<Triangle, std::size_t> triangle_lookup_;
};

/// Builds a closed, canonically oriented complex.
///
/// Input simplices may be given in any vertex order and need not be closed;
/// all faces are added. Explicit duplicates at the same level (after sorting
/// vertices) raise DuplicateSimplexError listing every offender; repeated
/// vertices inside one simplex raise DegenerateSimplexError. Extra isolated
/// vertices can be passed in `vertices`. When given, `positions` is indexed
/// by the final (ascending) vertex order.
SimplicialComplex build_complex(std::span<const Edge> edges, std::span<const Triangle> triangles,
                                std::span<const Vertex> vertices = {},
                                std::optional<std::vector<Point2>> positions = std::nullopt);

/// Signed incidence matrix B_k for k in {1, 2}: rows are (k-1)-simplices,
/// columns k-simplices. B_1(v, e) is -1 at the smaller endpoint and +1 at the
/// larger; B_2(e, t) is (-1)^p with p the position of the vertex omitted from t.
Eigen::MatrixXi boundary_matrix(const SimplicialComplex& complex, int k);

/// Floating-point B_k for k in [0, 3]; k = 0 gives an empty 0 x |X_0| matrix
/// and k = 3 an empty |X_2| x 0 matrix so products at the ends vanish.
Eigen::MatrixXd boundary_operator(const SimplicialComplex& complex, int k);

/// Lower, upper and full Hodge Laplacians of one level.
struct HodgeOperators {
    int level = 0;
    bool has_lower = false;  // false at k = 0, where B_0 is undefined
    Eigen::MatrixXd lower;   // B_k^T B_k (zero matrix when !has_lower)
    Eigen::MatrixXd upper;   // B_{k+1} B_{k+1}^T
    Eigen::MatrixXd full;    // lower + upper

    Eigen::Index size() const noexcept { return full.rows(); }
};

HodgeOperators hodge_operators(const SimplicialComplex& complex, int k);

/// Assembles the Laplacians of level k from (possibly perturbed) incidence
/// matrices. `b_lower` is |X_{k-1}| x |X_k| (0 rows at k = 0) and `b_upper`
/// is |X_k| x |X_{k+1}|.
HodgeOperators hodge_operators_from_incidence(int k, const Eigen::MatrixXd& b_lower,
                                              const Eigen::MatrixXd& b_upper);

struct HoleDisk {
    Point2 center{};
    double radius = 0.0;
};

/// n i.i.d. uniform points in [0, 1)^2, reproducible per seed.
std::vector<Point2> random_points(std::size_t n, std::uint64_t seed);

/// Delaunay triangles of a point set, vertex ids are point indices.
///
/// Built by a lexicographic sweep followed by Lawson edge flips; co-circular
/// quadrilaterals keep the lexicographically smaller diagonal. Throws
/// TriangulationDegenerateError when fewer than three points are given, points
/// repeat, or all points are collinear.
std::vector<Triangle> delaunay_triangles(std::span<const Point2> points);

/// Delaunay complex with triangles removed wherever their barycenter falls
/// strictly inside a hole disk. Edges and vertices are always kept.
SimplicialComplex delaunay_complex(std::span<const Point2> points, std::span<const HoleDisk> holes = {});

/// Signed in-circle determinant of d against the circumcircle of (a, b, c);
/// positive when d is strictly inside and (a, b, c) is counter-clockwise.
double in_circle(const Point2& a, const Point2& b, const Point2& c, const Point2& d);

/// Incidence matrices with additive Gaussian perturbations.
struct PerturbedComplex {
    Eigen::MatrixXd b1;  // clean B_1
    Eigen::MatrixXd b2;  // clean B_2
    Eigen::MatrixXd e1;
    Eigen::MatrixXd e2;
    double epsilon1 = 0.0;  // ||E_1||_2, measured
    double epsilon2 = 0.0;  // ||E_2||_2, measured
    double snr1_db = 0.0;
    double snr2_db = 0.0;

    Eigen::MatrixXd perturbed_b1() const { return b1 + e1; }
    Eigen::MatrixXd perturbed_b2() const { return b2 + e2; }

    /// Hodge operators of level k rebuilt from the perturbed incidences.
    HodgeOperators operators(int k) const;
    /// Perturbed B_k for k in [0, 3] (empty at the ends, as boundary_operator).
    Eigen::MatrixXd perturbed_boundary(int k) const;
};

/// Draws E_k with i.i.d. N(0, 1) entries and rescales it so that
/// 10 log10(||B_k||_F^2 / ||E_k||_F^2) equals the requested SNR. An infinite
/// SNR yields E_k = 0. E_1 is drawn before E_2 from one generator.
PerturbedComplex perturb_incidence(const SimplicialComplex& complex, double snr1_db, double snr2_db,
                                   std::uint64_t seed);

/// Frobenius SNR in dB of a clean matrix against an additive error.
double measured_snr_db(const Eigen::MatrixXd& clean, const Eigen::MatrixXd& error);

// JSON file format: {"vertices": [...], "edges": [[a,b]...], "triangles": [[a,b,c]...],
// "positions": [[x,y]...] | null}. Loading re-canonicalizes and re-validates.
std::string complex_to_json(const SimplicialComplex& complex);
SimplicialComplex complex_from_json(const std::string& text);
void save_complex(const SimplicialComplex& complex, const std::filesystem::path& path);
SimplicialComplex load_complex(const std::filesystem::path& path);

}  // namespace cosimo

#include "cosimo/complex.hpp"

#include "cosimo/errors.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace cosimo {

namespace {

constexpr double kOrientTol = 1e-14;
constexpr double kCircleTol = 1e-12;

double orient(const Point2& a, const Point2& b, const Point2& c) {
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

using Tri = std::array<int, 3>;

// Triangulates the convex hull by inserting points in lexicographic order and
// fanning each new point to the hull edges it can see.
std::vector<Tri> sweep_triangulation(std::span<const Point2> pts) {
    const int n = static_cast<int>(pts.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return pts[i] < pts[j] || (pts[i] == pts[j] && i < j); });
    for (int i = 1; i < n; ++i)
        if (pts[order[i]] == pts[order[i - 1]])
            throw TriangulationDegenerateError("delaunay: duplicate point at index " + std::to_string(order[i]));

    int m = 2;
    while (m < n && std::abs(orient(pts[order[0]], pts[order[1]], pts[order[m]])) <= kOrientTol) ++m;
    if (m == n) throw TriangulationDegenerateError("delaunay: all points are collinear");

    std::vector<Tri> tris;
    const int apex = order[m];
    for (int i = 0; i + 1 < m; ++i) tris.push_back({order[i], order[i + 1], apex});

    std::vector<int> hull;
    if (orient(pts[order[0]], pts[order[m - 1]], pts[apex]) > 0) {
        for (int i = 0; i < m; ++i) hull.push_back(order[i]);
    } else {
        for (int i = m - 1; i >= 0; --i) hull.push_back(order[i]);
    }
    hull.push_back(apex);

    for (int idx = m + 1; idx < n; ++idx) {
        const int p = order[idx];
        const int h = static_cast<int>(hull.size());
        std::vector<bool> visible(h);
        bool any = false;
        for (int i = 0; i < h; ++i) {
            visible[i] = orient(pts[hull[i]], pts[hull[(i + 1) % h]], pts[p]) < -kOrientTol;
            any = any || visible[i];
        }
        if (!any) throw TriangulationDegenerateError("delaunay: point " + std::to_string(p) + " sees no hull edge");
        int start = 0;
        while (!(visible[start] && !visible[(start + h - 1) % h])) ++start;
        int end = start;
        while (visible[end % h]) {
            tris.push_back({hull[end % h], hull[(end + 1) % h], p});
            ++end;
        }
        std::vector<int> next;
        for (int i = end % h;; i = (i + 1) % h) {
            next.push_back(hull[i]);
            if (i == start) break;
        }
        next.push_back(p);
        hull = std::move(next);
    }
    return tris;
}

std::array<int, 2> sorted_pair(int a, int b) { return a < b ? std::array<int, 2>{a, b} : std::array<int, 2>{b, a}; }

int opposite(const Tri& t, int a, int b) {
    for (int v : t)
        if (v != a && v != b) return v;
    return -1;
}

// Lawson flips until every interior edge is locally Delaunay.
void legalize(std::vector<Tri>& tris, std::span<const Point2> pts) {
    const std::size_t max_flips = 100000;
    std::size_t flips = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        std::map<std::array<int, 2>, std::vector<std::size_t>> adjacency;
        for (std::size_t i = 0; i < tris.size(); ++i) {
            const auto& t = tris[i];
            adjacency[sorted_pair(t[0], t[1])].push_back(i);
            adjacency[sorted_pair(t[0], t[2])].push_back(i);
            adjacency[sorted_pair(t[1], t[2])].push_back(i);
        }
        for (const auto& [edge, owners] : adjacency) {
            if (owners.size() != 2) continue;
            const int a = edge[0];
            const int b = edge[1];
            const int c = opposite(tris[owners[0]], a, b);
            const int d = opposite(tris[owners[1]], a, b);
            const bool ccw = orient(pts[a], pts[b], pts[c]) > 0;
            const double det = ccw ? in_circle(pts[a], pts[b], pts[c], pts[d]) : in_circle(pts[b], pts[a], pts[c], pts[d]);
            bool flip = det > kCircleTol;
            if (!flip && det >= -kCircleTol) {
                // Co-circular: keep the lexicographically smaller diagonal.
                const bool convex = orient(pts[c], pts[d], pts[a]) * orient(pts[c], pts[d], pts[b]) < 0;
                flip = convex && sorted_pair(c, d) < edge;
            }
            if (flip) {
                tris[owners[0]] = {c, d, a};
                tris[owners[1]] = {c, d, b};
                if (++flips > max_flips) throw ConvergenceError("delaunay: edge flipping did not terminate");
                changed = true;
                break;
            }
        }
    }
}

}  // namespace

double in_circle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
    const double adx = a[0] - d[0], ady = a[1] - d[1];
    const double bdx = b[0] - d[0], bdy = b[1] - d[1];
    const double cdx = c[0] - d[0], cdy = c[1] - d[1];
    const double ad = adx * adx + ady * ady;
    const double bd = bdx * bdx + bdy * bdy;
    const double cd = cdx * cdx + cdy * cdy;
    return ad * (bdx * cdy - cdx * bdy) - bd * (adx * cdy - cdx * ady) + cd * (adx * bdy - bdx * ady);
}

std::vector<Triangle> delaunay_triangles(std::span<const Point2> points) {
    if (points.size() < 3) throw TriangulationDegenerateError("delaunay: need at least 3 points");
    auto tris = sweep_triangulation(points);
    legalize(tris, points);
    std::vector<Triangle> out;
    out.reserve(tris.size());
    for (auto t : tris) {
        std::sort(t.begin(), t.end());
        out.push_back(t);
    }
    std::sort(out.begin(), out.end());
    return out;
}

SimplicialComplex delaunay_complex(std::span<const Point2> points, std::span<const HoleDisk> holes) {
    const auto tris = delaunay_triangles(points);
    std::vector<Edge> edges;
    std::vector<Triangle> kept;
    for (const auto& t : tris) {
        edges.push_back({t[0], t[1]});
        edges.push_back({t[0], t[2]});
        edges.push_back({t[1], t[2]});
        const double bx = (points[t[0]][0] + points[t[1]][0] + points[t[2]][0]) / 3.0;
        const double by = (points[t[0]][1] + points[t[1]][1] + points[t[2]][1]) / 3.0;
        const bool in_hole = std::any_of(holes.begin(), holes.end(), [&](const HoleDisk& h) {
            const double dx = bx - h.center[0];
            const double dy = by - h.center[1];
            return dx * dx + dy * dy < h.radius * h.radius;
        });
        if (!in_hole) kept.push_back(t);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    std::vector<Vertex> vertices(points.size());
    std::iota(vertices.begin(), vertices.end(), 0);
    return build_complex(edges, kept, vertices, std::vector<Point2>(points.begin(), points.end()));
}

}  // namespace cosimo

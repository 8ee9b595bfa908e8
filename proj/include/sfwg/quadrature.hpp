#pragma once

// Quadrature on segments, triangles and star-shaped polygons.
//
// Triangles use the collapsed (Duffy) tensor product of Gauss-Legendre rules,
// which has positive weights and reaches any degree. Polygons are fan
// triangulated from the centroid.

#include "sfwg/common.hpp"
#include "sfwg/mesh.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <utility>
#include <numbers>
#include <vector>

namespace sfwg {

struct QuadratureRule {
    std::vector<Point> points;
    std::vector<double> weights;
    int exactness = 0;

    std::size_t size() const noexcept { return weights.size(); }

    double total_weight() const noexcept
    {
        double s = 0.0;
        for (double w : weights)
            s += w;
        return s;
    }
};

struct GaussRule1D {
    std::vector<double> nodes;   // on [-1, 1]
    std::vector<double> weights; // sum to 2
};

namespace detail {

/// Returns (P_n(x), P_n'(x)) by the three-term recurrence.
inline std::pair<double, double> legendre_with_derivative(int n, double x)
{
    double p0 = 1.0;
    double p1 = x;
    for (int m = 2; m <= n; ++m) {
        const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
        p0 = p1;
        p1 = p2;
    }
    return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

} // namespace detail

/// n-point Gauss-Legendre rule on [-1, 1], exact for degree 2n-1.
inline GaussRule1D gauss_legendre(int n)
{
    if (n < 1)
        throw InvalidArgument("Gauss-Legendre rule needs at least one point");
    GaussRule1D rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = detail::legendre_with_derivative(n, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        const double dp = detail::legendre_with_derivative(n, x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo] = -x;
        rule.nodes[hi] = x;
        rule.weights[lo] = w;
        rule.weights[hi] = w;
    }
    if (n % 2 == 1)
        rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

namespace detail {

inline const GaussRule1D& cached_gauss_legendre(int n)
{
    static std::mutex mutex;
    static std::map<int, GaussRule1D> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end())
        it = cache.emplace(n, gauss_legendre(n)).first;
    return it->second;
}

} // namespace detail

/// Points per direction so that a rule of degree `exactness` is exact on a
/// collapsed triangle (the Jacobian adds one degree in the collapsed variable).
inline int collapsed_points(int exactness) noexcept { return (exactness + 3) / 2; }

/// Gauss-Legendre on segment [a, b] with ceil((degree+1)/2) points.
inline QuadratureRule edge_quadrature(const Point& a, const Point& b, int exactness)
{
    if (exactness < 0)
        throw InvalidArgument("negative quadrature degree");
    const int n = exactness / 2 + 1;
    const GaussRule1D& g = detail::cached_gauss_legendre(n);
    const double half = 0.5 * (b - a).norm();
    QuadratureRule rule;
    rule.exactness = exactness;
    rule.points.reserve(static_cast<std::size_t>(n));
    rule.weights.reserve(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double t = 0.5 * (g.nodes[i] + 1.0);
        rule.points.push_back(a + t * (b - a));
        rule.weights.push_back(g.weights[i] * half);
    }
    return rule;
}

/// Appends a rule of the given exactness for triangle (a, b, c) with positive orientation.
inline void append_triangle_rule(QuadratureRule& rule, const Point& a, const Point& b, const Point& c, int exactness)
{
    const int n = collapsed_points(exactness);
    const GaussRule1D& g = detail::cached_gauss_legendre(n);
    const Point e1 = b - a;
    const Point e2 = c - a;
    const double jac = e1.x() * e2.y() - e1.y() * e2.x();
    if (!(jac > 0.0))
        throw GeometryError("fan triangle with non-positive area; cell is not star-shaped about its centroid");
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double u = 0.5 * (g.nodes[i] + 1.0);
        for (std::size_t j = 0; j < g.nodes.size(); ++j) {
            const double v = 0.5 * (g.nodes[j] + 1.0);
            // (u, v) in the unit square -> (xi, eta) = (u(1-v), uv) in the reference triangle.
            const double xi = u * (1.0 - v);
            const double eta = u * v;
            rule.points.push_back(a + xi * e1 + eta * e2);
            rule.weights.push_back(0.25 * g.weights[i] * g.weights[j] * u * jac);
        }
    }
}

/// Fan triangulation from the centroid with a collapsed Gauss rule per triangle.
inline QuadratureRule cell_quadrature(const PolygonalMesh& mesh, Index c, int exactness)
{
    if (exactness < 0)
        throw InvalidArgument("negative quadrature degree");
    const Cell& cell = mesh.cell(c);
    QuadratureRule rule;
    rule.exactness = exactness;
    const std::size_t n = cell.vertices.size();
    const auto per_triangle = static_cast<std::size_t>(collapsed_points(exactness) * collapsed_points(exactness));
    rule.points.reserve(n * per_triangle);
    rule.weights.reserve(n * per_triangle);
    for (std::size_t i = 0; i < n; ++i)
        append_triangle_rule(rule, cell.centroid, mesh.vertex(cell.vertices[i]),
                             mesh.vertex(cell.vertices[(i + 1) % n]), exactness);
    return rule;
}

inline QuadratureRule edge_quadrature(const PolygonalMesh& mesh, Index e, int exactness)
{
    const Edge& edge = mesh.edge(e);
    return edge_quadrature(mesh.vertex(edge.vertices[0]), mesh.vertex(edge.vertices[1]), exactness);
}

} // namespace sfwg

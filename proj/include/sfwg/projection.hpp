#pragma once

// Local L2 projections Q0 (cells), Qb (edges), the vector projection onto
// [P_j(T)]^2, the interpolant Q_h u = {Q0 u, Qb u}, and the commutation check
// between the weak gradient and the vector projection.

#include "sfwg/basis.hpp"
#include "sfwg/common.hpp"
#include "sfwg/weak_gradient.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <functional>

namespace sfwg {

struct SmoothFunction {
    std::function<double(const Point&)> value;
    std::function<Eigen::Vector2d(const Point&)> gradient;
    /// Symmetric Hessian.
    std::function<Eigen::Matrix2d(const Point&)> hessian;
    /// Declared smoothness order (informational).
    int smoothness = 2;
};

/// A vector field on the domain.
using VectorField = std::function<Eigen::Vector2d(const Point&)>;

/// Coefficients of Q0 u on a cell in the P_k prefix of the cell's basis.
inline Vector project_cell(const WgSpace& space, Index c, const std::function<double(const Point&)>& u)
{
    const LocalWeakGradient& op = space.local(c);
    const Index dk = space.cell_block();
    Vector rhs = Vector::Zero(dk);
    for (std::size_t q = 0; q < op.rule.size(); ++q)
        rhs.noalias() += (op.rule.weights[q] * u(op.rule.points[q])) * op.values.row(static_cast<Index>(q)).head(dk).transpose();
    return factor_spd(op.mass.topLeftCorner(dk, dk), "cell P_k mass matrix").solve(rhs);
}

/// Coefficients of Qb u on an edge in the EdgeBasis of that edge.
inline Vector project_edge(const WgSpace& space, Index e, const std::function<double(const Point&)>& u)
{
    const PolygonalMesh& mesh = space.mesh();
    const Edge& edge = mesh.edge(e);
    const Point& a = mesh.vertex(edge.vertices[0]);
    const Point& b = mesh.vertex(edge.vertices[1]);
    const int k = space.degree();
    const EdgeBasis psi(k, a, b);
    const QuadratureRule rule = edge_quadrature(a, b, default_exactness(k, k + 1) + space.options().extra_exactness);
    Matrix mass = Matrix::Zero(psi.size(), psi.size());
    Vector rhs = Vector::Zero(psi.size());
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const Vector v = psi.values(rule.points[q]);
        mass.noalias() += rule.weights[q] * v * v.transpose();
        rhs.noalias() += (rule.weights[q] * u(rule.points[q])) * v;
    }
    return factor_spd(mass, "edge mass matrix").solve(rhs);
}

/// Q_h u = {Q0 u, Qb u}; boundary edges keep their projected values.
inline WeakFunction project_Qh(const WgSpace& space, const std::function<double(const Point&)>& u)
{
    const DofMap& dofs = space.dofs();
    WeakFunction w = WeakFunction::zero(space);
    for (Index c = 0; c < space.num_cells(); ++c)
        w.values.segment(dofs.cell_dof(c), dofs.cell_block()) = project_cell(space, c, u);
    for (Index e = 0; e < space.mesh().num_edges(); ++e)
        w.values.segment(dofs.edge_dof(e), dofs.edge_block()) = project_edge(space, e, u);
    return w;
}

inline WeakFunction project_Qh(const WgSpace& space, const SmoothFunction& u) { return project_Qh(space, u.value); }

/// Coefficients of the L2 projection of g onto [P_j(T)]^2 (x block then y block).
inline Vector project_Qbold(const WgSpace& space, Index c, const VectorField& g)
{
    const LocalWeakGradient& op = space.local(c);
    const Index d = op.dim();
    Vector rhs = Vector::Zero(2 * d);
    for (std::size_t q = 0; q < op.rule.size(); ++q) {
        const Eigen::Vector2d gq = g(op.rule.points[q]);
        const auto phi = op.values.row(static_cast<Index>(q)).transpose();
        rhs.head(d).noalias() += (op.rule.weights[q] * gq.x()) * phi;
        rhs.tail(d).noalias() += (op.rule.weights[q] * gq.y()) * phi;
    }
    const auto llt = factor_spd(op.mass, "weak gradient mass matrix");
    Vector out(2 * d);
    out.head(d) = llt.solve(rhs.head(d));
    out.tail(d) = llt.solve(rhs.tail(d));
    return out;
}

/// Weak gradient of the exact trace pair {u|_T, u|_dT}: the defining relation
/// is evaluated with u itself at the quadrature points, with no projection.
inline Vector weak_gradient_of_trace(const WgSpace& space, Index c, const std::function<double(const Point&)>& u)
{
    const LocalWeakGradient& op = space.local(c);
    const Cell& cell = space.mesh().cell(c);
    const Index d = op.dim();
    Vector rhs = Vector::Zero(2 * d);
    for (std::size_t q = 0; q < op.rule.size(); ++q) {
        const Matrix dphi = op.basis.gradients(op.rule.points[q]);
        const double wu = op.rule.weights[q] * u(op.rule.points[q]);
        rhs.head(d).noalias() -= wu * dphi.col(0);
        rhs.tail(d).noalias() -= wu * dphi.col(1);
    }
    for (std::size_t i = 0; i < cell.num_edges(); ++i) {
        const QuadratureRule& er = op.edge_rules[i];
        const Point& n = cell.normals[i];
        for (std::size_t q = 0; q < er.size(); ++q) {
            const Vector phi = op.basis.values(er.points[q]);
            const double wu = er.weights[q] * u(er.points[q]);
            rhs.head(d).noalias() += (wu * n.x()) * phi;
            rhs.tail(d).noalias() += (wu * n.y()) * phi;
        }
    }
    const auto llt = factor_spd(op.mass, "weak gradient mass matrix");
    Vector out(2 * d);
    out.head(d) = llt.solve(rhs.head(d));
    out.tail(d) = llt.solve(rhs.tail(d));
    return out;
}

/// L2(T) norm of a [P_j(T)]^2 coefficient vector.
inline double vector_poly_norm(const LocalWeakGradient& op, const Vector& coeffs)
{
    const Index d = op.dim();
    return std::sqrt(std::max(0.0, coeffs.head(d).dot(op.mass * coeffs.head(d)) +
                                       coeffs.tail(d).dot(op.mass * coeffs.tail(d))));
}

/// max_T || grad_w {u, u} - Qbold grad u ||_T.
inline double commutation_residual(const WgSpace& space, const SmoothFunction& u)
{
    double worst = 0.0;
    for (Index c = 0; c < space.num_cells(); ++c) {
        const Vector lhs = weak_gradient_of_trace(space, c, u.value);
        const Vector rhs = project_Qbold(space, c, u.gradient);
        worst = std::max(worst, vector_poly_norm(space.local(c), lhs - rhs));
    }
    return worst;
}

} // namespace sfwg

#pragma once

// Assembly of the weak Galerkin nonlinear form
//
//     a_h(w; u, v) = (kappa(|grad_w w|) grad_w u, grad_w v)_{T_h}
//
// with kappa frozen at a given state, the load (f, v0), the optional penalty
// <(1/h)(u0 - ub), v0 - vb> of the stabilized variant, and global sparse
// systems over the free (interior-edge and cell) DOFs.

#include "sfwg/common.hpp"
#include "sfwg/models.hpp"
#include "sfwg/weak_gradient.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace sfwg {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class KappaInterpolation {
    /// Evaluate kappa(|grad_w u|) at each quadrature point.
    pointwise,
    /// L2-project kappa(|grad_w u|) onto discontinuous P_{k-1} per cell.
    projected,
};

enum class PenaltyScale {
    /// 1/h with the global mesh size.
    global_h,
    /// 1/h_T with the cell diameter.
    local_h,
};

struct FormOptions {
    KappaInterpolation interpolation = KappaInterpolation::pointwise;
    /// Set to assemble the stabilized variant.
    std::optional<PenaltyScale> penalty;
};

/// A discrete problem: the space, the coefficient model and the forcing.
struct Problem {
    const WgSpace* space = nullptr;
    KappaModel kappa;
    std::function<double(const Point&)> forcing;

    Problem(const WgSpace& s, KappaModel k, std::function<double(const Point&)> f)
        : space(&s), kappa(std::move(k)), forcing(std::move(f))
    {
    }
};

/// Symmetric matrix and load over the free DOFs.
struct SparseSystem {
    SparseMatrix matrix;
    Vector rhs;
};

/// kappa at the cell quadrature points for the weak gradient of `local_state`.
inline Vector cell_kappa(const WgSpace& space, Index c, const KappaModel& kappa, const Vector& local_state,
                         KappaInterpolation mode)
{
    const LocalWeakGradient& op = space.local(c);
    const Matrix grad = op.at_points(local_state);
    const Index nq = grad.rows();
    Vector k(nq);
    for (Index q = 0; q < nq; ++q)
        k[q] = kappa.value(grad.row(q).norm());
    if (mode == KappaInterpolation::pointwise)
        return k;

    const Index dp = poly_dim(space.degree() - 1);
    const Matrix phi = op.values.leftCols(dp);
    Vector rhs = Vector::Zero(dp);
    for (Index q = 0; q < nq; ++q)
        rhs.noalias() += (op.rule.weights[static_cast<std::size_t>(q)] * k[q]) * phi.row(q).transpose();
    const Vector coeffs = factor_spd(op.mass.topLeftCorner(dp, dp), "P_{k-1} mass matrix").solve(rhs);
    return phi * coeffs;
}

/// G_T^T blockdiag(W, W) G_T with W the weighted P_j mass matrix.
inline Matrix weighted_gradient_matrix(const LocalWeakGradient& op, const Vector& weights_at_points)
{
    const Index d = op.dim();
    Matrix scaled = op.values;
    for (Index q = 0; q < scaled.rows(); ++q)
        scaled.row(q) *= op.rule.weights[static_cast<std::size_t>(q)] * weights_at_points[q];
    const Matrix w = op.values.transpose() * scaled;
    const auto gx = op.gradient.topRows(d);
    const auto gy = op.gradient.bottomRows(d);
    return gx.transpose() * w * gx + gy.transpose() * w * gy;
}

/// Penalty block sum_e factor * int_e (u0 - ub)(v0 - vb) in local DOF numbering.
inline Matrix penalty_matrix(const WgSpace& space, Index c, PenaltyScale scale)
{
    const LocalWeakGradient& op = space.local(c);
    const Cell& cell = space.mesh().cell(c);
    const Index dk = space.cell_block();
    const Index eb = space.dofs().edge_block();
    const double factor = 1.0 / (scale == PenaltyScale::global_h ? space.mesh().mesh_size() : cell.diameter);
    Matrix p = Matrix::Zero(op.num_local_dofs(), op.num_local_dofs());
    for (std::size_t i = 0; i < cell.num_edges(); ++i) {
        const QuadratureRule& er = op.edge_rules[i];
        const Index off = space.edge_offset(i);
        for (std::size_t q = 0; q < er.size(); ++q) {
            Vector jump = Vector::Zero(op.num_local_dofs());
            jump.head(dk) = op.basis.values(er.points[q]).head(dk);
            jump.segment(off, eb) = -op.edge_bases[i].values(er.points[q]);
            p.noalias() += (factor * er.weights[q]) * jump * jump.transpose();
        }
    }
    return p;
}

/// (f, phi_i)_T for the P_k basis of the cell.
inline Vector cell_load(const WgSpace& space, Index c, const std::function<double(const Point&)>& f)
{
    const LocalWeakGradient& op = space.local(c);
    const Index dk = space.cell_block();
    Vector b = Vector::Zero(dk);
    for (std::size_t q = 0; q < op.rule.size(); ++q)
        b.noalias() += (op.rule.weights[q] * f(op.rule.points[q])) * op.values.row(static_cast<Index>(q)).head(dk).transpose();
    return b;
}

/// Per-cell frozen-coefficient matrices and loads (local DOF numbering).
struct LocalSystems {
    std::vector<Matrix> matrices;
    std::vector<Vector> loads;
};

/// Local systems for kappa frozen at `state`. Cells are independent; results
/// are stored per cell so the global reduction order is fixed.
inline LocalSystems local_frozen(const Problem& problem, const WeakFunction& state, const FormOptions& options,
                                 bool with_load = true)
{
    const WgSpace& space = *problem.space;
    const Index nc = space.num_cells();
    LocalSystems out;
    out.matrices.resize(static_cast<std::size_t>(nc));
    out.loads.resize(static_cast<std::size_t>(nc));
#pragma omp parallel for schedule(static)
    for (Index c = 0; c < nc; ++c) {
        const LocalWeakGradient& op = space.local(c);
        const Vector local = space.gather(c, state.values);
        const Vector k = cell_kappa(space, c, problem.kappa, local, options.interpolation);
        Matrix m = weighted_gradient_matrix(op, k);
        if (options.penalty)
            m += penalty_matrix(space, c, *options.penalty);
        out.matrices[static_cast<std::size_t>(c)] = std::move(m);
        Vector b = Vector::Zero(op.num_local_dofs());
        if (with_load)
            b.head(space.cell_block()) = cell_load(space, c, problem.forcing);
        out.loads[static_cast<std::size_t>(c)] = std::move(b);
    }
    return out;
}

/// Scatters local systems into the free-DOF sparse system; boundary rows and
/// columns are dropped (boundary values are zero).
inline SparseSystem assemble_global(const WgSpace& space, const LocalSystems& locals)
{
    const DofMap& dofs = space.dofs();
    std::vector<Eigen::Triplet<double>> triplets;
    Vector rhs = Vector::Zero(dofs.num_free());
    for (Index c = 0; c < space.num_cells(); ++c) {
        const auto idx = space.local_dofs(c);
        const Matrix& m = locals.matrices[static_cast<std::size_t>(c)];
        const Vector& b = locals.loads[static_cast<std::size_t>(c)];
        for (std::size_t a = 0; a < idx.size(); ++a) {
            const Index ra = dofs.free_index(idx[a]);
            if (ra < 0)
                continue;
            rhs[ra] += b[static_cast<Index>(a)];
            for (std::size_t bb = 0; bb < idx.size(); ++bb) {
                const Index cb = dofs.free_index(idx[bb]);
                if (cb >= 0)
                    triplets.emplace_back(ra, cb, m(static_cast<Index>(a), static_cast<Index>(bb)));
            }
        }
    }
    SparseSystem sys;
    sys.matrix.resize(dofs.num_free(), dofs.num_free());
    sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
    sys.rhs = std::move(rhs);
    return sys;
}

/// A(state) and b with kappa frozen at `state`.
inline SparseSystem assemble_frozen(const Problem& problem, const WeakFunction& state, const FormOptions& options = {})
{
    return assemble_global(*problem.space, local_frozen(problem, state, options));
}

/// Traditional weak Galerkin system: the frozen matrix plus the (1/h) penalty.
inline SparseSystem assemble_stabilized(const Problem& problem, const WeakFunction& state,
                                        KappaInterpolation interpolation = KappaInterpolation::pointwise,
                                        PenaltyScale scale = PenaltyScale::global_h)
{
    FormOptions options;
    options.interpolation = interpolation;
    options.penalty = scale;
    return assemble_frozen(problem, state, options);
}

/// Gram matrix of the energy inner product (grad_w u, grad_w v) on the free DOFs.
inline SparseMatrix energy_gram_matrix(const WgSpace& space)
{
    const Problem unit(space, kappa_constant(1.0), [](const Point&) { return 0.0; });
    FormOptions options;
    options.interpolation = KappaInterpolation::pointwise;
    return assemble_global(space, local_frozen(unit, WeakFunction::zero(space), options, false)).matrix;
}

/// r_i = a_h(u; u, phi_i) [+ penalty] - (f, phi_i0) over the free DOFs.
inline Vector residual(const Problem& problem, const WeakFunction& u, const FormOptions& options = {})
{
    const WgSpace& space = *problem.space;
    const DofMap& dofs = space.dofs();
    const LocalSystems locals = local_frozen(problem, u, options);
    Vector r = Vector::Zero(dofs.num_free());
    for (Index c = 0; c < space.num_cells(); ++c) {
        const auto idx = space.local_dofs(c);
        const Vector local = space.gather(c, u.values);
        const Vector rc = locals.matrices[static_cast<std::size_t>(c)] * local - locals.loads[static_cast<std::size_t>(c)];
        for (std::size_t a = 0; a < idx.size(); ++a) {
            const Index fa = dofs.free_index(idx[a]);
            if (fa >= 0)
                r[fa] += rc[static_cast<Index>(a)];
        }
    }
    return r;
}

/// a_h(w; u, v) as a number.
inline double nonlinear_form(const Problem& problem, const WeakFunction& w, const WeakFunction& u,
                             const WeakFunction& v, KappaInterpolation mode = KappaInterpolation::pointwise)
{
    const WgSpace& space = *problem.space;
    double sum = 0.0;
    for (Index c = 0; c < space.num_cells(); ++c) {
        const LocalWeakGradient& op = space.local(c);
        const Vector k = cell_kappa(space, c, problem.kappa, space.gather(c, w.values), mode);
        const Matrix gu = op.at_points(space.gather(c, u.values));
        const Matrix gv = op.at_points(space.gather(c, v.values));
        for (Index q = 0; q < gu.rows(); ++q)
            sum += op.rule.weights[static_cast<std::size_t>(q)] * k[q] * gu.row(q).dot(gv.row(q));
    }
    return sum;
}

/// a_h(u1; u1, u1 - u2) - a_h(u2; u2, u1 - u2) - alpha |||u1 - u2|||^2.
inline double monotonicity_gap(const Problem& problem, const WeakFunction& u1, const WeakFunction& u2,
                               KappaInterpolation mode = KappaInterpolation::pointwise)
{
    const WeakFunction d{u1.values - u2.values};
    const double e = energy_norm(*problem.space, d);
    return nonlinear_form(problem, u1, u1, d, mode) - nonlinear_form(problem, u2, u2, d, mode) -
           problem.kappa.alpha * e * e;
}

/// beta |||u1 - u2||| |||v||| - |a_h(u1; u1, v) - a_h(u2; u2, v)|.
inline double lipschitz_gap(const Problem& problem, const WeakFunction& u1, const WeakFunction& u2,
                            const WeakFunction& v, KappaInterpolation mode = KappaInterpolation::pointwise)
{
    const WeakFunction d{u1.values - u2.values};
    return problem.kappa.beta * energy_norm(*problem.space, d) * energy_norm(*problem.space, v) -
           std::abs(nonlinear_form(problem, u1, u1, v, mode) - nonlinear_form(problem, u2, u2, v, mode));
}

} // namespace sfwg

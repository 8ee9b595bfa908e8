#pragma once

// Discrete weak gradient on polygonal cells and the weak Galerkin space it acts on.
//
// For v = {v0, vb} with v0 in P_k(T) and vb|e in P_k(e), the weak gradient is
// the unique g in [P_j(T)]^2 with
//
//     (g, tau)_T = -(v0, div tau)_T + <vb, tau . n>_{dT}   for all tau in [P_j(T)]^2.
//
// Each cell stores G_T = M_T^{-1} B_T mapping local DOFs to the coefficients
// of g (x-components first) in the scaled monomial basis of P_j(T).

#include "sfwg/basis.hpp"
#include "sfwg/common.hpp"
#include "sfwg/mesh.hpp"
#include "sfwg/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace sfwg {

/// Choice of the weak gradient degree j relative to k and the cell's edge count n.
struct GradientDegree {
    enum class Kind { k_plus_1, k_plus_2, n_plus_k_minus_1, fixed };
    Kind kind = Kind::k_plus_1;
    int fixed_degree = 0;

    static GradientDegree k_plus(int offset)
    {
        if (offset == 1)
            return {Kind::k_plus_1, 0};
        if (offset == 2)
            return {Kind::k_plus_2, 0};
        throw InvalidArgument("only k+1 and k+2 presets exist");
    }
    static GradientDegree n_plus_k_minus_1() { return {Kind::n_plus_k_minus_1, 0}; }
    static GradientDegree exactly(int j) { return {Kind::fixed, j}; }

    int degree(int k, std::size_t n_edges) const
    {
        switch (kind) {
        case Kind::k_plus_1: return k + 1;
        case Kind::k_plus_2: return k + 2;
        case Kind::n_plus_k_minus_1: return static_cast<int>(n_edges) + k - 1;
        case Kind::fixed: return fixed_degree;
        }
        return k + 1;
    }

    std::string label() const
    {
        switch (kind) {
        case Kind::k_plus_1: return "k+1";
        case Kind::k_plus_2: return "k+2";
        case Kind::n_plus_k_minus_1: return "n+k-1";
        case Kind::fixed: return std::to_string(fixed_degree);
        }
        return "?";
    }

    /// Parses "k+1", "k+2", "n+k-1" or a plain integer.
    static GradientDegree parse(const std::string& text)
    {
        if (text == "k+1")
            return k_plus(1);
        if (text == "k+2")
            return k_plus(2);
        if (text == "n+k-1")
            return n_plus_k_minus_1();
        try {
            std::size_t used = 0;
            const int j = std::stoi(text, &used);
            if (used == text.size())
                return exactly(j);
        } catch (const std::exception&) {
        }
        throw InvalidArgument("unrecognised weak gradient degree '" + text + "'");
    }
};

/// Default cell/edge rule exactness: 2j + max(k-1, 0) + 1.
inline int default_exactness(int k, int j) { return 2 * j + std::max(k - 1, 0) + 1; }

/// Global numbering: all cell-interior blocks first, then all edge blocks.
class DofMap {
public:
    DofMap() = default;

    DofMap(const PolygonalMesh& mesh, int k)
        : k_(k), cell_block_(poly_dim(k)), edge_block_(k + 1), num_cells_(mesh.num_cells()),
          num_edges_(mesh.num_edges())
    {
        const Index total = num_dofs();
        free_index_.assign(static_cast<std::size_t>(total), -1);
        Index next = 0;
        for (Index i = 0; i < num_cells_ * cell_block_; ++i)
            free_index_[static_cast<std::size_t>(i)] = next++;
        for (Index e = 0; e < num_edges_; ++e) {
            if (mesh.edge(e).is_boundary())
                continue;
            for (Index i = 0; i < edge_block_; ++i)
                free_index_[static_cast<std::size_t>(edge_dof(e) + i)] = next++;
        }
        num_free_ = next;
        free_to_global_.resize(static_cast<std::size_t>(num_free_));
        for (Index g = 0; g < total; ++g)
            if (free_index_[static_cast<std::size_t>(g)] >= 0)
                free_to_global_[static_cast<std::size_t>(free_index_[static_cast<std::size_t>(g)])] = g;
    }

    int degree() const noexcept { return k_; }
    Index cell_block() const noexcept { return cell_block_; }
    Index edge_block() const noexcept { return edge_block_; }
    Index num_dofs() const noexcept { return num_cells_ * cell_block_ + num_edges_ * edge_block_; }
    Index num_free() const noexcept { return num_free_; }

    Index cell_dof(Index c) const noexcept { return c * cell_block_; }
    Index edge_dof(Index e) const noexcept { return num_cells_ * cell_block_ + e * edge_block_; }

    /// -1 for DOFs on boundary edges.
    Index free_index(Index global) const { return free_index_[static_cast<std::size_t>(global)]; }
    Index global_index(Index free) const { return free_to_global_[static_cast<std::size_t>(free)]; }

    /// Global indices of a cell's local DOFs: interior block then one block per local edge.
    std::vector<Index> local_dofs(const Cell& cell, Index c) const
    {
        std::vector<Index> dofs;
        dofs.reserve(static_cast<std::size_t>(cell_block_ + edge_block_ * static_cast<Index>(cell.num_edges())));
        for (Index i = 0; i < cell_block_; ++i)
            dofs.push_back(cell_dof(c) + i);
        for (Index e : cell.edges)
            for (Index i = 0; i < edge_block_; ++i)
                dofs.push_back(edge_dof(e) + i);
        return dofs;
    }

private:
    int k_ = 1;
    Index cell_block_ = 0;
    Index edge_block_ = 0;
    Index num_cells_ = 0;
    Index num_edges_ = 0;
    Index num_free_ = 0;
    std::vector<Index> free_index_;
    std::vector<Index> free_to_global_;
};

/// Per-cell weak gradient operator and the tables needed to evaluate it.
struct LocalWeakGradient {
    int j = 0;
    CellBasis basis;           // P_j(T); its first dim P_k functions span P_k(T)
    QuadratureRule rule;       // cell rule
    Matrix values;             // rule.size() x dim P_j basis values
    Matrix mass;               // scalar P_j mass matrix
    Matrix rhs;                // B_T, (2 dim P_j) x local DOFs
    Matrix gradient;           // G_T = blockdiag(mass)^{-1} B_T
    std::vector<EdgeBasis> edge_bases;
    std::vector<QuadratureRule> edge_rules;

    Index dim() const noexcept { return basis.size(); }
    Index num_local_dofs() const noexcept { return gradient.cols(); }

    /// Weak gradient coefficients (x block then y block) of a local DOF vector.
    Vector apply(const Vector& local) const { return gradient * local; }

    /// Weak gradient at the cell quadrature points, one row per point.
    Matrix at_points(const Vector& local) const
    {
        const Vector g = apply(local);
        Matrix out(values.rows(), 2);
        out.col(0) = values * g.head(dim());
        out.col(1) = values * g.tail(dim());
        return out;
    }
};

struct SpaceOptions {
    GradientDegree gradient_degree = GradientDegree::k_plus(1);
    /// Orthonormalize each cell's P_j basis against its mass matrix.
    bool orthonormalize = false;
    /// Quadrature exactness added on top of the default.
    int extra_exactness = 0;
};

/// V_h over a mesh together with the per-cell weak gradient operators.
class WgSpace {
public:
    WgSpace(PolygonalMesh mesh, int k, SpaceOptions options = {})
        : mesh_(std::move(mesh)), k_(k), options_(options), dofs_(mesh_, k)
    {
        if (k < 1)
            throw InvalidArgument("polynomial degree k must be >= 1");
        locals_.reserve(static_cast<std::size_t>(mesh_.num_cells()));
        for (Index c = 0; c < mesh_.num_cells(); ++c)
            locals_.push_back(build_local(c));
    }

    const PolygonalMesh& mesh() const noexcept { return mesh_; }
    int degree() const noexcept { return k_; }
    const SpaceOptions& options() const noexcept { return options_; }
    const DofMap& dofs() const noexcept { return dofs_; }
    const LocalWeakGradient& local(Index c) const { return locals_[static_cast<std::size_t>(c)]; }
    Index num_cells() const noexcept { return mesh_.num_cells(); }
    Index cell_block() const noexcept { return dofs_.cell_block(); }

    std::vector<Index> local_dofs(Index c) const { return dofs_.local_dofs(mesh_.cell(c), c); }

    Vector gather(Index c, const Vector& global) const
    {
        const auto idx = local_dofs(c);
        Vector local(static_cast<Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i)
            local[static_cast<Index>(i)] = global[idx[i]];
        return local;
    }

    Vector restrict_to_free(const Vector& global) const
    {
        Vector free(dofs_.num_free());
        for (Index i = 0; i < dofs_.num_free(); ++i)
            free[i] = global[dofs_.global_index(i)];
        return free;
    }

    /// Embeds a free-DOF vector; boundary DOFs are set to zero.
    Vector extend_from_free(const Vector& free) const
    {
        Vector global = Vector::Zero(dofs_.num_dofs());
        for (Index i = 0; i < dofs_.num_free(); ++i)
            global[dofs_.global_index(i)] = free[i];
        return global;
    }

    /// Local DOF offset of local edge `i` in cell `c`.
    Index edge_offset(std::size_t i) const noexcept
    {
        return dofs_.cell_block() + static_cast<Index>(i) * dofs_.edge_block();
    }

private:
    LocalWeakGradient build_local(Index c) const
    {
        const Cell& cell = mesh_.cell(c);
        LocalWeakGradient op;
        op.j = options_.gradient_degree.degree(k_, cell.num_edges());
        if (op.j <= k_)
            throw InvalidArgument("weak gradient degree j must exceed k");
        const int exactness = default_exactness(k_, op.j) + options_.extra_exactness;
        op.rule = cell_quadrature(mesh_, c, exactness);
        op.basis = CellBasis(op.j, cell.centroid, cell.diameter);
        if (options_.orthonormalize)
            op.basis.orthonormalize(op.rule);

        const Index dj = op.basis.size();
        const Index dk = dofs_.cell_block();
        const Index nloc = dk + static_cast<Index>(cell.num_edges()) * dofs_.edge_block();

        op.values.resize(static_cast<Index>(op.rule.size()), dj);
        op.mass = Matrix::Zero(dj, dj);
        op.rhs = Matrix::Zero(2 * dj, nloc);
        for (std::size_t q = 0; q < op.rule.size(); ++q) {
            const Point& x = op.rule.points[q];
            const double w = op.rule.weights[q];
            const Vector phi = op.basis.values(x);
            const Matrix dphi = op.basis.gradients(x);
            op.values.row(static_cast<Index>(q)) = phi.transpose();
            op.mass.noalias() += w * phi * phi.transpose();
            // -(v0, div tau): tau = e_x phi_a contributes d/dx phi_a, tau = e_y phi_a contributes d/dy phi_a.
            op.rhs.block(0, 0, dj, dk).noalias() -= w * dphi.col(0) * phi.head(dk).transpose();
            op.rhs.block(dj, 0, dj, dk).noalias() -= w * dphi.col(1) * phi.head(dk).transpose();
        }

        for (std::size_t i = 0; i < cell.num_edges(); ++i) {
            const Edge& edge = mesh_.edge(cell.edges[i]);
            const Point& a = mesh_.vertex(edge.vertices[0]);
            const Point& b = mesh_.vertex(edge.vertices[1]);
            EdgeBasis psi(k_, a, b);
            QuadratureRule er = edge_quadrature(a, b, exactness);
            const Point& n = cell.normals[i];
            const Index off = edge_offset(i);
            for (std::size_t q = 0; q < er.size(); ++q) {
                const Vector phi = op.basis.values(er.points[q]);
                const Vector vb = psi.values(er.points[q]);
                const double w = er.weights[q];
                op.rhs.block(0, off, dj, vb.size()).noalias() += (w * n.x()) * phi * vb.transpose();
                op.rhs.block(dj, off, dj, vb.size()).noalias() += (w * n.y()) * phi * vb.transpose();
            }
            op.edge_bases.push_back(std::move(psi));
            op.edge_rules.push_back(std::move(er));
        }

        const auto llt = factor_spd(op.mass, "weak gradient mass matrix");
        op.gradient.resize(2 * dj, nloc);
        op.gradient.topRows(dj) = llt.solve(op.rhs.topRows(dj));
        op.gradient.bottomRows(dj) = llt.solve(op.rhs.bottomRows(dj));
        return op;
    }

    PolygonalMesh mesh_;
    int k_ = 1;
    SpaceOptions options_;
    DofMap dofs_;
    std::vector<LocalWeakGradient> locals_;
};

/// Coefficients over all DOFs of a space (interior blocks then edge blocks).
struct WeakFunction {
    Vector values;

    static WeakFunction zero(const WgSpace& space) { return {Vector::Zero(space.dofs().num_dofs())}; }

    /// True when every boundary-edge coefficient vanishes.
    bool in_zero_boundary_space(const WgSpace& space) const
    {
        for (Index g = 0; g < values.size(); ++g)
            if (space.dofs().free_index(g) < 0 && values[g] != 0.0)
                return false;
        return true;
    }
};

/// Random member of V_h^0 with coefficients uniform in [-1, 1].
template <class Rng>
WeakFunction random_weak_function(const WgSpace& space, Rng& rng)
{
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector free(space.dofs().num_free());
    for (Index i = 0; i < free.size(); ++i)
        free[i] = dist(rng);
    return {space.extend_from_free(free)};
}

/// (grad_w v, grad_w v)_T on one cell.
inline double cell_energy_squared(const WgSpace& space, Index c, const Vector& local)
{
    const LocalWeakGradient& op = space.local(c);
    const Vector g = op.apply(local);
    const Index d = op.dim();
    return g.head(d).dot(op.mass * g.head(d)) + g.tail(d).dot(op.mass * g.tail(d));
}

/// |||v||| = (sum_T ||grad_w v||_T^2)^{1/2}.
inline double energy_norm(const WgSpace& space, const WeakFunction& v)
{
    double sum = 0.0;
    for (Index c = 0; c < space.num_cells(); ++c)
        sum += cell_energy_squared(space, c, space.gather(c, v.values));
    return std::sqrt(sum);
}

/// ||v||_{1,h} = (sum_T ||grad v0||_T^2 + h_T^{-1} ||v0 - vb||_{dT}^2)^{1/2}.
inline double discrete_h1_norm(const WgSpace& space, const WeakFunction& v)
{
    const Index dk = space.cell_block();
    double sum = 0.0;
    for (Index c = 0; c < space.num_cells(); ++c) {
        const LocalWeakGradient& op = space.local(c);
        const Cell& cell = space.mesh().cell(c);
        const Vector local = space.gather(c, v.values);
        const Vector v0 = local.head(dk);
        for (std::size_t q = 0; q < op.rule.size(); ++q) {
            const Matrix dphi = op.basis.gradients(op.rule.points[q]);
            const Eigen::Vector2d grad = dphi.topRows(dk).transpose() * v0;
            sum += op.rule.weights[q] * grad.squaredNorm();
        }
        double jump = 0.0;
        for (std::size_t i = 0; i < cell.num_edges(); ++i) {
            const QuadratureRule& er = op.edge_rules[i];
            const Vector vb = local.segment(space.edge_offset(i), space.dofs().edge_block());
            for (std::size_t q = 0; q < er.size(); ++q) {
                const double d = op.basis.values(er.points[q]).head(dk).dot(v0) -
                                 op.edge_bases[i].values(er.points[q]).dot(vb);
                jump += er.weights[q] * d * d;
            }
        }
        sum += jump / cell.diameter;
    }
    return std::sqrt(sum);
}

struct NormRatioRange {
    double min_ratio = std::numeric_limits<double>::infinity();
    double max_ratio = 0.0;
    int samples_used = 0;
};

/// Range of |||v||| / ||v||_{1,h} over random v in V_h^0.
inline NormRatioRange norm_equivalence_probe(const WgSpace& space, int samples, std::uint64_t seed)
{
    if (samples < 1)
        throw InvalidArgument("norm equivalence probe needs at least one sample");
    std::mt19937_64 rng(seed);
    NormRatioRange range;
    for (int s = 0; s < samples; ++s) {
        const WeakFunction v = random_weak_function(space, rng);
        const double h1 = discrete_h1_norm(space, v);
        if (h1 == 0.0)
            continue;
        const double ratio = energy_norm(space, v) / h1;
        range.min_ratio = std::min(range.min_ratio, ratio);
        range.max_ratio = std::max(range.max_ratio, ratio);
        ++range.samples_used;
    }
    return range;
}

/// Local matrix of ||v||_{1,h}^2 restricted to one cell, in local DOF order.
inline Matrix cell_h1_matrix(const WgSpace& space, Index c)
{
    const LocalWeakGradient& op = space.local(c);
    const Cell& cell = space.mesh().cell(c);
    const Index dk = space.cell_block();
    const Index eb = space.dofs().edge_block();
    const Index n = op.num_local_dofs();
    Matrix m = Matrix::Zero(n, n);
    for (std::size_t q = 0; q < op.rule.size(); ++q) {
        const Matrix dphi = op.basis.gradients(op.rule.points[q]).topRows(dk);
        m.topLeftCorner(dk, dk).noalias() += op.rule.weights[q] * dphi * dphi.transpose();
    }
    for (std::size_t i = 0; i < cell.num_edges(); ++i) {
        const QuadratureRule& er = op.edge_rules[i];
        for (std::size_t q = 0; q < er.size(); ++q) {
            Vector jump = Vector::Zero(n);
            jump.head(dk) = op.basis.values(er.points[q]).head(dk);
            jump.segment(space.edge_offset(i), eb) = -op.edge_bases[i].values(er.points[q]);
            m.noalias() += (er.weights[q] / cell.diameter) * jump * jump.transpose();
        }
    }
    return m;
}

/// Local matrix of |||v|||^2 restricted to one cell, in local DOF order.
inline Matrix cell_energy_matrix(const WgSpace& space, Index c)
{
    const LocalWeakGradient& op = space.local(c);
    const Index d = op.dim();
    const auto gx = op.gradient.topRows(d);
    const auto gy = op.gradient.bottomRows(d);
    return gx.transpose() * op.mass * gx + gy.transpose() * op.mass * gy;
}

/// Exact range of |||v||| / ||v||_{1,h} over V_h^0 from the extreme generalized
/// eigenvalues of the two Gram matrices. Dense; intended for small meshes.
inline NormRatioRange norm_equivalence_bounds(const WgSpace& space)
{
    const DofMap& dofs = space.dofs();
    const Index n = dofs.num_free();
    Matrix energy = Matrix::Zero(n, n);
    Matrix h1 = Matrix::Zero(n, n);
    for (Index c = 0; c < space.num_cells(); ++c) {
        const auto idx = space.local_dofs(c);
        const Matrix e = cell_energy_matrix(space, c);
        const Matrix h = cell_h1_matrix(space, c);
        for (std::size_t a = 0; a < idx.size(); ++a) {
            const Index ra = dofs.free_index(idx[a]);
            if (ra < 0)
                continue;
            for (std::size_t b = 0; b < idx.size(); ++b) {
                const Index cb = dofs.free_index(idx[b]);
                if (cb < 0)
                    continue;
                energy(ra, cb) += e(static_cast<Index>(a), static_cast<Index>(b));
                h1(ra, cb) += h(static_cast<Index>(a), static_cast<Index>(b));
            }
        }
    }
    const Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> eig(energy, h1, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success)
        throw SingularSystemError("norm equivalence eigenproblem failed");
    NormRatioRange range;
    range.min_ratio = std::sqrt(std::max(0.0, eig.eigenvalues().minCoeff()));
    range.max_ratio = std::sqrt(eig.eigenvalues().maxCoeff());
    range.samples_used = static_cast<int>(n);
    return range;
}

} // namespace sfwg

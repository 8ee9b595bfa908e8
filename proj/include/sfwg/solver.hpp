#pragma once

// Fixed-point solvers for N(u_h) = f:
//
//  * Kacanov (frozen coefficient, relaxed Picard):
//      u^{n+1} = (1 - theta) u^n + theta A(u^n)^{-1} b
//  * Richardson in the energy inner product:
//      u^{n+1} = u^n - eps G^{-1} r(u^n),  G the kappa = 1 Gram matrix,
//    contractive with factor sqrt(1 - 2 eps alpha + beta^2 eps^2) for eps in (0, 2 alpha / beta^2).

#include "sfwg/assembly.hpp"
#include "sfwg/common.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <chrono>
#include <cmath>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace sfwg {

enum class NonlinearMethod { kacanov, richardson };
enum class LinearSolverKind { cholesky, conjugate_gradient };

struct SolverConfig {
    NonlinearMethod method = NonlinearMethod::kacanov;
    /// Kacanov relaxation in (0, 1].
    double theta = 1.0;
    /// Drop theta to 0.5 after any iteration whose update norm increases.
    bool adaptive_relaxation = true;
    /// Richardson step; non-positive selects alpha / beta^2.
    double eps = 0.0;
    /// Stop when |||u^{n+1} - u^n||| < tol (1 + |||u^{n+1}|||).
    double tol = 1e-10;
    int max_iterations = 200;
    FormOptions form;
    LinearSolverKind linear_solver = LinearSolverKind::cholesky;
    double linear_tol = 1e-12;
    /// Eliminate cell-interior DOFs element by element before the global solve.
    bool static_condensation = false;

    void validate() const
    {
        if (!(tol > 0.0))
            throw InvalidArgument("solver tolerance must be positive");
        if (max_iterations < 1)
            throw InvalidArgument("max iterations must be >= 1");
        if (!(theta > 0.0 && theta <= 1.0))
            throw InvalidArgument("relaxation theta must lie in (0, 1]");
        if (!(linear_tol > 0.0))
            throw InvalidArgument("linear solver tolerance must be positive");
    }
};

struct IterationRecord {
    int iteration = 0;
    double update_norm = 0.0;
    double residual_norm = 0.0;
    double seconds = 0.0;
};

struct SolveResult {
    WeakFunction solution;
    std::vector<IterationRecord> history;
    bool converged = false;
    int iterations = 0;
    std::string message;
};

/// Writes "iteration,update_norm,residual_norm,seconds" rows.
inline void write_history_csv(std::ostream& os, const std::vector<IterationRecord>& history)
{
    std::ostringstream buf;
    buf << "iteration,update_norm,residual_norm,seconds\n" << std::setprecision(10);
    for (const auto& r : history)
        buf << r.iteration << ',' << r.update_norm << ',' << r.residual_norm << ',' << r.seconds << '\n';
    os << buf.str();
}

/// Sparse SPD solver with a reusable symbolic factorization.
class SpdSolver {
public:
    SpdSolver(LinearSolverKind kind, double tolerance) : kind_(kind), tolerance_(tolerance) {}

    void factor(const SparseMatrix& m)
    {
        if (kind_ == LinearSolverKind::cholesky) {
            if (!analyzed_ || m.rows() != rows_) {
                llt_.analyzePattern(m);
                analyzed_ = true;
                rows_ = m.rows();
            }
            llt_.factorize(m);
            if (llt_.info() != Eigen::Success)
                throw SingularSystemError("sparse Cholesky failed: matrix is not positive definite");
        } else {
            cg_.setTolerance(tolerance_);
            cg_.setMaxIterations(std::max<Index>(1000, 10 * m.rows()));
            cg_.compute(m);
        }
    }

    Vector solve(const Vector& b)
    {
        if (kind_ == LinearSolverKind::cholesky)
            return llt_.solve(b);
        Vector x = cg_.solve(b);
        if (cg_.info() != Eigen::Success)
            throw SingularSystemError("conjugate gradient did not converge");
        return x;
    }

private:
    LinearSolverKind kind_;
    double tolerance_;
    bool analyzed_ = false;
    Index rows_ = -1;
    Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg_;
};

/// Solves the free-DOF system given by per-cell local systems, optionally
/// condensing cell-interior DOFs first. Returns the solution over all DOFs.
class LocalSystemSolver {
public:
    LocalSystemSolver(const WgSpace& space, LinearSolverKind kind, double tolerance, bool condense)
        : space_(&space), condense_(condense), solver_(kind, tolerance)
    {
        if (condense_) {
            const DofMap& dofs = space.dofs();
            edge_index_.assign(static_cast<std::size_t>(dofs.num_dofs()), -1);
            Index next = 0;
            for (Index g = dofs.cell_dof(space.num_cells()); g < dofs.num_dofs(); ++g)
                if (dofs.free_index(g) >= 0)
                    edge_index_[static_cast<std::size_t>(g)] = next++;
            num_edge_free_ = next;
        }
    }

    WeakFunction solve(const LocalSystems& locals)
    {
        if (!condense_) {
            const SparseSystem sys = assemble_global(*space_, locals);
            solver_.factor(sys.matrix);
            return {space_->extend_from_free(solver_.solve(sys.rhs))};
        }
        return solve_condensed(locals);
    }

private:
    WeakFunction solve_condensed(const LocalSystems& locals)
    {
        const WgSpace& space = *space_;
        const DofMap& dofs = space.dofs();
        const Index dk = space.cell_block();
        std::vector<Eigen::Triplet<double>> triplets;
        Vector rhs = Vector::Zero(num_edge_free_);
        std::vector<Eigen::LLT<Matrix>> interior(static_cast<std::size_t>(space.num_cells()));
        for (Index c = 0; c < space.num_cells(); ++c) {
            const Matrix& m = locals.matrices[static_cast<std::size_t>(c)];
            const Vector& b = locals.loads[static_cast<std::size_t>(c)];
            const Index nb = m.rows() - dk;
            auto& llt = interior[static_cast<std::size_t>(c)];
            llt.compute(m.topLeftCorner(dk, dk));
            if (llt.info() != Eigen::Success)
                throw SingularSystemError("cell interior block is not positive definite");
            const Matrix kib = llt.solve(m.topRightCorner(dk, nb));
            const Matrix schur = m.bottomRightCorner(nb, nb) - m.bottomLeftCorner(nb, dk) * kib;
            const Vector g = b.tail(nb) - m.bottomLeftCorner(nb, dk) * llt.solve(b.head(dk));
            const auto idx = space.local_dofs(c);
            for (Index a = 0; a < nb; ++a) {
                const Index ra = edge_index_[static_cast<std::size_t>(idx[static_cast<std::size_t>(dk + a)])];
                if (ra < 0)
                    continue;
                rhs[ra] += g[a];
                for (Index bb = 0; bb < nb; ++bb) {
                    const Index cb = edge_index_[static_cast<std::size_t>(idx[static_cast<std::size_t>(dk + bb)])];
                    if (cb >= 0)
                        triplets.emplace_back(ra, cb, schur(a, bb));
                }
            }
        }
        SparseMatrix s(num_edge_free_, num_edge_free_);
        s.setFromTriplets(triplets.begin(), triplets.end());
        Vector ub = Vector::Zero(num_edge_free_);
        if (num_edge_free_ > 0) {
            solver_.factor(s);
            ub = solver_.solve(rhs);
        }

        WeakFunction u = WeakFunction::zero(space);
        for (Index g = 0; g < dofs.num_dofs(); ++g)
            if (edge_index_[static_cast<std::size_t>(g)] >= 0)
                u.values[g] = ub[edge_index_[static_cast<std::size_t>(g)]];
        for (Index c = 0; c < space.num_cells(); ++c) {
            const Matrix& m = locals.matrices[static_cast<std::size_t>(c)];
            const Vector& b = locals.loads[static_cast<std::size_t>(c)];
            const Index nb = m.rows() - dk;
            const Vector local_b = space.gather(c, u.values).tail(nb);
            u.values.segment(dofs.cell_dof(c), dk) =
                interior[static_cast<std::size_t>(c)].solve(b.head(dk) - m.topRightCorner(dk, nb) * local_b);
        }
        return u;
    }

    const WgSpace* space_;
    bool condense_;
    SpdSolver solver_;
    std::vector<Index> edge_index_;
    Index num_edge_free_ = 0;
};

namespace detail {

inline double elapsed(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline double energy_of(const SparseMatrix& gram, const Vector& free)
{
    return std::sqrt(std::max(0.0, free.dot(gram * free)));
}

/// r = A(u) u - b from local systems, over the free DOFs.
inline Vector residual_from_locals(const WgSpace& space, const LocalSystems& locals, const WeakFunction& u)
{
    Vector r = Vector::Zero(space.dofs().num_free());
    for (Index c = 0; c < space.num_cells(); ++c) {
        const auto idx = space.local_dofs(c);
        const Vector rc = locals.matrices[static_cast<std::size_t>(c)] * space.gather(c, u.values) -
                          locals.loads[static_cast<std::size_t>(c)];
        for (std::size_t a = 0; a < idx.size(); ++a) {
            const Index fa = space.dofs().free_index(idx[a]);
            if (fa >= 0)
                r[fa] += rc[static_cast<Index>(a)];
        }
    }
    return r;
}

} // namespace detail

/// Relaxed frozen-coefficient iteration from `initial` (zero when absent).
inline SolveResult solve_kacanov(const Problem& problem, const SolverConfig& config,
                                 std::optional<WeakFunction> initial = std::nullopt)
{
    config.validate();
    const WgSpace& space = *problem.space;
    const auto start = std::chrono::steady_clock::now();
    const SparseMatrix gram = energy_gram_matrix(space);
    LocalSystemSolver linear(space, config.linear_solver, config.linear_tol, config.static_condensation);

    SolveResult result;
    result.solution = initial ? *initial : WeakFunction::zero(space);
    if (!result.solution.in_zero_boundary_space(space))
        throw InvalidArgument("initial guess must vanish on the boundary");
    double theta = config.theta;
    double previous_update = std::numeric_limits<double>::infinity();
    double load_norm = 0.0;

    for (int it = 1; it <= config.max_iterations; ++it) {
        const LocalSystems locals = local_frozen(problem, result.solution, config.form);
        const Vector r = detail::residual_from_locals(space, locals, result.solution);
        if (it == 1) {
            for (const auto& b : locals.loads)
                load_norm += b.squaredNorm();
            load_norm = std::sqrt(load_norm);
        }
        if (it > 1 && r.norm() <= config.tol * std::max(load_norm, 1e-300)) {
            result.converged = true;
            result.message = "residual below tolerance";
            return result;
        }
        const WeakFunction next = linear.solve(locals);
        const Vector step = space.restrict_to_free(next.values) - space.restrict_to_free(result.solution.values);
        result.solution.values += theta * (next.values - result.solution.values);
        const double update = theta * detail::energy_of(gram, step);
        const double norm = detail::energy_of(gram, space.restrict_to_free(result.solution.values));
        result.iterations = it;
        result.history.push_back({it, update, r.norm(), detail::elapsed(start)});
        if (update < config.tol * (1.0 + norm)) {
            result.converged = true;
            result.message = "update below tolerance";
            return result;
        }
        if (config.adaptive_relaxation && update > previous_update && theta > 0.5)
            theta = 0.5;
        previous_update = update;
    }
    result.message = "maximum iterations reached without convergence";
    return result;
}

/// Step size alpha / beta^2 used when the configured step is non-positive.
inline double default_richardson_step(const KappaModel& kappa) { return kappa.alpha / (kappa.beta * kappa.beta); }

/// Contraction factor sqrt(1 - 2 eps alpha + beta^2 eps^2) of the Richardson map.
inline double richardson_contraction_bound(const KappaModel& kappa, double eps)
{
    return std::sqrt(std::max(0.0, 1.0 - 2.0 * eps * kappa.alpha + kappa.beta * kappa.beta * eps * eps));
}

/// Energy-space Richardson iteration from `initial` (zero when absent).
inline SolveResult solve_richardson(const Problem& problem, const SolverConfig& config,
                                    std::optional<WeakFunction> initial = std::nullopt)
{
    config.validate();
    const WgSpace& space = *problem.space;
    const double eps = config.eps > 0.0 ? config.eps : default_richardson_step(problem.kappa);
    const auto start = std::chrono::steady_clock::now();
    const SparseMatrix gram = energy_gram_matrix(space);
    SpdSolver gram_solver(config.linear_solver, config.linear_tol);
    gram_solver.factor(gram);

    SolveResult result;
    result.solution = initial ? *initial : WeakFunction::zero(space);
    if (!result.solution.in_zero_boundary_space(space))
        throw InvalidArgument("initial guess must vanish on the boundary");
    Vector u = space.restrict_to_free(result.solution.values);
    std::vector<double> updates;

    for (int it = 1; it <= config.max_iterations; ++it) {
        const Vector r = residual(problem, result.solution, config.form);
        const Vector step = eps * gram_solver.solve(r);
        u -= step;
        result.solution.values = space.extend_from_free(u);
        const double update = detail::energy_of(gram, step);
        result.iterations = it;
        result.history.push_back({it, update, r.norm(), detail::elapsed(start)});
        updates.push_back(update);
        if (update < config.tol * (1.0 + detail::energy_of(gram, u))) {
            result.converged = true;
            result.message = "update below tolerance";
            return result;
        }
        if (updates.size() > 10 && update > 5.0 * updates[updates.size() - 11]) {
            result.message = "diverging: update norm grew 5x over 10 iterations; step eps is likely too large";
            return result;
        }
    }
    result.message = "maximum iterations reached without convergence";
    return result;
}

inline SolveResult solve(const Problem& problem, const SolverConfig& config,
                         std::optional<WeakFunction> initial = std::nullopt)
{
    return config.method == NonlinearMethod::kacanov ? solve_kacanov(problem, config, std::move(initial))
                                                     : solve_richardson(problem, config, std::move(initial));
}

/// Largest ratio of successive update norms after `skip` initial iterations.
inline double observed_contraction(const std::vector<IterationRecord>& history, std::size_t skip = 1)
{
    double worst = 0.0;
    for (std::size_t i = std::max<std::size_t>(skip, 1); i < history.size(); ++i)
        if (history[i - 1].update_norm > 0.0)
            worst = std::max(worst, history[i].update_norm / history[i - 1].update_norm);
    return worst;
}

} // namespace sfwg

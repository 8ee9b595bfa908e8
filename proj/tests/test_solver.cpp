#include "dense_oracle.hpp"
#include "sfwg/checks.hpp"
#include "sfwg/error_norms.hpp"
#include "sfwg/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace sfwg;

namespace {

WgSpace rect_space(int level, int k, int extra = 0)
{
    SpaceOptions o;
    o.gradient_degree = GradientDegree::k_plus(1);
    o.extra_exactness = extra;
    return WgSpace(make_rect_grid(level), k, o);
}

Matrix dense(const SparseMatrix& m) { return Matrix(m); }

KappaModel kappa_quadratic()
{
    return {"quadratic", [](double s) { return 1.0 + s * s; }, [](double s) { return 2.0 * s; }, 1.0, 1.0};
}

double energy_distance(const WgSpace& s, const WeakFunction& a, const WeakFunction& b)
{
    return energy_norm(s, WeakFunction{a.values - b.values});
}

} // namespace

TEST(Assembly, ConstantKappaMatrixIndependentOfState)
{
    const auto s = rect_space(3, 1);
    const Problem p(s, kappa_constant(1.0), [](const Point&) { return 1.0; });
    std::mt19937_64 rng(1);
    const Matrix a0 = dense(assemble_frozen(p, WeakFunction::zero(s)).matrix);
    const Matrix a1 = dense(assemble_frozen(p, random_weak_function(s, rng)).matrix);
    EXPECT_LT((a0 - a1).norm(), 1e-14 * a0.norm());
    EXPECT_LT((a0 - dense(energy_gram_matrix(s))).norm(), 1e-14 * a0.norm());
}

TEST(Assembly, ExampleOneAtZeroIsTwiceLaplacian)
{
    const auto s = rect_space(3, 2);
    const Problem p(s, kappa_example1(), [](const Point&) { return 0.0; });
    const Matrix a = dense(assemble_frozen(p, WeakFunction::zero(s)).matrix);
    const Matrix g = dense(energy_gram_matrix(s));
    EXPECT_LT((a - 2.0 * g).norm(), 1e-13 * a.norm());
}

TEST(Assembly, FrozenMatrixSymmetricPositiveDefinite)
{
    for (bool qph : {false, true}) {
        SpaceOptions o;
        o.gradient_degree = GradientDegree::k_plus(qph ? 2 : 1);
        const WgSpace s(qph ? make_qph_grid(2) : make_rect_grid(3), 2, o);
        const Problem p(s, kappa_example2(), [](const Point&) { return 1.0; });
        std::mt19937_64 rng(2);
        const Matrix a = dense(assemble_frozen(p, random_weak_function(s, rng)).matrix);
        EXPECT_LT((a - a.transpose()).norm(), 1e-13 * a.norm());
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
        EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
    }
}

TEST(Assembly, ResidualIsLinearForConstantKappa)
{
    const auto s = rect_space(3, 1);
    const Problem p(s, kappa_constant(1.0), [](const Point& x) { return x.x() + 2.0; });
    std::mt19937_64 rng(3);
    const WeakFunction u = random_weak_function(s, rng);
    const SparseSystem sys = assemble_frozen(p, u);
    const Vector expected = sys.matrix * s.restrict_to_free(u.values) - sys.rhs;
    EXPECT_LT((residual(p, u) - expected).norm(), 1e-13 * expected.norm());
}

TEST(Assembly, PenaltyVanishesOnMatchingTraces)
{
    const auto s = rect_space(3, 2);
    std::mt19937_64 rng(4);
    const WeakFunction u = project_Qh(s, random_polynomial(2, rng));
    for (Index c = 0; c < s.num_cells(); ++c) {
        const Vector local = s.gather(c, u.values);
        EXPECT_LT((penalty_matrix(s, c, PenaltyScale::local_h) * local).norm(), 1e-12);
    }
}

TEST(Assembly, PenaltyOfUnitInteriorValue)
{
    // u0 = 1, ub = 0 on the unit square: (1/h) * perimeter.
    const auto s = rect_space(1, 1);
    Vector local = Vector::Zero(s.local(0).num_local_dofs());
    local[0] = 1.0;
    const double v = local.dot(penalty_matrix(s, 0, PenaltyScale::global_h) * local);
    EXPECT_NEAR(v, 4.0 / std::sqrt(2.0), 1e-13);
}

TEST(DenseOracle, FrozenMatrixConstantKappa)
{
    const auto mesh = make_rect_grid(1);
    for (int k = 1; k <= 2; ++k) {
        const auto s = rect_space(1, k);
        const oracle::SingleCell ref(mesh, k, k + 1);
        const Problem p(s, kappa_constant(1.0), [](const Point&) { return 0.0; });
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-1, 1);
        WeakFunction state{Vector::NullaryExpr(s.dofs().num_dofs(), [&] { return u(rng); })};
        const Matrix lib = local_frozen(p, state, {}).matrices[0];
        const Matrix orc = ref.frozen([](double) { return 1.0; }, s.gather(0, state.values));
        EXPECT_LT((lib - orc).norm(), 1e-11 * orc.norm()) << "k=" << k;
    }
}

TEST(DenseOracle, FrozenMatrixPolynomialKappa)
{
    const auto mesh = make_rect_grid(1);
    const auto s = rect_space(1, 1, 4);
    const oracle::SingleCell ref(mesh, 1, 2);
    const Problem p(s, kappa_quadratic(), [](const Point&) { return 0.0; });
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 3; ++t) {
        WeakFunction state{Vector::NullaryExpr(s.dofs().num_dofs(), [&] { return u(rng); })};
        const Matrix lib = local_frozen(p, state, {}).matrices[0];
        const Matrix orc = ref.frozen([](double x) { return 1.0 + x * x; }, s.gather(0, state.values));
        EXPECT_LT((lib - orc).norm(), 1e-11 * orc.norm());
    }
}

TEST(DenseOracle, ResidualAndLoad)
{
    const auto mesh = make_rect_grid(1);
    const auto s = rect_space(1, 2, 4);
    const oracle::SingleCell ref(mesh, 2, 3);
    auto f = [](const Point& x) { return 1.0 + x.x() * x.y() - x.y() * x.y(); };
    const Problem p(s, kappa_quadratic(), f);
    std::mt19937_64 rng(7);
    const WeakFunction u = random_weak_function(s, rng);
    const Vector local = s.gather(0, u.values);
    const Vector orc = ref.frozen([](double x) { return 1.0 + x * x; }, local) * local - ref.load(f);
    // Only the cell DOFs are free on a one-cell mesh.
    const Vector lib = residual(p, u);
    ASSERT_EQ(lib.size(), s.cell_block());
    EXPECT_LT((lib - orc.head(s.cell_block())).norm(), 1e-11 * orc.head(s.cell_block()).norm());
}

TEST(SolverConfig, Validation)
{
    SolverConfig c;
    EXPECT_NO_THROW(c.validate());
    c.tol = 0.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.theta = 1.5;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.max_iterations = 0;
    EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Kacanov, ConstantKappaConvergesInOneSolve)
{
    const auto s = rect_space(3, 1);
    const auto bm = benchmark(1);
    const Problem p(s, kappa_constant(1.0), forcing_from_exact(kappa_constant(1.0), bm.exact));
    const SolveResult r = solve_kacanov(p, {});
    ASSERT_TRUE(r.converged);
    const SparseSystem sys = assemble_frozen(p, WeakFunction::zero(s));
    EXPECT_LT((sys.matrix * s.restrict_to_free(r.solution.values) - sys.rhs).norm(), 1e-10 * sys.rhs.norm());
    EXPECT_LE(r.iterations, 2);
}

TEST(Kacanov, ExampleOneConverges)
{
    const auto s = rect_space(4, 1);
    const auto bm = benchmark(1);
    const Problem p(s, bm.kappa, bm.forcing);
    const SolveResult r = solve_kacanov(p, {});
    ASSERT_TRUE(r.converged) << r.message;
    EXPECT_LE(residual(p, r.solution).norm(), 1e-9);
}

TEST(Kacanov, UpdatesDecreaseOnExampleTwo)
{
    SpaceOptions o;
    o.gradient_degree = GradientDegree::exactly(4);
    const WgSpace s(make_qph_grid(3), 2, o);
    const auto bm = benchmark(2);
    const Problem p(s, bm.kappa, bm.forcing);
    const SolveResult r = solve_kacanov(p, {});
    ASSERT_TRUE(r.converged) << r.message;
    for (std::size_t i = 2; i < r.history.size(); ++i)
        EXPECT_LT(r.history[i].update_norm, r.history[i - 1].update_norm) << "iteration " << i + 1;
}

TEST(Kacanov, RandomInitialGuessesAgree)
{
    const auto s = rect_space(3, 1);
    const auto bm = benchmark(1);
    const Problem p(s, bm.kappa, bm.forcing);
    const WeakFunction ref = solve_kacanov(p, {}).solution;
    std::mt19937_64 rng(8);
    for (int t = 0; t < 5; ++t) {
        const SolveResult r = solve_kacanov(p, {}, random_weak_function(s, rng));
        ASSERT_TRUE(r.converged);
        EXPECT_LT(energy_distance(s, r.solution, ref), 1e-8);
    }
}

TEST(Kacanov, RejectsNonzeroBoundaryGuess)
{
    const auto s = rect_space(2, 1);
    const auto bm = benchmark(1);
    const Problem p(s, bm.kappa, bm.forcing);
    WeakFunction g = WeakFunction::zero(s);
    g.values.setOnes();
    EXPECT_THROW(solve_kacanov(p, {}, g), InvalidArgument);
}

TEST(Kacanov, CondensationAndConjugateGradientAgree)
{
    SpaceOptions o;
    o.gradient_degree = GradientDegree::k_plus(2);
    const WgSpace s(make_qph_grid(2), 2, o);
    const auto bm = benchmark(2);
    const Problem p(s, bm.kappa, bm.forcing);
    const WeakFunction ref = solve_kacanov(p, {}).solution;
    SolverConfig cond;
    cond.static_condensation = true;
    EXPECT_LT(energy_distance(s, solve_kacanov(p, cond).solution, ref), 1e-9);
    SolverConfig cg;
    cg.linear_solver = LinearSolverKind::conjugate_gradient;
    cg.linear_tol = 1e-13;
    EXPECT_LT(energy_distance(s, solve_kacanov(p, cg).solution, ref), 1e-8);
}

TEST(Kacanov, HistoryCsv)
{
    const auto s = rect_space(3, 1);
    const auto bm = benchmark(1);
    const SolveResult r = solve_kacanov(Problem(s, bm.kappa, bm.forcing), {});
    std::ostringstream os;
    write_history_csv(os, r.history);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "iteration,update_norm,residual_norm,seconds");
    int rows = 0;
    while (std::getline(is, line))
        ++rows;
    EXPECT_EQ(rows, r.iterations);
}

TEST(Richardson, UnitStepIsExactForLaplacian)
{
    const auto s = rect_space(3, 1);
    const auto bm = benchmark(1);
    const Problem p(s, kappa_constant(1.0), forcing_from_exact(kappa_constant(1.0), bm.exact));
    SolverConfig c;
    c.method = NonlinearMethod::richardson;
    c.eps = 1.0;
    const SolveResult r = solve_richardson(p, c);
    ASSERT_TRUE(r.converged);
    EXPECT_LE(r.iterations, 2);
    EXPECT_LT(energy_distance(s, r.solution, solve_kacanov(p, {}).solution), 1e-10);
}

TEST(Richardson, BoundValues)
{
    const auto k = kappa_example1();
    const double eps = default_richardson_step(k);
    EXPECT_DOUBLE_EQ(eps, k.alpha / 4.0);
    EXPECT_NEAR(richardson_contraction_bound(k, eps), std::sqrt(1.0 - k.alpha * k.alpha / 4.0), 1e-15);
    EXPECT_DOUBLE_EQ(richardson_contraction_bound(kappa_constant(1.0), 1.0), 0.0);
}

TEST(Richardson, ExampleOneContractionWithinBound)
{
    const auto s = rect_space(4, 1);
    const auto bm = benchmark(1);
    const Problem p(s, bm.kappa, bm.forcing);
    SolverConfig c;
    c.method = NonlinearMethod::richardson;
    c.tol = 1e-8;
    c.max_iterations = 20000;
    const SolveResult r = solve_richardson(p, c);
    ASSERT_TRUE(r.converged) << r.message;
    const double bound = richardson_contraction_bound(bm.kappa, default_richardson_step(bm.kappa));
    EXPECT_LE(observed_contraction(r.history), bound + 0.002);
}

TEST(Richardson, TwiceDefaultStepTerminates)
{
    const auto s = rect_space(3, 1);
    const auto bm = benchmark(2);
    const Problem p(s, bm.kappa, bm.forcing);
    SolverConfig c;
    c.method = NonlinearMethod::richardson;
    c.eps = 2.0 * default_richardson_step(bm.kappa);
    c.tol = 1e-8;
    c.max_iterations = 5000;
    const SolveResult r = solve_richardson(p, c);
    EXPECT_TRUE(r.converged || !r.message.empty());
    EXPECT_LE(r.iterations, c.max_iterations);
}

TEST(Richardson, LargeStepReportsDivergence)
{
    const auto s = rect_space(3, 1);
    const auto bm = benchmark(2);
    const Problem p(s, bm.kappa, bm.forcing);
    SolverConfig c;
    c.method = NonlinearMethod::richardson;
    c.eps = 2.0;
    c.max_iterations = 500;
    const SolveResult r = solve_richardson(p, c);
    EXPECT_FALSE(r.converged);
    EXPECT_NE(r.message.find("diverging"), std::string::npos) << r.message;
}

TEST(Richardson, AgreesWithKacanov)
{
    const auto s = rect_space(3, 2);
    const auto bm = benchmark(1);
    const auto kappa = kappa_smooth();
    const Problem p(s, kappa, forcing_from_exact(kappa, bm.exact));
    SolverConfig c;
    c.method = NonlinearMethod::richardson;
    c.tol = 1e-12;
    c.max_iterations = 2000;
    const SolveResult r = solve_richardson(p, c);
    ASSERT_TRUE(r.converged) << r.message;
    SolverConfig kc;
    kc.tol = 1e-12;
    EXPECT_LT(energy_distance(s, r.solution, solve_kacanov(p, kc).solution), 1e-9);
}

TEST(Stabilized, PenaltyChangesSolutionButConverges)
{
    const auto s = rect_space(3, 1);
    const auto bm = benchmark(1);
    const Problem p(s, bm.kappa, bm.forcing);
    SolverConfig c;
    c.form.penalty = PenaltyScale::global_h;
    const SolveResult stab = solve_kacanov(p, c);
    ASSERT_TRUE(stab.converged);
    const SolveResult free = solve_kacanov(p, {});
    EXPECT_GT(energy_distance(s, stab.solution, free.solution), 1e-8);
    EXPECT_LT(energy_error(s, stab.solution, bm.exact), 0.2);
}

#include "sfwg/checks.hpp"
#include "sfwg/error_norms.hpp"
#include "sfwg/models.hpp"
#include "sfwg/projection.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace sfwg;

namespace {

WgSpace space_for(bool qph, int level, int k)
{
    SpaceOptions o;
    o.gradient_degree = GradientDegree::k_plus(qph ? 2 : 1);
    return WgSpace(qph ? make_qph_grid(level) : make_rect_grid(level), k, o);
}

void expect_fd_consistent(const SmoothFunction& u, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.05, 0.95);
    const double d = 1e-5;
    for (int t = 0; t < 20; ++t) {
        const Point p(dist(rng), dist(rng));
        const Eigen::Vector2d fd((u.value(p + Point(d, 0)) - u.value(p - Point(d, 0))) / (2 * d),
                                 (u.value(p + Point(0, d)) - u.value(p - Point(0, d))) / (2 * d));
        EXPECT_LE((fd - u.gradient(p)).norm(), 1e-5 * std::max(1.0, u.gradient(p).norm()));
        Eigen::Matrix2d hfd;
        hfd.col(0) = (u.gradient(p + Point(d, 0)) - u.gradient(p - Point(d, 0))) / (2 * d);
        hfd.col(1) = (u.gradient(p + Point(0, d)) - u.gradient(p - Point(0, d))) / (2 * d);
        EXPECT_LE((hfd - u.hessian(p)).norm(), 1e-5 * std::max(1.0, u.hessian(p).norm()));
    }
}

} // namespace

TEST(SmoothFunction, BenchmarksMatchFiniteDifferences)
{
    expect_fd_consistent(exact_example1(), 1);
    expect_fd_consistent(exact_example2(), 2);
    std::mt19937_64 rng(3);
    expect_fd_consistent(random_polynomial(4, rng), 4);
}

TEST(ProjectQh, ReproducesPolynomialsOfDegreeK)
{
    std::mt19937_64 rng(9);
    for (bool qph : {false, true})
        for (int k = 1; k <= 3; ++k) {
            const auto s = space_for(qph, 2, k);
            const SmoothFunction p = random_polynomial(k, rng);
            const WeakFunction w = project_Qh(s, p);
            for (Index c = 0; c < s.num_cells(); ++c) {
                const auto& op = s.local(c);
                const Vector local = s.gather(c, w.values);
                for (std::size_t q = 0; q < op.rule.size(); ++q)
                    ASSERT_NEAR(op.values.row(static_cast<Index>(q)).head(s.cell_block()).dot(local.head(s.cell_block())),
                                p.value(op.rule.points[q]), 1e-12);
                for (std::size_t i = 0; i < op.edge_rules.size(); ++i)
                    for (const Point& x : op.edge_rules[i].points)
                        ASSERT_NEAR(op.edge_bases[i].values(x).dot(local.segment(s.edge_offset(i), k + 1)), p.value(x),
                                    1e-12);
            }
        }
}

TEST(ProjectQh, ZeroFunction)
{
    const auto s = space_for(true, 2, 2);
    EXPECT_EQ(project_Qh(s, [](const Point&) { return 0.0; }).values.norm(), 0.0);
}

TEST(ProjectQh, Orthogonality)
{
    // Degree 5 keeps every product below the library rules' exactness.
    std::mt19937_64 rng(21);
    const auto s = space_for(true, 2, 2);
    const SmoothFunction u = random_polynomial(5, rng);
    const WeakFunction w = project_Qh(s, u);
    const Index dk = s.cell_block();
    for (Index c = 0; c < s.num_cells(); ++c) {
        const auto& op = s.local(c);
        const Vector u0 = w.values.segment(s.dofs().cell_dof(c), dk);
        Vector inner = Vector::Zero(dk);
        for (std::size_t q = 0; q < op.rule.size(); ++q) {
            const Vector phi = op.values.row(static_cast<Index>(q)).head(dk).transpose();
            inner += op.rule.weights[q] * (u.value(op.rule.points[q]) - phi.dot(u0)) * phi;
        }
        EXPECT_LT(inner.cwiseAbs().maxCoeff(), 1e-12);
    }
    for (Index e = 0; e < s.mesh().num_edges(); ++e) {
        const Edge& edge = s.mesh().edge(e);
        const Point a = s.mesh().vertex(edge.vertices[0]);
        const Point b = s.mesh().vertex(edge.vertices[1]);
        const EdgeBasis psi(2, a, b);
        const auto er = edge_quadrature(a, b, 12);
        const Vector ub = w.values.segment(s.dofs().edge_dof(e), 3);
        Vector inner = Vector::Zero(3);
        for (std::size_t q = 0; q < er.size(); ++q) {
            const Vector v = psi.values(er.points[q]);
            inner += er.weights[q] * (u.value(er.points[q]) - v.dot(ub)) * v;
        }
        EXPECT_LT(inner.cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(ProjectQbold, ConstantAndPolynomialGradients)
{
    std::mt19937_64 rng(4);
    const auto s = space_for(true, 1, 1);
    for (Index c = 0; c < s.num_cells(); ++c) {
        const auto& op = s.local(c);
        const Vector k = project_Qbold(s, c, [](const Point&) { return Eigen::Vector2d(2.0, -3.0); });
        for (const Point& x : op.rule.points) {
            const Vector phi = op.basis.values(x);
            EXPECT_NEAR(phi.dot(k.head(op.dim())), 2.0, 1e-12);
            EXPECT_NEAR(phi.dot(k.tail(op.dim())), -3.0, 1e-12);
        }
        const SmoothFunction p = random_polynomial(op.j + 1, rng);
        const Vector g = project_Qbold(s, c, p.gradient);
        for (const Point& x : op.rule.points) {
            const Vector phi = op.basis.values(x);
            EXPECT_NEAR(phi.dot(g.head(op.dim())), p.gradient(x).x(), 1e-11);
            EXPECT_NEAR(phi.dot(g.tail(op.dim())), p.gradient(x).y(), 1e-11);
        }
    }
}

TEST(ProjectQbold, SmoothFieldConvergesAtOrderJPlusOne)
{
    const SmoothFunction u = exact_example1();
    std::vector<double> err;
    for (int level = 2; level <= 4; ++level) {
        const auto s = space_for(false, level, 1); // j = 2
        double sum = 0.0;
        for (Index c = 0; c < s.num_cells(); ++c) {
            const auto& op = s.local(c);
            const Vector g = project_Qbold(s, c, u.gradient);
            for (std::size_t q = 0; q < op.rule.size(); ++q) {
                const Vector phi = op.values.row(static_cast<Index>(q)).transpose();
                const Eigen::Vector2d d = u.gradient(op.rule.points[q]) -
                                          Eigen::Vector2d(phi.dot(g.head(op.dim())), phi.dot(g.tail(op.dim())));
                sum += op.rule.weights[q] * d.squaredNorm();
            }
        }
        err.push_back(std::sqrt(sum));
    }
    for (std::size_t i = 1; i < err.size(); ++i)
        EXPECT_GT(std::log2(err[i - 1] / err[i]), 2.8);
}

TEST(Commutation, QuadraticMonomial)
{
    const auto s = space_for(false, 2, 1);
    SmoothFunction u;
    u.value = [](const Point& p) { return p.x() * p.x() * p.y(); };
    u.gradient = [](const Point& p) { return Eigen::Vector2d(2 * p.x() * p.y(), p.x() * p.x()); };
    u.hessian = [](const Point& p) {
        Eigen::Matrix2d h;
        h << 2 * p.y(), 2 * p.x(), 2 * p.x(), 0;
        return h;
    };
    EXPECT_LE(commutation_residual(s, u), 1e-12);
}

TEST(Commutation, Constant)
{
    const auto s = space_for(true, 2, 2);
    SmoothFunction u;
    u.value = [](const Point&) { return 4.2; };
    u.gradient = [](const Point&) { return Eigen::Vector2d::Zero(); };
    u.hessian = [](const Point&) { return Eigen::Matrix2d::Zero(); };
    EXPECT_LE(commutation_residual(s, u), 1e-12);
}

TEST(Commutation, PolynomialsUpToDegreeJPlusOne)
{
    std::mt19937_64 rng(12);
    for (bool qph : {false, true})
        for (int k = 1; k <= 3; ++k) {
            const auto s = space_for(qph, 2, k);
            const int j = k + (qph ? 2 : 1);
            for (int deg = 0; deg <= j + 1; ++deg)
                EXPECT_LE(commutation_residual(s, random_polynomial(deg, rng)), 1e-11)
                    << (qph ? "qph" : "rect") << " k=" << k << " degree " << deg;
        }
}

TEST(Commutation, TranscendentalWithinQuadratureError)
{
    SpaceOptions o;
    o.gradient_degree = GradientDegree::exactly(3);
    const WgSpace s(make_rect_grid(4), 2, o);
    EXPECT_LE(commutation_residual(s, exact_example1()), 1e-9);
}

TEST(Interpolant, EnergyErrorOfProjectionConverges)
{
    const SmoothFunction u = exact_example1();
    std::vector<double> err;
    for (int level = 3; level <= 6; ++level) {
        const auto s = space_for(false, level, 1);
        err.push_back(energy_error(s, project_Qh(s, u), u));
    }
    for (std::size_t i = 1; i < err.size(); ++i) {
        const double rate = std::log2(err[i - 1] / err[i]);
        RecordProperty("rate" + std::to_string(i), std::to_string(rate));
        EXPECT_GE(rate, 1.0 - 0.1);
    }
}

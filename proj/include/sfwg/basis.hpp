#pragma once

// Scaled monomial bases on cells and edges.
//
// Cell functions are ((x - x_T)/h_T)^a ((y - y_T)/h_T)^b ordered by total
// degree, so P_m is a prefix of P_j for m <= j. The optional Gram-Schmidt
// transform is lower triangular and keeps that prefix property.

#include "sfwg/common.hpp"
#include "sfwg/quadrature.hpp"

#include <Eigen/Cholesky>

#include <array>
#include <vector>

namespace sfwg {

class CellBasis {
public:
    CellBasis() = default;

    CellBasis(int degree, Point center, double scale) : degree_(degree), center_(std::move(center)), scale_(scale)
    {
        if (degree < 0)
            throw InvalidArgument("negative basis degree");
        if (!(scale > 0.0))
            throw GeometryError("non-positive basis scale");
        for (int total = 0; total <= degree; ++total)
            for (int b = 0; b <= total; ++b)
                exponents_.push_back({total - b, b});
    }

    int degree() const noexcept { return degree_; }
    Index size() const noexcept { return static_cast<Index>(exponents_.size()); }
    const Point& center() const noexcept { return center_; }
    double scale() const noexcept { return scale_; }
    const std::vector<std::array<int, 2>>& exponents() const noexcept { return exponents_; }
    bool orthonormalized() const noexcept { return transform_.size() > 0; }

    Vector values(const Point& p) const
    {
        const auto [px, py] = powers(p);
        Vector v(size());
        for (Index i = 0; i < size(); ++i) {
            const auto& e = exponents_[static_cast<std::size_t>(i)];
            v[i] = px[e[0]] * py[e[1]];
        }
        return orthonormalized() ? Vector(transform_ * v) : v;
    }

    /// Row i holds the gradient of basis function i.
    Matrix gradients(const Point& p) const
    {
        const auto [px, py] = powers(p);
        Matrix g(size(), 2);
        const double inv = 1.0 / scale_;
        for (Index i = 0; i < size(); ++i) {
            const auto& e = exponents_[static_cast<std::size_t>(i)];
            g(i, 0) = e[0] > 0 ? e[0] * px[e[0] - 1] * py[e[1]] * inv : 0.0;
            g(i, 1) = e[1] > 0 ? e[1] * px[e[0]] * py[e[1] - 1] * inv : 0.0;
        }
        return orthonormalized() ? Matrix(transform_ * g) : g;
    }

    /// Replaces the basis by one orthonormal in the L2(T) inner product of `rule`.
    void orthonormalize(const QuadratureRule& rule)
    {
        transform_.resize(0, 0);
        Matrix mass = Matrix::Zero(size(), size());
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Vector v = values(rule.points[q]);
            mass.noalias() += rule.weights[q] * v * v.transpose();
        }
        Eigen::LLT<Matrix> llt(mass);
        if (llt.info() != Eigen::Success)
            throw SingularSystemError("cell mass matrix is not positive definite");
        const Matrix lower = llt.matrixL();
        transform_ = lower.triangularView<Eigen::Lower>().solve(Matrix::Identity(size(), size()));
    }

private:
    std::pair<std::vector<double>, std::vector<double>> powers(const Point& p) const
    {
        const double sx = (p.x() - center_.x()) / scale_;
        const double sy = (p.y() - center_.y()) / scale_;
        std::vector<double> px(static_cast<std::size_t>(degree_ + 1), 1.0);
        std::vector<double> py(static_cast<std::size_t>(degree_ + 1), 1.0);
        for (int i = 1; i <= degree_; ++i) {
            px[static_cast<std::size_t>(i)] = px[static_cast<std::size_t>(i - 1)] * sx;
            py[static_cast<std::size_t>(i)] = py[static_cast<std::size_t>(i - 1)] * sy;
        }
        return {std::move(px), std::move(py)};
    }

    int degree_ = 0;
    Point center_ = Point::Zero();
    double scale_ = 1.0;
    std::vector<std::array<int, 2>> exponents_;
    Matrix transform_;
};

/// Monomials s^i, i = 0..k, in the coordinate s in [-1, 1] running along the
/// edge's canonical orientation.
class EdgeBasis {
public:
    EdgeBasis() = default;

    EdgeBasis(int degree, const Point& start, const Point& end)
        : degree_(degree), midpoint_(0.5 * (start + end)), direction_((end - start) / (end - start).squaredNorm() * 2.0)
    {
        if (degree < 0)
            throw InvalidArgument("negative basis degree");
    }

    int degree() const noexcept { return degree_; }
    Index size() const noexcept { return degree_ + 1; }

    double coordinate(const Point& p) const { return (p - midpoint_).dot(direction_); }

    Vector values(const Point& p) const
    {
        const double s = coordinate(p);
        Vector v(size());
        v[0] = 1.0;
        for (Index i = 1; i < size(); ++i)
            v[i] = v[i - 1] * s;
        return v;
    }

private:
    int degree_ = 0;
    Point midpoint_ = Point::Zero();
    Point direction_ = Point::Zero();
};

/// Gram matrix of the first `count` basis functions (all when count < 0).
template <class Basis>
Matrix mass_matrix(const Basis& basis, const QuadratureRule& rule, Index count = -1)
{
    const Index n = count < 0 ? basis.size() : count;
    Matrix m = Matrix::Zero(n, n);
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const Vector v = basis.values(rule.points[q]).head(n);
        m.noalias() += rule.weights[q] * v * v.transpose();
    }
    return m;
}

/// Mass matrix of [P_j]^2 with the x-components first: blockdiag(M, M).
inline Matrix vector_mass_matrix(const Matrix& scalar_mass)
{
    const Index n = scalar_mass.rows();
    Matrix m = Matrix::Zero(2 * n, 2 * n);
    m.topLeftCorner(n, n) = scalar_mass;
    m.bottomRightCorner(n, n) = scalar_mass;
    return m;
}

/// Factors an SPD Gram matrix; throws SingularSystemError if it is not.
inline Eigen::LLT<Matrix> factor_spd(const Matrix& m, const char* what)
{
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success)
        throw SingularSystemError(std::string(what) + " is not positive definite");
    return llt;
}

/// 2-norm condition number of a symmetric positive definite matrix.
inline double spd_condition_number(const Matrix& m)
{
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    return ev[ev.size() - 1] / ev[0];
}

} // namespace sfwg

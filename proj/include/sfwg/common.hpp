#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sfwg {

using Point = Eigen::Vector2d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = std::ptrdiff_t;

/// Raised for malformed or degenerate meshes and cells.
class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a local or global linear system cannot be factored.
class SingularSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for invalid user input (study specs, model ids, file contents).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// dim P_m in two variables.
constexpr Index poly_dim(int degree) noexcept
{
    return degree < 0 ? 0 : static_cast<Index>(degree + 1) * (degree + 2) / 2;
}

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rectangle {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 1.0;
    double y1 = 1.0;

    double width() const noexcept { return x1 - x0; }
    double height() const noexcept { return y1 - y0; }
    double area() const noexcept { return width() * height(); }
};

} // namespace sfwg

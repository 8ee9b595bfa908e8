#pragma once

// Diffusion coefficient models kappa(|grad u|), manufactured benchmarks on the
// unit square, and forcing terms built from the chain rule
//
//     f = -[kappa(s) lap u + (kappa'(s)/s) grad u^T H grad u],  s = |grad u|.

#include "sfwg/common.hpp"
#include "sfwg/projection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

namespace sfwg {

struct KappaModel {
    std::string name;
    std::function<double(double)> value;
    std::function<double(double)> derivative;
    /// Bounds with alpha (t - s) <= kappa(t) t - kappa(s) s <= beta (t - s) for 0 <= s <= t.
    double alpha = 1.0;
    double beta = 1.0;

    double operator()(double s) const { return value(s); }

    /// kappa(|xi|) xi.
    Eigen::Vector2d flux(const Eigen::Vector2d& xi) const { return value(xi.norm()) * xi; }
};

/// kappa(s) = 1 + exp(-s^2).
inline KappaModel kappa_example1()
{
    return {"example1", [](double s) { return 1.0 + std::exp(-s * s); },
            [](double s) { return -2.0 * s * std::exp(-s * s); }, 1.0 - std::sqrt(2.0 / std::numbers::e), 2.0};
}

/// kappa(s) = (3 + 2s) / (1 + s).
inline KappaModel kappa_example2()
{
    return {"example2", [](double s) { return (3.0 + 2.0 * s) / (1.0 + s); },
            [](double s) { return -1.0 / ((1.0 + s) * (1.0 + s)); }, 2.0, 3.0};
}

/// kappa = c with alpha = beta = c.
inline KappaModel kappa_constant(double c = 1.0)
{
    return {"constant", [c](double) { return c; }, [](double) { return 0.0; }, c, c};
}

/// kappa(s) = 2 + 1/(1 + s^2); (kappa(s)s)' = 2 + (1 - s^2)/(1 + s^2)^2 lies in [15/8, 3].
inline KappaModel kappa_smooth()
{
    return {"smooth", [](double s) { return 2.0 + 1.0 / (1.0 + s * s); },
            [](double s) { return -2.0 * s / ((1.0 + s * s) * (1.0 + s * s)); }, 15.0 / 8.0, 3.0};
}

inline KappaModel kappa_by_name(const std::string& name)
{
    if (name == "example1")
        return kappa_example1();
    if (name == "example2")
        return kappa_example2();
    if (name == "constant")
        return kappa_constant();
    if (name == "smooth")
        return kappa_smooth();
    throw InvalidArgument("unknown kappa model '" + name + "'");
}

inline std::function<double(const Point&)> forcing_from_exact(const KappaModel& kappa, const SmoothFunction& exact)
{
    return [kappa, exact](const Point& p) {
        const Eigen::Vector2d g = exact.gradient(p);
        const Eigen::Matrix2d h = exact.hessian(p);
        const double s = g.norm();
        double f = kappa.value(s) * h.trace();
        if (s >= 1e-12)
            f += kappa.derivative(s) / s * g.dot(h * g);
        return -f;
    };
}

struct Benchmark {
    int id = 0;
    KappaModel kappa;
    SmoothFunction exact;
    std::function<double(const Point&)> forcing;
    Rectangle domain;
};

/// u = sin(pi x)(y - y^2).
inline SmoothFunction exact_example1()
{
    using std::numbers::pi;
    SmoothFunction u;
    u.value = [](const Point& p) { return std::sin(pi * p.x()) * (p.y() - p.y() * p.y()); };
    u.gradient = [](const Point& p) {
        const double b = p.y() - p.y() * p.y();
        return Eigen::Vector2d(pi * std::cos(pi * p.x()) * b, std::sin(pi * p.x()) * (1.0 - 2.0 * p.y()));
    };
    u.hessian = [](const Point& p) {
        const double sx = std::sin(pi * p.x());
        const double cx = std::cos(pi * p.x());
        const double b = p.y() - p.y() * p.y();
        Eigen::Matrix2d h;
        h << -pi * pi * sx * b, pi * cx * (1.0 - 2.0 * p.y()), pi * cx * (1.0 - 2.0 * p.y()), -2.0 * sx;
        return h;
    };
    u.smoothness = 100;
    return u;
}

/// u = (x - x^2) sin(pi y).
inline SmoothFunction exact_example2()
{
    using std::numbers::pi;
    SmoothFunction u;
    u.value = [](const Point& p) { return (p.x() - p.x() * p.x()) * std::sin(pi * p.y()); };
    u.gradient = [](const Point& p) {
        const double a = p.x() - p.x() * p.x();
        return Eigen::Vector2d((1.0 - 2.0 * p.x()) * std::sin(pi * p.y()), pi * a * std::cos(pi * p.y()));
    };
    u.hessian = [](const Point& p) {
        const double sy = std::sin(pi * p.y());
        const double cy = std::cos(pi * p.y());
        const double a = p.x() - p.x() * p.x();
        Eigen::Matrix2d h;
        h << -2.0 * sy, pi * (1.0 - 2.0 * p.x()) * cy, pi * (1.0 - 2.0 * p.x()) * cy, -pi * pi * a * sy;
        return h;
    };
    u.smoothness = 100;
    return u;
}

inline Benchmark make_benchmark(const KappaModel& kappa, SmoothFunction exact, int id = 0)
{
    Benchmark b;
    b.id = id;
    b.kappa = kappa;
    b.exact = std::move(exact);
    b.forcing = forcing_from_exact(kappa, b.exact);
    return b;
}

inline Benchmark benchmark(int example_id)
{
    switch (example_id) {
    case 1: return make_benchmark(kappa_example1(), exact_example1(), 1);
    case 2: return make_benchmark(kappa_example2(), exact_example2(), 2);
    default: throw InvalidArgument("unknown benchmark id " + std::to_string(example_id));
    }
}

struct AssumptionSweep {
    double worst_lower_slack = 0.0; // min of kappa(t)t - kappa(s)s - alpha(t-s)
    double worst_upper_slack = 0.0; // min of beta(t-s) - (kappa(t)t - kappa(s)s)
    double worst_bound_slack = 0.0; // min over s of min(kappa(s) - alpha, beta - kappa(s))
    bool passed = false;
};

/// Checks the monotonicity bounds on a uniform grid of `points` values in [0, s_max].
inline AssumptionSweep sweep_assumption(const KappaModel& kappa, int points = 2001, double s_max = 100.0,
                                        double tolerance = 1e-12)
{
    AssumptionSweep r;
    r.worst_lower_slack = r.worst_upper_slack = r.worst_bound_slack = std::numeric_limits<double>::infinity();
    std::vector<double> s(static_cast<std::size_t>(points));
    std::vector<double> g(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = s_max * static_cast<double>(i) / static_cast<double>(points - 1);
        g[i] = kappa.value(s[i]) * s[i];
        const double k = kappa.value(s[i]);
        r.worst_bound_slack = std::min({r.worst_bound_slack, k - kappa.alpha, kappa.beta - k});
    }
    for (std::size_t a = 0; a < s.size(); ++a) {
        for (std::size_t b = a + 1; b < s.size(); ++b) {
            const double dt = s[b] - s[a];
            const double dg = g[b] - g[a];
            r.worst_lower_slack = std::min(r.worst_lower_slack, dg - kappa.alpha * dt);
            r.worst_upper_slack = std::min(r.worst_upper_slack, kappa.beta * dt - dg);
        }
    }
    r.passed = r.worst_lower_slack >= -tolerance && r.worst_upper_slack >= -tolerance &&
               r.worst_bound_slack >= -tolerance;
    return r;
}

} // namespace sfwg

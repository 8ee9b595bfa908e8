#pragma once

// Numerical probes of the structural properties the method relies on:
// coefficient bounds, pointwise flux monotonicity and continuity, the same
// bounds for the assembled form, weak gradient commutation and the ratio of
// the energy and discrete H1 norms.

#include "sfwg/assembly.hpp"
#include "sfwg/common.hpp"
#include "sfwg/models.hpp"
#include "sfwg/projection.hpp"
#include "sfwg/study.hpp"
#include "sfwg/weak_gradient.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace sfwg {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct CheckReport {
    std::vector<CheckResult> results;

    bool all_passed() const
    {
        return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
    }
};

inline std::ostream& operator<<(std::ostream& os, const CheckReport& report)
{
    for (const auto& r : report.results)
        os << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    return os;
}

struct CheckOptions {
    int flux_pairs = 100000;
    int form_pairs = 1000;
    int commutation_samples = 3;
    int norm_samples = 50;
    /// Fault injection: overrides beta of every model under test.
    std::optional<double> beta_override;
    /// Fault injection: overrides alpha of every model under test.
    std::optional<double> alpha_override;
};

struct FluxProbe {
    double monotone_slack = std::numeric_limits<double>::infinity();
    double lipschitz_slack = std::numeric_limits<double>::infinity();
};

/// Worst slacks of alpha|xi-eta|^2 <= (F(xi)-F(eta)).(xi-eta) and |F(xi)-F(eta)| <= beta|xi-eta|
/// with F(xi) = kappa(|xi|) xi, over random pairs in [-range, range]^2.
inline FluxProbe probe_flux(const KappaModel& kappa, int pairs, std::uint64_t seed, double range = 10.0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-range, range);
    FluxProbe p;
    for (int i = 0; i < pairs; ++i) {
        const Eigen::Vector2d xi(dist(rng), dist(rng));
        const Eigen::Vector2d eta(dist(rng), dist(rng));
        const Eigen::Vector2d df = kappa.flux(xi) - kappa.flux(eta);
        const Eigen::Vector2d d = xi - eta;
        p.monotone_slack = std::min(p.monotone_slack, df.dot(d) - kappa.alpha * d.squaredNorm());
        p.lipschitz_slack = std::min(p.lipschitz_slack, kappa.beta * d.norm() - df.norm());
    }
    return p;
}

struct FormProbe {
    /// Worst gap divided by max(1, |||u1 - u2|||^2).
    double monotone_slack = std::numeric_limits<double>::infinity();
    /// Worst gap divided by max(1, beta |||u1 - u2||| |||v|||).
    double lipschitz_slack = std::numeric_limits<double>::infinity();
};

/// Scaled monotonicity and Lipschitz gaps of the assembled form over random weak functions.
inline FormProbe probe_form(const WgSpace& space, const KappaModel& kappa, int pairs, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const Problem problem(space, kappa, [](const Point&) { return 0.0; });
    FormProbe p;
    for (int i = 0; i < pairs; ++i) {
        const WeakFunction u1 = random_weak_function(space, rng);
        const WeakFunction u2 = random_weak_function(space, rng);
        const WeakFunction v = random_weak_function(space, rng);
        const double d = energy_norm(space, WeakFunction{u1.values - u2.values});
        p.monotone_slack = std::min(p.monotone_slack, monotonicity_gap(problem, u1, u2) / std::max(1.0, d * d));
        const double scale = kappa.beta * d * energy_norm(space, v);
        p.lipschitz_slack = std::min(p.lipschitz_slack, lipschitz_gap(problem, u1, u2, v) / std::max(1.0, scale));
    }
    return p;
}

/// Random polynomial sum c_ab x^a y^b, a + b <= degree, coefficients in [-1, 1].
template <class Rng>
SmoothFunction random_polynomial(int degree, Rng& rng)
{
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    struct Term {
        int a, b;
        double c;
    };
    std::vector<Term> terms;
    for (int t = 0; t <= degree; ++t)
        for (int b = 0; b <= t; ++b)
            terms.push_back({t - b, b, dist(rng)});
    auto ipow = [](double x, int n) { return n <= 0 ? 1.0 : std::pow(x, n); };
    SmoothFunction f;
    f.value = [terms, ipow](const Point& p) {
        double s = 0.0;
        for (const auto& t : terms)
            s += t.c * ipow(p.x(), t.a) * ipow(p.y(), t.b);
        return s;
    };
    f.gradient = [terms, ipow](const Point& p) {
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        for (const auto& t : terms) {
            if (t.a > 0)
                g.x() += t.c * t.a * ipow(p.x(), t.a - 1) * ipow(p.y(), t.b);
            if (t.b > 0)
                g.y() += t.c * t.b * ipow(p.x(), t.a) * ipow(p.y(), t.b - 1);
        }
        return g;
    };
    f.hessian = [terms, ipow](const Point& p) {
        Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
        for (const auto& t : terms) {
            if (t.a > 1)
                h(0, 0) += t.c * t.a * (t.a - 1) * ipow(p.x(), t.a - 2) * ipow(p.y(), t.b);
            if (t.b > 1)
                h(1, 1) += t.c * t.b * (t.b - 1) * ipow(p.x(), t.a) * ipow(p.y(), t.b - 2);
            if (t.a > 0 && t.b > 0)
                h(0, 1) += t.c * t.a * t.b * ipow(p.x(), t.a - 1) * ipow(p.y(), t.b - 1);
        }
        h(1, 0) = h(0, 1);
        return h;
    };
    f.smoothness = 100;
    return f;
}

namespace detail {

inline std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline KappaModel tampered(KappaModel m, const CheckOptions& o)
{
    if (o.beta_override)
        m.beta = *o.beta_override;
    if (o.alpha_override)
        m.alpha = *o.alpha_override;
    return m;
}

} // namespace detail

/// Runs every probe; deterministic for a given seed.
inline CheckReport run_checks(std::uint64_t seed, const CheckOptions& options = {})
{
    CheckReport report;
    std::vector<KappaModel> models;
    for (const char* name : {"example1", "example2", "smooth", "constant"})
        models.push_back(detail::tampered(kappa_by_name(name), options));

    for (const auto& m : models) {
        const AssumptionSweep s = sweep_assumption(m);
        report.results.push_back({"assumption sweep [" + m.name + "]", s.passed,
                                  "lower " + detail::sci(s.worst_lower_slack) + ", upper " +
                                      detail::sci(s.worst_upper_slack) + ", bounds " +
                                      detail::sci(s.worst_bound_slack)});
    }

    for (std::size_t i = 0; i < models.size(); ++i) {
        const FluxProbe p = probe_flux(models[i], options.flux_pairs, seed + i);
        report.results.push_back({"flux monotonicity [" + models[i].name + "]", p.monotone_slack >= -1e-10,
                                  "worst slack " + detail::sci(p.monotone_slack)});
        report.results.push_back({"flux Lipschitz [" + models[i].name + "]", p.lipschitz_slack >= -1e-10,
                                  "worst slack " + detail::sci(p.lipschitz_slack)});
    }

    struct MeshCase {
        GridFamily grid;
        int level;
    };
    const MeshCase meshes[] = {{GridFamily::rect, 3}, {GridFamily::qph, 2}};
    std::uint64_t stream = 100;
    for (const auto& mc : meshes) {
        for (int k : {1, 2}) {
            SpaceOptions so;
            so.gradient_degree = GradientDegree::k_plus(mc.grid == GridFamily::rect ? 1 : 2);
            const WgSpace space(make_grid(mc.grid, mc.level), k, so);
            const std::string where = to_string(mc.grid) + " level " + std::to_string(mc.level) + ", k=" + std::to_string(k);
            for (const auto& m : models) {
                const FormProbe p = probe_form(space, m, options.form_pairs, seed + stream++);
                report.results.push_back({"form monotonicity [" + m.name + ", " + where + "]",
                                          p.monotone_slack >= -1e-10, "worst scaled slack " + detail::sci(p.monotone_slack)});
                report.results.push_back({"form Lipschitz [" + m.name + ", " + where + "]",
                                          p.lipschitz_slack >= -1e-10, "worst scaled slack " + detail::sci(p.lipschitz_slack)});
            }
        }
    }

    std::mt19937_64 rng(seed + 1000);
    for (GridFamily grid : {GridFamily::rect, GridFamily::qph}) {
        for (int k : {1, 2}) {
            SpaceOptions so;
            so.gradient_degree = GradientDegree::k_plus(grid == GridFamily::rect ? 1 : 2);
            const WgSpace space(make_grid(grid, 2), k, so);
            const int j = so.gradient_degree.degree(k, 4);
            double worst = 0.0;
            for (int s = 0; s < options.commutation_samples; ++s)
                for (int deg = 0; deg <= j + 1; ++deg)
                    worst = std::max(worst, commutation_residual(space, random_polynomial(deg, rng)));
            report.results.push_back({"commutation [" + to_string(grid) + ", k=" + std::to_string(k) + "]",
                                      worst <= 1e-11, "max residual " + detail::sci(worst)});
        }
    }

    for (GridFamily grid : {GridFamily::rect, GridFamily::qph}) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        std::string ranges;
        for (int level = 2; level <= 4; ++level) {
            SpaceOptions so;
            so.gradient_degree = GradientDegree::k_plus(grid == GridFamily::rect ? 1 : 2);
            const WgSpace space(make_grid(grid, level), 1, so);
            const NormRatioRange r = norm_equivalence_probe(space, options.norm_samples, seed + 2000 + level);
            lo = std::min(lo, r.min_ratio);
            hi = std::max(hi, r.max_ratio);
            ranges += (ranges.empty() ? "" : ", ") + ("L" + std::to_string(level) + " [" + detail::sci(r.min_ratio) +
                                                       ", " + detail::sci(r.max_ratio) + "]");
        }
        // Equivalence with h-independent constants: the spread across levels stays bounded.
        const bool ok = lo > 0.0 && std::isfinite(hi) && hi / lo <= 10.0;
        report.results.push_back({"norm equivalence [" + to_string(grid) + "]", ok, ranges});
    }
    return report;
}

} // namespace sfwg

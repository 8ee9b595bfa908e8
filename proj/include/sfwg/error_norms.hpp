#pragma once

#include "sfwg/common.hpp"
#include "sfwg/projection.hpp"
#include "sfwg/weak_gradient.hpp"

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace sfwg {

/// ||u - u0|| summed over cells.
inline double l2_error(const WgSpace& space, const WeakFunction& uh, const SmoothFunction& exact)
{
    const Index dk = space.cell_block();
    double sum = 0.0;
    for (Index c = 0; c < space.num_cells(); ++c) {
        const LocalWeakGradient& op = space.local(c);
        const Vector u0 = uh.values.segment(space.dofs().cell_dof(c), dk);
        for (std::size_t q = 0; q < op.rule.size(); ++q) {
            const double d = exact.value(op.rule.points[q]) - op.values.row(static_cast<Index>(q)).head(dk).dot(u0);
            sum += op.rule.weights[q] * d * d;
        }
    }
    return std::sqrt(sum);
}

enum class EnergyErrorMode {
    /// Compare grad_w u_h with grad u at the quadrature points.
    pointwise_gradient,
    /// Compare with the [P_j]^2 projection of grad u (equal to grad_w u).
    projected_gradient,
    /// |||Q_h u - u_h|||, the discrete error against the interpolant.
    interpolant,
};

/// (sum_T ||grad_w u_h - grad u||_T^2)^{1/2}.
inline double energy_error(const WgSpace& space, const WeakFunction& uh, const SmoothFunction& exact,
                           EnergyErrorMode mode = EnergyErrorMode::pointwise_gradient)
{
    if (mode == EnergyErrorMode::interpolant) {
        WeakFunction diff = project_Qh(space, exact);
        diff.values -= uh.values;
        return energy_norm(space, diff);
    }
    double sum = 0.0;
    for (Index c = 0; c < space.num_cells(); ++c) {
        const LocalWeakGradient& op = space.local(c);
        const Vector local = space.gather(c, uh.values);
        if (mode == EnergyErrorMode::projected_gradient) {
            const double e = vector_poly_norm(op, op.apply(local) - project_Qbold(space, c, exact.gradient));
            sum += e * e;
            continue;
        }
        const Matrix g = op.at_points(local);
        for (std::size_t q = 0; q < op.rule.size(); ++q) {
            const Eigen::Vector2d d = exact.gradient(op.rule.points[q]) - g.row(static_cast<Index>(q)).transpose();
            sum += op.rule.weights[q] * d.squaredNorm();
        }
    }
    return std::sqrt(sum);
}

struct ErrorReport {
    int level = 0;
    Index dofs = 0;
    double l2_error = 0.0;
    double energy_error = 0.0;
    std::optional<double> l2_rate;
    std::optional<double> energy_rate;
    int iterations = 0;
    double seconds = 0.0;
    bool converged = true;
    /// Mesh family label used to reject mixed tables.
    std::string family;
};

/// log2(previous / current).
inline double convergence_rate(double previous, double current) { return std::log2(previous / current); }

/// Fills l2_rate/energy_rate from consecutive rows; the first row has none.
inline void compute_rates(std::vector<ErrorReport>& reports)
{
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (i > 0 && reports[i].family != reports[i - 1].family)
            throw InvalidArgument("rate table mixes mesh families");
        if (i == 0) {
            reports[i].l2_rate.reset();
            reports[i].energy_rate.reset();
            continue;
        }
        reports[i].l2_rate = convergence_rate(reports[i - 1].l2_error, reports[i].l2_error);
        reports[i].energy_rate = convergence_rate(reports[i - 1].energy_error, reports[i].energy_error);
    }
}

enum class TableFormat { csv, markdown };

namespace detail {

inline std::string format_number(const char* fmt, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

inline std::string format_rate(const std::optional<double>& r)
{
    return r ? format_number("%.2f", *r) : std::string();
}

} // namespace detail

/// CSV header: level,dofs,l2_error,l2_rate,energy_error,energy_rate,iters,seconds.
inline std::string rate_table_csv(const std::vector<ErrorReport>& reports, bool include_timing = true)
{
    std::string out = "level,dofs,l2_error,l2_rate,energy_error,energy_rate,iters,seconds\n";
    for (const auto& r : reports) {
        out += std::to_string(r.level) + ',' + std::to_string(r.dofs) + ',' +
               detail::format_number("%.6e", r.l2_error) + ',' + detail::format_rate(r.l2_rate) + ',' +
               detail::format_number("%.6e", r.energy_error) + ',' + detail::format_rate(r.energy_rate) + ',' +
               std::to_string(r.iterations) + ',' + (include_timing ? detail::format_number("%.3f", r.seconds) : "") +
               '\n';
    }
    return out;
}

/// Markdown table in the column order level | L2 error | rate | energy error | rate.
inline std::string rate_table_markdown(const std::vector<ErrorReport>& reports, const std::string& caption = {})
{
    std::string out;
    if (!caption.empty())
        out += "**" + caption + "**\n\n";
    out += "| level | dofs | L2 error | rate | energy error | rate | iters | seconds |\n";
    out += "|---:|---:|---:|---:|---:|---:|---:|---:|\n";
    for (const auto& r : reports) {
        out += "| " + std::to_string(r.level) + " | " + std::to_string(r.dofs) + " | " +
               detail::format_number("%.4E", r.l2_error) + " | " + detail::format_rate(r.l2_rate) + " | " +
               detail::format_number("%.4E", r.energy_error) + " | " + detail::format_rate(r.energy_rate) + " | " +
               std::to_string(r.iterations) + " | " + detail::format_number("%.3f", r.seconds) + " |\n";
    }
    return out;
}

inline std::string rate_table(std::vector<ErrorReport> reports, TableFormat format, const std::string& caption = {})
{
    compute_rates(reports);
    return format == TableFormat::csv ? rate_table_csv(reports) : rate_table_markdown(reports, caption);
}

} // namespace sfwg

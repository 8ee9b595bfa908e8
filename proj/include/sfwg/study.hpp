#pragma once

// Convergence studies: for each level build the grid, solve the nonlinear
// system, measure errors against the manufactured solution and tabulate rates.

#include "sfwg/common.hpp"
#include "sfwg/error_norms.hpp"
#include "sfwg/mesh.hpp"
#include "sfwg/models.hpp"
#include "sfwg/solver.hpp"
#include "sfwg/weak_gradient.hpp"

#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace sfwg {

enum class GridFamily { rect, qph };

inline std::string to_string(GridFamily g) { return g == GridFamily::rect ? "rect" : "qph"; }

inline GridFamily parse_grid_family(const std::string& text)
{
    if (text == "rect")
        return GridFamily::rect;
    if (text == "qph")
        return GridFamily::qph;
    throw InvalidArgument("unknown grid family '" + text + "' (expected rect or qph)");
}

inline PolygonalMesh make_grid(GridFamily family, int level, const Rectangle& domain = {})
{
    return family == GridFamily::rect ? make_rect_grid(level, domain) : make_qph_grid(level, domain);
}

struct StudySpec {
    int example = 1;
    /// Replaces the example's coefficient; the forcing is rebuilt from the same exact solution.
    std::optional<std::string> kappa;
    GridFamily grid = GridFamily::rect;
    int k = 1;
    /// Unset: k+1 on rect grids, k+2 on qph grids.
    std::optional<GradientDegree> j;
    int first_level = 1;
    int last_level = 4;
    SolverConfig solver;
    EnergyErrorMode energy_mode = EnergyErrorMode::pointwise_gradient;
    bool orthonormalize = false;
    std::uint64_t seed = 20240607;
    /// When set, each level's iteration history is written to <prefix><level>.csv.
    std::optional<std::string> history_prefix;

    GradientDegree gradient_degree() const
    {
        if (j)
            return *j;
        return GradientDegree::k_plus(grid == GridFamily::rect ? 1 : 2);
    }

    void validate() const
    {
        if (example != 1 && example != 2)
            throw InvalidArgument("example must be 1 or 2");
        if (first_level < 1 || last_level < first_level)
            throw InvalidArgument("level range must be nonempty and increasing");
        if (k < 1 || k > 4)
            throw InvalidArgument("k must lie in [1, 4]");
        const GradientDegree g = gradient_degree();
        if (g.kind == GradientDegree::Kind::fixed && g.fixed_degree <= k)
            throw InvalidArgument("weak gradient degree j must exceed k");
        if (kappa)
            kappa_by_name(*kappa);
        solver.validate();
    }

    Benchmark problem() const
    {
        Benchmark b = benchmark(example);
        if (kappa)
            b = make_benchmark(kappa_by_name(*kappa), b.exact, example);
        return b;
    }
};

struct StudyResult {
    std::vector<ErrorReport> reports;
    bool all_converged = true;
    double total_seconds = 0.0;
};

/// Solves one level and measures its errors.
inline ErrorReport run_level(const StudySpec& spec, const Benchmark& bm, int level, SolveResult* solve_out = nullptr)
{
    const auto start = std::chrono::steady_clock::now();
    SpaceOptions options;
    options.gradient_degree = spec.gradient_degree();
    options.orthonormalize = spec.orthonormalize;
    const WgSpace space(make_grid(spec.grid, level, bm.domain), spec.k, options);
    const Problem problem(space, bm.kappa, bm.forcing);
    SolveResult solved = solve(problem, spec.solver);

    ErrorReport r;
    r.level = level;
    r.family = to_string(spec.grid);
    r.dofs = space.dofs().num_free();
    r.l2_error = l2_error(space, solved.solution, bm.exact);
    r.energy_error = energy_error(space, solved.solution, bm.exact, spec.energy_mode);
    r.iterations = solved.iterations;
    r.converged = solved.converged;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (spec.history_prefix) {
        std::ofstream os(*spec.history_prefix + std::to_string(level) + ".csv");
        write_history_csv(os, solved.history);
    }
    if (solve_out)
        *solve_out = std::move(solved);
    return r;
}

/// Runs the levels in order; stops after the first level that fails to converge.
inline StudyResult run_study(const StudySpec& spec, std::ostream* log = nullptr)
{
    spec.validate();
    const Benchmark bm = spec.problem();
    StudyResult out;
    for (int level = spec.first_level; level <= spec.last_level; ++level) {
        ErrorReport r = run_level(spec, bm, level);
        out.total_seconds += r.seconds;
        if (log)
            *log << "level " << level << ": dofs " << r.dofs << ", " << r.iterations << " iterations, "
                 << r.seconds << " s wall-clock" << (r.converged ? "" : " (not converged)") << '\n';
        out.reports.push_back(std::move(r));
        if (!out.reports.back().converged) {
            out.all_converged = false;
            break;
        }
    }
    compute_rates(out.reports);
    return out;
}

inline std::string study_caption(const StudySpec& spec)
{
    return "Example " + std::to_string(spec.example) + (spec.kappa ? " (kappa " + *spec.kappa + ")" : "") +
           ", P" + std::to_string(spec.k) + " elements with j = " + spec.gradient_degree().label() + " on " +
           to_string(spec.grid) + " grids";
}

struct ComparisonResult {
    StudyResult stabilizer_free;
    StudyResult stabilized;
};

/// The same study with and without the (1/h) penalty on identical meshes.
inline ComparisonResult run_comparison(const StudySpec& spec, std::ostream* log = nullptr)
{
    StudySpec plain = spec;
    plain.solver.form.penalty.reset();
    StudySpec penalized = spec;
    if (!penalized.solver.form.penalty)
        penalized.solver.form.penalty = PenaltyScale::global_h;
    ComparisonResult out;
    if (log)
        *log << "stabilizer-free WG\n";
    out.stabilizer_free = run_study(plain, log);
    if (log)
        *log << "stabilized WG\n";
    out.stabilized = run_study(penalized, log);
    return out;
}

/// Side-by-side markdown table; the seconds columns are cumulative wall-clock.
inline std::string comparison_table(const ComparisonResult& c, const std::string& caption = {})
{
    std::string out;
    if (!caption.empty())
        out += "**" + caption + "**\n\n";
    out += "| level | SFWG L2 error | rate | SFWG energy error | rate | SFWG seconds "
           "| WG L2 error | rate | WG energy error | rate | WG seconds |\n";
    out += "|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
    const auto& a = c.stabilizer_free.reports;
    const auto& b = c.stabilized.reports;
    double ta = 0.0;
    double tb = 0.0;
    auto half = [](const ErrorReport* r, double cumulative) -> std::string {
        if (!r)
            return " | | | | |";
        return " " + detail::format_number("%.4E", r->l2_error) + " | " + detail::format_rate(r->l2_rate) + " | " +
               detail::format_number("%.4E", r->energy_error) + " | " + detail::format_rate(r->energy_rate) + " | " +
               detail::format_number("%.3f", cumulative) + " |";
    };
    for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
        const ErrorReport* ra = i < a.size() ? &a[i] : nullptr;
        const ErrorReport* rb = i < b.size() ? &b[i] : nullptr;
        if (ra)
            ta += ra->seconds;
        if (rb)
            tb += rb->seconds;
        out += "| " + std::to_string(ra ? ra->level : rb->level) + " |" + half(ra, ta) + half(rb, tb) + '\n';
    }
    out += "\nTotal wall-clock seconds: SFWG " + detail::format_number("%.3f", c.stabilizer_free.total_seconds) +
           ", stabilized WG " + detail::format_number("%.3f", c.stabilized.total_seconds) + '\n';
    return out;
}

} // namespace sfwg

// Command-line driver: convergence studies, the stabilized comparison,
// property checks and mesh export.
//
// Exit codes: 0 success, 1 failed checks, 2 nonlinear non-convergence,
// 3 invalid arguments, 4 any other error.

#include "sfwg/checks.hpp"
#include "sfwg/study.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

namespace {

constexpr int exit_failed_checks = 1;
constexpr int exit_not_converged = 2;
constexpr int exit_invalid = 3;
constexpr int exit_other = 4;

struct StudyArgs {
    int example = 1;
    std::string kappa;
    std::string grid = "rect";
    int k = 1;
    std::string j;
    std::string levels = "1..4";
    std::string method = "kacanov";
    double theta = 1.0;
    double eps = 0.0;
    double tol = 1e-10;
    int max_iterations = 200;
    bool fixed_theta = false;
    bool penalty = false;
    std::string penalty_scale = "global";
    std::string kappa_interp = "pointwise";
    std::string energy_error = "pointwise";
    std::string linear_solver = "cholesky";
    double linear_tol = 1e-12;
    bool condense = false;
    bool orthonormalize = false;
    std::string format = "md";
    std::string out;
    std::string history;
    bool no_timing = false;
    std::uint64_t seed = 20240607;
};

void add_study_options(CLI::App* app, StudyArgs& a)
{
    app->add_option("--example", a.example, "Benchmark id (1 or 2)")->check(CLI::IsMember({1, 2}));
    app->add_option("--kappa", a.kappa, "Coefficient model replacing the example's: example1, example2, smooth, constant");
    app->add_option("--grid", a.grid, "Grid family")->check(CLI::IsMember({"rect", "qph"}));
    app->add_option("--k", a.k, "Polynomial degree of the weak functions");
    app->add_option("--j", a.j, "Weak gradient degree: k+1, k+2, n+k-1 or an integer (default k+1 rect, k+2 qph)");
    app->add_option("--levels", a.levels, "Level range A..B (or a single level)");
    app->add_option("--method", a.method, "Nonlinear iteration")->check(CLI::IsMember({"kacanov", "richardson"}));
    app->add_option("--theta", a.theta, "Kacanov relaxation in (0, 1]");
    app->add_flag("--fixed-theta", a.fixed_theta, "Disable the fallback to theta = 0.5");
    app->add_option("--eps", a.eps, "Richardson step (default alpha / beta^2)");
    app->add_option("--tol", a.tol, "Tolerance on the energy-norm update");
    app->add_option("--max-iter", a.max_iterations, "Maximum nonlinear iterations");
    app->add_flag("--penalty", a.penalty, "Add the (1/h) penalty of the traditional weak Galerkin method");
    app->add_option("--penalty-scale", a.penalty_scale, "Penalty h: global mesh size or local cell diameter")
        ->check(CLI::IsMember({"global", "local"}));
    app->add_option("--kappa-interp", a.kappa_interp, "Coefficient evaluation")->check(CLI::IsMember({"pointwise", "pk-1"}));
    app->add_option("--energy-error", a.energy_error, "Energy error measure")
        ->check(CLI::IsMember({"pointwise", "projected", "interpolant"}));
    app->add_option("--linear-solver", a.linear_solver, "Linear solver")->check(CLI::IsMember({"cholesky", "cg"}));
    app->add_option("--linear-tol", a.linear_tol, "CG tolerance");
    app->add_flag("--condense", a.condense, "Statically condense the cell-interior unknowns");
    app->add_flag("--orthonormalize", a.orthonormalize, "Orthonormalize the local P_j bases");
    app->add_option("--format", a.format, "Table format")->check(CLI::IsMember({"csv", "md"}));
    app->add_option("--out", a.out, "Write the table to this file instead of stdout");
    app->add_option("--history", a.history, "Write per-level iteration histories to <prefix><level>.csv");
    app->add_flag("--no-timing", a.no_timing, "Leave the seconds column empty in CSV output");
    app->add_option("--seed", a.seed, "Random seed");
}

std::pair<int, int> parse_levels(const std::string& text)
{
    const auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            const int l = std::stoi(text);
            return {l, l};
        }
        return {std::stoi(text.substr(0, dots)), std::stoi(text.substr(dots + 2))};
    } catch (const std::exception&) {
        throw sfwg::InvalidArgument("cannot parse level range '" + text + "'");
    }
}

sfwg::StudySpec to_spec(const StudyArgs& a)
{
    sfwg::StudySpec s;
    s.example = a.example;
    if (!a.kappa.empty())
        s.kappa = a.kappa;
    s.grid = sfwg::parse_grid_family(a.grid);
    s.k = a.k;
    if (!a.j.empty())
        s.j = sfwg::GradientDegree::parse(a.j);
    std::tie(s.first_level, s.last_level) = parse_levels(a.levels);
    s.solver.method = a.method == "kacanov" ? sfwg::NonlinearMethod::kacanov : sfwg::NonlinearMethod::richardson;
    s.solver.theta = a.theta;
    s.solver.adaptive_relaxation = !a.fixed_theta;
    s.solver.eps = a.eps;
    s.solver.tol = a.tol;
    s.solver.max_iterations = a.max_iterations;
    s.solver.form.interpolation =
        a.kappa_interp == "pointwise" ? sfwg::KappaInterpolation::pointwise : sfwg::KappaInterpolation::projected;
    if (a.penalty)
        s.solver.form.penalty = a.penalty_scale == "global" ? sfwg::PenaltyScale::global_h : sfwg::PenaltyScale::local_h;
    s.solver.linear_solver =
        a.linear_solver == "cholesky" ? sfwg::LinearSolverKind::cholesky : sfwg::LinearSolverKind::conjugate_gradient;
    s.solver.linear_tol = a.linear_tol;
    s.solver.static_condensation = a.condense;
    static const std::map<std::string, sfwg::EnergyErrorMode> modes{
        {"pointwise", sfwg::EnergyErrorMode::pointwise_gradient},
        {"projected", sfwg::EnergyErrorMode::projected_gradient},
        {"interpolant", sfwg::EnergyErrorMode::interpolant}};
    s.energy_mode = modes.at(a.energy_error);
    s.orthonormalize = a.orthonormalize;
    s.seed = a.seed;
    if (!a.history.empty())
        s.history_prefix = a.history;
    s.validate();
    return s;
}

void emit(const std::string& text, const std::string& path)
{
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw sfwg::InvalidArgument("cannot open '" + path + "' for writing");
    os << text;
}

int run_study_command(const StudyArgs& a)
{
    const sfwg::StudySpec spec = to_spec(a);
    const sfwg::StudyResult result = sfwg::run_study(spec, &std::cerr);
    const std::string table = a.format == "csv" ? sfwg::rate_table_csv(result.reports, !a.no_timing)
                                                : sfwg::rate_table_markdown(result.reports, sfwg::study_caption(spec));
    emit(table, a.out);
    std::cerr << "total wall-clock seconds: " << result.total_seconds << '\n';
    if (!result.all_converged) {
        std::cerr << "nonlinear iteration did not converge at level " << result.reports.back().level << '\n';
        return exit_not_converged;
    }
    return 0;
}

int run_compare_command(const StudyArgs& a)
{
    const sfwg::StudySpec spec = to_spec(a);
    const sfwg::ComparisonResult result = sfwg::run_comparison(spec, &std::cerr);
    std::string text;
    if (a.format == "csv") {
        text = "# stabilizer-free\n" + sfwg::rate_table_csv(result.stabilizer_free.reports, !a.no_timing) +
               "# stabilized\n" + sfwg::rate_table_csv(result.stabilized.reports, !a.no_timing);
    } else {
        text = sfwg::comparison_table(result, sfwg::study_caption(spec) + ": stabilizer-free vs stabilized");
    }
    emit(text, a.out);
    const bool converged = result.stabilizer_free.all_converged && result.stabilized.all_converged;
    return converged ? 0 : exit_not_converged;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stabilizer-free weak Galerkin solver for monotone quasilinear elliptic problems"};
    app.require_subcommand(1);

    StudyArgs study_args;
    auto* study = app.add_subcommand("study", "Convergence study over a range of levels");
    add_study_options(study, study_args);

    StudyArgs compare_args;
    compare_args.levels = "5..7";
    auto* compare = app.add_subcommand("compare", "Stabilizer-free and stabilized methods side by side");
    add_study_options(compare, compare_args);

    std::uint64_t check_seed = 20240607;
    sfwg::CheckOptions check_options;
    double tamper_beta = 0.0;
    auto* checks = app.add_subcommand("checks", "Property probes of the coefficient models and the discrete form");
    checks->add_option("--seed", check_seed, "Random seed");
    checks->add_option("--flux-pairs", check_options.flux_pairs, "Random pairs per model for the pointwise flux probes");
    checks->add_option("--form-pairs", check_options.form_pairs, "Random pairs per model and mesh for the form probes");
    checks->add_option("--tamper-beta", tamper_beta, "Fault injection: replace beta of every model");

    std::string mesh_grid = "rect";
    int mesh_level = 1;
    std::string mesh_out;
    auto* mesh = app.add_subcommand("mesh", "Print statistics of a grid and optionally write it");
    mesh->add_option("--grid", mesh_grid, "Grid family")->check(CLI::IsMember({"rect", "qph"}));
    mesh->add_option("--level", mesh_level, "Refinement level");
    mesh->add_option("--out", mesh_out, "Output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_invalid;
    }

    try {
        if (*study)
            return run_study_command(study_args);
        if (*compare)
            return run_compare_command(compare_args);
        if (*checks) {
            if (tamper_beta > 0.0)
                check_options.beta_override = tamper_beta;
            const sfwg::CheckReport report = sfwg::run_checks(check_seed, check_options);
            std::cout << report;
            return report.all_passed() ? 0 : exit_failed_checks;
        }
        if (*mesh) {
            const sfwg::PolygonalMesh m = sfwg::make_grid(sfwg::parse_grid_family(mesh_grid), mesh_level);
            std::cerr << sfwg::mesh_statistics(m) << '\n';
            if (!mesh_out.empty()) {
                std::ostringstream os;
                sfwg::write_mesh(os, m);
                emit(os.str(), mesh_out);
            }
            return 0;
        }
    } catch (const sfwg::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_invalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_other;
    }
    return 0;
}

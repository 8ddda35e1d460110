// Command-line front end: solve, sweep, verify, diagram, selftest.
// Exit codes: 0 success / checks pass, 1 check failure, 2 configuration error.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tpe/analysis.hpp"
#include "tpe/harness.hpp"
#include "tpe/mesh.hpp"
#include "tpe/solver.hpp"

namespace {

using namespace tpe;

int cmd_solve(const std::string& config_path, const std::string& out_path,
              std::optional<double> p_override, std::optional<double> sigma_override,
              const std::string& variant_override) {
    SweepConfig config = parse_config_file(config_path);
    config.validate();
    const double p = p_override.value_or(config.p_list.back());
    const double sigma = sigma_override.value_or(config.sigma_list.back());
    const Variant variant = variant_override.empty() ? config.variants.front()
                                                     : variant_from_string(variant_override);
    const Mesh mesh = build_mesh(config.nx, config.ny, config.rect);
    const ScalarField data = sample_field(mesh, config.data);
    const SolveReport report =
        solve_dirichlet(mesh, data, params_for(p, sigma, variant), config.solver);
    if (!out_path.empty())
        write_field(out_path, mesh, report.solution);
    std::fprintf(stderr,
                 "solve: p=%g sigma=%g variant=%s energy=%.12g residual=%.3g iters=%d %s\n", p,
                 sigma, to_string(variant).c_str(), report.energy, report.optimality_residual,
                 report.iterations, report.converged ? "converged" : "NOT CONVERGED");
    return report.converged ? 0 : 1;
}

int cmd_sweep(const std::string& config_path, const std::string& csv_path,
              const std::string& json_path, int jobs_override) {
    SweepConfig config = parse_config_file(config_path);
    if (jobs_override > 0) config.jobs = jobs_override;
    const SweepTable table = run_sweep(config);
    if (!csv_path.empty()) export_csv(table, csv_path);
    if (!json_path.empty()) export_json(table, json_path);
    bool all_ok = true;
    for (const auto& c : table.cells) all_ok = all_ok && c.converged;
    std::fprintf(stderr, "sweep: %zu cells, %s\n", table.cells.size(),
                 all_ok ? "all converged" : "some cells NOT converged");
    return all_ok ? 0 : 1;
}

int cmd_verify(const std::string& field_path, const std::string& equation, double tol, double p,
               double sigma) {
    const LoadedField lf = read_field(field_path);
    const Mesh mesh = build_mesh(lf.nx, lf.ny, lf.rect);
    const EquationKind kind = equation_from_string(equation);
    EnergyParams params;
    switch (kind) {
        case EquationKind::jensen_upper_p:
        case EquationKind::jensen_lower_p:
        case EquationKind::jensen_upper_limit:
        case EquationKind::jensen_lower_limit:
            params = sigma > 0.0 ? make_jensen_params(p, sigma, Variant::jensen_upper)
                                 : make_params(p, 0.0, Variant::jensen_upper, 0.0);
            break;
        default:
            params = make_params(p, sigma, Variant::plain, 0.0);
    }
    const ResidualScan scan = residual_scan(mesh, lf.field, kind, params);
    std::fprintf(stderr, "verify: %s max|residual| = %.6g over %d nodes (tol %.3g)\n",
                 equation.c_str(), scan.max_abs, scan.nodes_checked, tol);
    return scan.max_abs <= tol ? 0 : 1;
}

int cmd_diagram(const std::string& config_path, const std::string& out_path, int jobs_override) {
    SweepConfig config = parse_config_file(config_path);
    if (jobs_override > 0) config.jobs = jobs_override;
    const SweepTable table = run_sweep(config);
    const DiagramReport report = diagram_commutation(table);
    std::fprintf(stderr, "diagram: gap = %.6g (tol %.3g) -> %s\n", report.gap, report.tol,
                 report.pass ? "pass" : "FAIL");
    if (!out_path.empty()) export_json(table, out_path);
    return report.pass ? 0 : 1;
}

bool approx(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// Desk-scale checks of the closed-form examples every module documents.
int cmd_selftest() {
    int failures = 0;
    const auto check = [&](const char* name, bool ok) {
        std::fprintf(stderr, "  %-42s %s\n", name, ok ? "ok" : "FAIL");
        if (!ok) ++failures;
    };

    const Mesh unit = build_mesh(2, 2, {0, 0, 1, 1});
    check("mesh: 2x2 counts", unit.vertex_count() == 9 && unit.element_count() == 8);
    const Mesh wide = build_mesh(8, 4, {0, 0, 2, 1});
    double area = 0.0;
    for (double a : wide.element_area) area += a;
    check("mesh: 8x4 area", wide.vertex_count() == 45 && wide.element_count() == 64 &&
                                approx(area, 2.0, 1e-12));

    ScalarField affine(unit.vertex_count());
    for (int i = 0; i < unit.vertex_count(); ++i)
        affine[i] = 3.0 * unit.vertices[i].x - 2.0 * unit.vertices[i].y;
    bool grads_ok = true;
    for (int e = 0; e < unit.element_count(); ++e) {
        const Vec2 g = element_gradient(unit, affine, e);
        grads_ok = grads_ok && approx(g.x, 3.0, 1e-12) && approx(g.y, -2.0, 1e-12);
    }
    check("mesh: affine gradient exact", grads_ok);

    const auto params = make_params(4.0, 1.0);
    const Density d = density({2.0, 0.0}, params);
    check("energy: closed-form density", approx(d.value, 9.0, 1e-12) && approx(d.gradient.x, 24.0, 1e-12));
    check("energy: dead-core density", density({0.5, 0.0}, make_params(8.0, 1.0)).value == 0.0);
    check("energy: phi_ab closed form",
          approx(phi_ab({2, 0}, {0, 0}, params), 12.0, 1e-12) &&
              phi_ab({3, 1}, {3, 1}, params) == 0.0);
    check("energy: convexity gap closed form",
          approx(convexity_gap({2, 0}, {1.5, 0}, params), 3.6875, 1e-12));

    const Mesh m17 = build_mesh(16, 16, {0, 0, 1, 1});
    ScalarField bd(m17.vertex_count());
    for (int i = 0; i < m17.vertex_count(); ++i)
        bd[i] = 3.0 * m17.vertices[i].x - 2.0 * m17.vertices[i].y;
    const SolveReport rep = solve_dirichlet(m17, bd, make_params(8.0, 1.0));
    check("solver: affine boundary data", rep.converged && sup_distance(rep.solution, bd) < 1e-6);

    bool residual_ok = true;
    try {
        const NodeDerivatives nd = node_derivatives(m17, bd, 8, 8);
        residual_ok = approx(nd.gradient.x, 3.0, 1e-10) && approx(nd.inf_laplacian(), 0.0, 1e-8);
    } catch (...) {
        residual_ok = false;
    }
    check("analysis: affine residuals vanish", residual_ok);

    std::fprintf(stderr, "selftest: %s\n", failures == 0 ? "all ok" : "FAILURES");
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"truncated p-energy solver and verification harness"};
    app.require_subcommand(1);

    std::string config_path, out_path, json_path, field_path, equation, variant;
    std::optional<double> p_opt, sigma_opt;
    double tol = 1e-2, p_val = 8.0, sigma_val = 0.0;
    int jobs = 0;

    auto* solve = app.add_subcommand("solve", "minimize the energy for one (p, sigma, variant)");
    solve->add_option("--config", config_path, "config file")->required();
    solve->add_option("--out", out_path, "output field file");
    solve->add_option("--p", p_opt, "override exponent");
    solve->add_option("--sigma", sigma_opt, "override sigma");
    solve->add_option("--variant", variant, "override variant");

    auto* sweep = app.add_subcommand("sweep", "run the full (p, sigma, variant) sweep");
    sweep->add_option("--config", config_path, "config file")->required();
    sweep->add_option("--out", out_path, "output CSV path");
    sweep->add_option("--json", json_path, "output JSON path");
    sweep->add_option("--jobs", jobs, "parallel workers");

    auto* verify = app.add_subcommand("verify", "finite-difference residual check of a field");
    verify->add_option("--field", field_path, "field file")->required();
    verify->add_option("--equation", equation, "equation name")->required();
    verify->add_option("--tol", tol, "max allowed |residual|");
    verify->add_option("--p", p_val, "exponent for p-dependent equations");
    verify->add_option("--sigma", sigma_val, "sigma for truncated equations");

    auto* diagram = app.add_subcommand("diagram", "commuting-diagram corner comparison");
    diagram->add_option("--config", config_path, "config file")->required();
    diagram->add_option("--out", out_path, "output JSON report");
    diagram->add_option("--jobs", jobs, "parallel workers");

    app.add_subcommand("selftest", "run the built-in closed-form example suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("solve"))
            return cmd_solve(config_path, out_path, p_opt, sigma_opt, variant);
        if (app.got_subcommand("sweep"))
            return cmd_sweep(config_path, out_path, json_path, jobs);
        if (app.got_subcommand("verify"))
            return cmd_verify(field_path, equation, tol, p_val, sigma_val);
        if (app.got_subcommand("diagram"))
            return cmd_diagram(config_path, out_path, jobs);
        return cmd_selftest();
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const MeshError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const StencilError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "tpe/solver.hpp"

using namespace tpe;

namespace {

ScalarField affine_field(const Mesh& m, double gx, double gy, double c = 0.0) {
    ScalarField f(m.vertex_count());
    for (int i = 0; i < m.vertex_count(); ++i)
        f[i] = gx * m.vertices[i].x + gy * m.vertices[i].y + c;
    return f;
}

double pw43(double v) { return std::copysign(std::pow(std::abs(v), 4.0 / 3.0), v); }

ScalarField aronsson_field(const Mesh& m, double scale = 1.0) {
    ScalarField f(m.vertex_count());
    for (int i = 0; i < m.vertex_count(); ++i)
        f[i] = scale * (pw43(m.vertices[i].x) - pw43(m.vertices[i].y));
    return f;
}

double max_error(const ScalarField& a, const ScalarField& b) {
    double r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        r = std::max(r, std::abs(a[i] - b[i]));
    return r;
}

}  // namespace

TEST_CASE("params_for: threshold conventions") {
    const EnergyParams plain = params_for(8.0, 0.3, Variant::plain);
    CHECK(plain.t == 0.3);
    CHECK(plain.source_scale == 0.0);

    const EnergyParams jensen = params_for(8.0, 0.3, Variant::jensen_lower);
    CHECK(jensen.t == doctest::Approx(0.09).epsilon(1e-14));
    CHECK(jensen.source_scale == doctest::Approx(std::pow(0.3, 4.0)).epsilon(1e-14));
}

TEST_CASE("transfinite_init: reproduces bilinear data") {
    const Mesh m = build_mesh(6, 4, {0, 0, 2, 1});
    ScalarField bd(m.vertex_count());
    for (int i = 0; i < m.vertex_count(); ++i) {
        const Vec2 v = m.vertices[i];
        bd[i] = 1.5 + 0.4 * v.x - 0.9 * v.y + 2.0 * v.x * v.y;
    }
    const ScalarField u = transfinite_init(m, bd);
    CHECK(max_error(u, bd) < 1e-13);
}

TEST_CASE("solve_dirichlet: affine data is already minimal") {
    const Mesh m = build_mesh(16, 16, {0, 0, 1, 1});
    const ScalarField bd = affine_field(m, 1.5, -0.5, 0.3);
    const SolveReport r = solve_dirichlet(m, bd, make_params(8.0, 1.0));
    CHECK(r.converged);
    CHECK(max_error(r.solution, bd) < 1e-6);
    // |grad|^2 - t = 2.5 - 1 = 1.5, raised to p/2 = 4
    CHECK(r.energy == doctest::Approx(std::pow(1.5, 4.0)).epsilon(1e-6));
}

TEST_CASE("solve_dirichlet: sub-threshold data gives zero energy") {
    const Mesh m = build_mesh(12, 12, {0, 0, 1, 1});
    const ScalarField bd = affine_field(m, 0.4, 0.3);  // |grad|^2 = 0.25 < t
    const SolveReport r = solve_dirichlet(m, bd, make_params(6.0, 1.0));
    CHECK(r.converged);
    CHECK(r.energy == 0.0);
    CHECK(r.dead_core_fraction == 1.0);
    CHECK(r.iterations == 0);  // the initializer is already a global minimizer
}

TEST_CASE("solve_dirichlet: validation and options errors") {
    const Mesh m = build_mesh(4, 4, {0, 0, 1, 1});
    const ScalarField bd = affine_field(m, 1.0, 0.0);
    SolveOptions bad;
    bad.grad_tol = 0.0;
    CHECK_THROWS_AS(solve_dirichlet(m, bd, make_params(4.0, 0.0), bad), ConfigError);
    CHECK_THROWS_AS(solve_dirichlet(m, ScalarField(3), make_params(4.0, 0.0)), ConfigError);
    ScalarField nan_bd = bd;
    nan_bd[0] = std::nan("");
    CHECK_THROWS_AS(solve_dirichlet(m, nan_bd, make_params(4.0, 0.0)), ConfigError);
}

TEST_CASE("solve_dirichlet: energy trace is nonincreasing") {
    const Mesh m = build_mesh(10, 10, {1, 1, 2, 2});
    const ScalarField bd = aronsson_field(m);
    const SolveReport r = solve_dirichlet(m, bd, make_params(12.0, 0.01));
    REQUIRE(r.energy_trace.size() >= 2);
    for (std::size_t k = 1; k < r.energy_trace.size(); ++k)
        CHECK(r.energy_trace[k] <=
              r.energy_trace[k - 1] + 1e-12 * std::max(1.0, std::abs(r.energy_trace[k - 1])));
}

TEST_CASE("solve_dirichlet: returned minimum beats nearby competitors") {
    const Mesh m = build_mesh(6, 6, {0, 0, 1, 1});
    ScalarField bd(m.vertex_count());
    for (int i = 0; i < m.vertex_count(); ++i) {
        const Vec2 v = m.vertices[i];
        bd[i] = std::sin(2.0 * v.x) + 0.7 * v.y;
    }
    const EnergyParams params = make_params(6.0, 0.25);
    const SolveReport r = solve_dirichlet(m, bd, params);
    REQUIRE(r.converged);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> amp(-0.05, 0.05);
    for (int trial = 0; trial < 200; ++trial) {
        ScalarField other = r.solution;
        for (int i = 0; i < m.vertex_count(); ++i)
            if (!m.boundary_mask[i])
                other[i] += amp(rng);
        CHECK(total_energy(m, other, params) >= r.energy - 1e-10 * std::max(1.0, r.energy));
    }
}

TEST_CASE("solve_dirichlet: independent of the starting point") {
    const Mesh m = build_mesh(8, 8, {1, 1, 2, 2});
    const ScalarField bd = aronsson_field(m);
    const EnergyParams params = make_params(8.0, 0.01);
    const SolveReport a = solve_dirichlet(m, bd, params);
    REQUIRE(a.converged);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> amp(-0.5, 0.5);
    for (int trial = 0; trial < 3; ++trial) {
        SolveOptions opts;
        ScalarField start = bd;
        for (int i = 0; i < m.vertex_count(); ++i)
            if (!m.boundary_mask[i])
                start[i] += amp(rng);
        opts.initial = start;
        const SolveReport b = solve_dirichlet(m, bd, params, opts);
        REQUIRE(b.converged);
        CHECK(max_error(a.solution, b.solution) < 1e-4);
        CHECK(b.energy == doctest::Approx(a.energy).epsilon(1e-8));
    }
}

TEST_CASE("solve_dirichlet: approaches the exact infinity-harmonic profile as p grows") {
    const Mesh m = build_mesh(24, 24, {1, 1, 2, 2});
    const ScalarField exact = aronsson_field(m);
    double prev = 0.0;
    bool first = true;
    SolveOptions opts;
    for (double p : {8.0, 64.0}) {
        const SolveReport r = solve_dirichlet(m, exact, make_params(p, 0.0001), opts);
        REQUIRE(r.converged);
        const double err = max_error(r.solution, exact);
        if (!first)
            CHECK(err < prev);
        prev = err;
        first = false;
        opts.initial = r.solution;  // warm start the next exponent
    }
    CHECK(prev < 0.02);
}

TEST_CASE("solve_dirichlet: Jensen solutions keep gradients above the threshold") {
    const Mesh m = build_mesh(12, 12, {0, 0, 1, 1});
    const double sigma = 0.25;
    ScalarField bd(m.vertex_count());
    for (int i = 0; i < m.vertex_count(); ++i) {
        const Vec2 v = m.vertices[i];
        bd[i] = 2.0 * sigma * std::hypot(v.x - 0.5, v.y - 0.5);
    }
    for (Variant variant : {Variant::jensen_upper, Variant::jensen_lower}) {
        const SolveReport r = solve_dirichlet(m, bd, params_for(6.0, sigma, variant));
        REQUIRE(r.converged);
        // the linear source term pushes every element out of the dead core
        CHECK(r.dead_core_fraction < 0.2);
    }
}

TEST_CASE("continuation_solve: schedule validation") {
    const Mesh m = build_mesh(4, 4, {0, 0, 1, 1});
    const ScalarField bd = affine_field(m, 1.0, 0.0);
    CHECK(continuation_solve(m, bd, {}, 0.5, Variant::plain).empty());
    CHECK_THROWS_AS(continuation_solve(m, bd, {2.0, 4.0}, 0.5, Variant::plain), ConfigError);
    CHECK_THROWS_AS(continuation_solve(m, bd, {4.0, 4.0}, 0.5, Variant::plain), ConfigError);
    CHECK_THROWS_AS(continuation_solve(m, bd, {8.0, 4.0}, 0.5, Variant::plain), ConfigError);
}

TEST_CASE("continuation_solve: affine data across a schedule") {
    const Mesh m = build_mesh(8, 8, {0, 0, 1, 1});
    const ScalarField bd = affine_field(m, 2.0, 0.0);
    const auto reports = continuation_solve(m, bd, {4.0, 8.0}, 1.0, Variant::plain);
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].energy == doctest::Approx(9.0).epsilon(1e-6));
    CHECK(reports[1].energy == doctest::Approx(81.0).epsilon(1e-6));
    for (const auto& r : reports) CHECK(r.converged);
}

TEST_CASE("continuation_solve: warm starts pay off") {
    const Mesh m = build_mesh(16, 16, {1, 1, 2, 2});
    const ScalarField bd = aronsson_field(m);
    const std::vector<double> schedule{4.0, 8.0, 16.0, 32.0};

    SolveOptions warm;
    warm.continuation = true;
    const auto warm_reports = continuation_solve(m, bd, schedule, 0.01, Variant::plain, warm);

    // the comparison arm solves each exponent from a randomly perturbed start
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> amp(-0.3, 0.3);
    int warm_total = 0, cold_total = 0;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        REQUIRE(warm_reports[k].converged);
        warm_total += warm_reports[k].iterations;

        SolveOptions cold;
        ScalarField start = bd;
        for (int i = 0; i < m.vertex_count(); ++i)
            if (!m.boundary_mask[i])
                start[i] += amp(rng);
        cold.initial = start;
        const SolveReport cold_report =
            solve_dirichlet(m, bd, params_for(schedule[k], 0.01, Variant::plain), cold);
        REQUIRE(cold_report.converged);
        CHECK(warm_reports[k].energy == doctest::Approx(cold_report.energy).epsilon(1e-6));
        cold_total += cold_report.iterations;
    }
    CHECK(warm_total < cold_total);
}

TEST_CASE("optimality_residual: zero at affine minimizers, positive off them") {
    const Mesh m = build_mesh(8, 8, {0, 0, 1, 1});
    const EnergyParams params = make_params(6.0, 0.25);
    const ScalarField flat = affine_field(m, 1.2, 0.0);
    CHECK(optimality_residual(m, flat, params) < 1e-12);

    ScalarField bent = flat;
    bent[m.vid(4, 4)] += 0.3;
    CHECK(optimality_residual(m, bent, params) > 1e-3);
}

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tpe/harness.hpp"

using namespace tpe;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SweepConfig small_affine_config() {
    SweepConfig c;
    c.nx = c.ny = 8;
    c.rect = {0, 0, 1, 1};
    c.data = {"affine", {1.5, -0.5, 0.2}};
    c.p_list = {4.0, 8.0};
    c.sigma_list = {1.0, 0.5};
    return c;
}

}  // namespace

TEST_CASE("boundary catalog: closed forms") {
    CHECK(boundary_value({"affine", {2.0, 3.0, 1.0}}, {1.0, 1.0}) == doctest::Approx(6.0));
    CHECK(boundary_value({"cone", {0.0, 0.0, 2.0}}, {3.0, 4.0}) == doctest::Approx(10.0));
    CHECK(boundary_value({"aronsson", {1.0}}, {8.0, 1.0}) ==
          doctest::Approx(std::pow(8.0, 4.0 / 3.0) - 1.0).epsilon(1e-12));
    CHECK(boundary_value({"aronsson", {1.0}}, {-1.0, 0.0}) == doctest::Approx(-1.0));
    CHECK(boundary_value({"sinusoid", {M_PI, M_PI, 3.0}}, {0.5, 0.5}) == doctest::Approx(3.0));
    CHECK(boundary_value({"sinusoid", {M_PI, M_PI, 3.0}}, {1.0, 0.5}) ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(boundary_value({"nope", {}}, {0, 0}), ConfigError);
}

TEST_CASE("config validation") {
    SweepConfig c = small_affine_config();
    CHECK_NOTHROW(c.validate());
    c.p_list = {8.0, 4.0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_affine_config();
    c.sigma_list = {0.5, 1.0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_affine_config();
    c.jobs = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_affine_config();
    c.data.name = "bogus";
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("run_sweep: affine data reproduced in every cell") {
    const SweepConfig c = small_affine_config();
    const SweepTable table = run_sweep(c);
    REQUIRE(table.cells.size() == 4);
    const Mesh mesh = build_mesh(c.nx, c.ny, c.rect);
    const ScalarField exact = sample_field(mesh, c.data);
    const double g2 = 1.5 * 1.5 + 0.5 * 0.5;  // 2.5
    for (const auto& cell : table.cells) {
        CHECK(cell.converged);
        CHECK(sup_distance(*cell.field, exact) < 1e-6);
        CHECK(cell.sup == doctest::Approx(std::sqrt(g2 - cell.sigma)).epsilon(1e-6));
        CHECK(cell.energy ==
              doctest::Approx(std::pow(g2 - cell.sigma, cell.p / 2.0)).epsilon(1e-5));
        CHECK(cell.dead_core_fraction == 0.0);
    }
    // cell ordering: sigma-major columns, p ascending inside each
    CHECK(table.cells[0].sigma == 1.0);
    CHECK(table.cells[0].p == 4.0);
    CHECK(table.cells[1].p == 8.0);
    CHECK(table.cells[2].sigma == 0.5);
    // both corner routes land on the same affine function
    const DiagramReport diagram = diagram_commutation(table);
    CHECK(diagram.gap < 1e-6);
    CHECK(diagram.tol == 1e-5);
    CHECK(diagram.pass);
    // distances are symmetric with zero diagonal
    for (std::size_t a = 0; a < table.cells.size(); ++a) {
        CHECK(table.distance(a, a) == 0.0);
        for (std::size_t b = 0; b < table.cells.size(); ++b)
            CHECK(table.distance(a, b) == table.distance(b, a));
    }
    CHECK(table.find(8.0, 0.5, Variant::plain) != nullptr);
    CHECK(table.find(9.0, 0.5, Variant::plain) == nullptr);
}

TEST_CASE("run_sweep: single cell") {
    SweepConfig c = small_affine_config();
    c.p_list = {6.0};
    c.sigma_list = {0.25};
    const SweepTable table = run_sweep(c);
    REQUIRE(table.cells.size() == 1);
    CHECK(table.cells[0].p == 6.0);
    CHECK(diagram_commutation(table).pass);
}

TEST_CASE("run_sweep: deterministic across worker counts") {
    SweepConfig c;
    c.nx = c.ny = 10;
    c.rect = {0, 0, 1, 1};
    c.data = {"sinusoid", {M_PI, M_PI, 0.8}};
    c.p_list = {4.0, 6.0};
    c.sigma_list = {0.5, 0.1};
    c.variants = {Variant::plain, Variant::jensen_upper};

    c.jobs = 1;
    const SweepTable serial = run_sweep(c);
    c.jobs = 4;
    const SweepTable parallel = run_sweep(c);
    REQUIRE(serial.cells.size() == parallel.cells.size());
    for (std::size_t k = 0; k < serial.cells.size(); ++k) {
        CHECK(serial.cells[k].field_hash == parallel.cells[k].field_hash);
        CHECK(serial.cells[k].energy == parallel.cells[k].energy);  // bit identical
    }

    const std::string a = "sweep_a.csv", b = "sweep_b.csv";
    export_csv(serial, a);
    export_csv(parallel, b);
    CHECK(slurp(a) == slurp(b));
    std::remove(a.c_str());
    std::remove(b.c_str());
}

TEST_CASE("export_csv: layout") {
    SweepConfig c = small_affine_config();
    c.p_list = {4.0};
    c.sigma_list = {1.0};
    const SweepTable table = run_sweep(c);
    const std::string path = "one_cell.csv";
    export_csv(table, path);
    std::ifstream in(path);
    std::string header, row, extra;
    REQUIRE(std::getline(in, header));
    CHECK(header == "p,sigma,variant,energy,p_root,sup,residual,dead_core_fraction,converged");
    REQUIRE(std::getline(in, row));
    CHECK(row.substr(0, 10) == "4,1,plain,");
    CHECK(row.back() == '1');  // converged flag
    CHECK(!std::getline(in, extra));
    std::remove(path.c_str());
}

TEST_CASE("json export round trip preserves results bit for bit") {
    SweepConfig c = small_affine_config();
    c.data = {"cone", {0.5, 0.5, 2.0}};
    const SweepTable table = run_sweep(c);
    const std::string path = "sweep_roundtrip.json";
    export_json(table, path);
    const SweepTable loaded = import_json(path);
    REQUIRE(loaded.cells.size() == table.cells.size());
    for (std::size_t k = 0; k < table.cells.size(); ++k) {
        const auto& a = table.cells[k];
        const auto& b = loaded.cells[k];
        CHECK(a.p == b.p);
        CHECK(a.sigma == b.sigma);
        CHECK(a.variant == b.variant);
        CHECK(a.energy == b.energy);
        CHECK(a.p_root == b.p_root);
        CHECK(a.sup == b.sup);
        CHECK(a.residual == b.residual);
        CHECK(a.converged == b.converged);
        CHECK(a.field_hash == b.field_hash);
        REQUIRE(b.field);
        for (std::size_t i = 0; i < a.field->size(); ++i)
            CHECK((*a.field)[i] == (*b.field)[i]);
        CHECK(field_hash(*b.field) == b.field_hash);
    }
    CHECK(loaded.distances == table.distances);
    REQUIRE(loaded.corner_via_sigma);
    for (std::size_t i = 0; i < table.corner_via_sigma->size(); ++i)
        CHECK((*loaded.corner_via_sigma)[i] == (*table.corner_via_sigma)[i]);
    // a second export of the imported table is byte identical
    const std::string again = "sweep_roundtrip2.json";
    SweepTable copy = loaded;
    copy.config = table.config;
    export_json(copy, again);
    CHECK(slurp(path) == slurp(again));
    std::remove(path.c_str());
    std::remove(again.c_str());
}

TEST_CASE("stability_rate_fit: recovers synthetic exponents") {
    const std::vector<double> sigmas{0.4, 0.2, 0.1, 0.05};
    std::vector<double> linear, quadratic;
    for (double s : sigmas) {
        linear.push_back(3.0 * s);
        quadratic.push_back(0.7 * s * s);
    }
    const RateFit f1 = stability_rate_fit(sigmas, linear);
    CHECK(f1.slope == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f1.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(f1.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f1.used == 4);
    CHECK(f1.dropped == 0);

    const RateFit f2 = stability_rate_fit(sigmas, quadratic);
    CHECK(f2.slope == doctest::Approx(2.0).epsilon(1e-12));

    // zero gaps are dropped, not logged
    const RateFit f3 = stability_rate_fit({0.4, 0.2, 0.1, 0.05}, {0.4, 0.2, 0.1, 0.0});
    CHECK(f3.used == 3);
    CHECK(f3.dropped == 1);
    CHECK_THROWS_AS(stability_rate_fit({0.4, 0.2}, {0.4}), ConfigError);
    CHECK_THROWS_AS(stability_rate_fit({0.4, 0.2, 0.1}, {0.0, 0.0, 0.1}), ConfigError);
}

TEST_CASE("gamma_check: constant sequence at the limit passes") {
    const Mesh mesh = build_mesh(10, 10, {0, 0, 1, 1});
    ScalarField u(mesh.vertex_count());
    for (int i = 0; i < mesh.vertex_count(); ++i)
        u[i] = 2.0 * mesh.vertices[i].x;
    const std::vector<double> ps{8.0, 16.0, 32.0, 64.0, 128.0};
    const std::vector<ScalarField> seq(ps.size(), u);
    const GammaReport r = gamma_check(mesh, seq, ps, u, 0.5, 1e-9);
    // every p-root energy of the affine field equals its sup energy exactly
    CHECK(r.sup_energy == doctest::Approx(std::sqrt(3.5)).epsilon(1e-12));
    CHECK(r.tail_p_root == doctest::Approx(r.sup_energy).epsilon(1e-12));
    CHECK(r.liminf_ok);
    CHECK(r.limsup_ok);
    CHECK(r.sigma_monotone_ok);
    CHECK(r.pass());

    // an undercutting sequence breaks the liminf side
    const std::vector<ScalarField> low(ps.size(), ScalarField(mesh.vertex_count(), 0.0));
    CHECK(!gamma_check(mesh, low, ps, u, 0.5, 1e-9).liminf_ok);
    CHECK_THROWS_AS(gamma_check(mesh, {}, {}, u, 0.5, 1e-9), ConfigError);
}

TEST_CASE("config parsing: full file and defaults") {
    const std::string text =
        "# sweep over a cone\n"
        "mesh.nx = 24\n"
        "mesh.ny = 16\n"
        "domain.x0 = -1\n"
        "domain.y0 = 0\n"
        "domain.x1 = 1.5\n"
        "domain.y1 = 2\n"
        "data.name = cone\n"
        "data.params = 0.25,1.0,2.0\n"
        "sweep.p_list = 4,8,16   # exponents\n"
        "sweep.sigma_list = 0.5,0.25\n"
        "sweep.variants = plain,jensen_upper\n"
        "solver.grad_tol = 1e-7\n"
        "solver.max_iters = 900\n"
        "solver.memory = 7\n"
        "solver.continuation = 0\n"
        "seed = 42\n"
        "diagram.tol = 1e-4\n"
        "jobs = 3\n";
    const SweepConfig c = parse_config_text(text);
    CHECK(c.nx == 24);
    CHECK(c.ny == 16);
    CHECK(c.rect.x0 == -1.0);
    CHECK(c.rect.y1 == 2.0);
    CHECK(c.data.name == "cone");
    REQUIRE(c.data.params.size() == 3);
    CHECK(c.data.params[2] == 2.0);
    CHECK(c.p_list == std::vector<double>{4.0, 8.0, 16.0});
    CHECK(c.sigma_list == std::vector<double>{0.5, 0.25});
    REQUIRE(c.variants.size() == 2);
    CHECK(c.variants[1] == Variant::jensen_upper);
    CHECK(c.solver.grad_tol == 1e-7);
    CHECK(c.solver.max_iters == 900);
    CHECK(c.solver.memory == 7);
    CHECK(!c.solver.continuation);
    CHECK(c.seed == 42);
    CHECK(c.diagram_tol == 1e-4);
    CHECK(c.jobs == 3);
    CHECK_NOTHROW(c.validate());

    const SweepConfig d = parse_config_text("");
    CHECK(d.nx == 32);  // untouched defaults
    CHECK(d.solver.grad_tol == 1e-8);
}

TEST_CASE("config parsing: errors") {
    CHECK_THROWS_AS(parse_config_text("mesh.nx 24\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("mesh.nx = abc\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("no.such.key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_file("/nonexistent/path.cfg"), ConfigError);
}

TEST_CASE("field_hash: sensitive to any value change") {
    ScalarField a(25);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = 0.1 * i;
    ScalarField b = a;
    CHECK(field_hash(a) == field_hash(b));
    b[13] += 1e-15;
    CHECK(field_hash(a) != field_hash(b));
}

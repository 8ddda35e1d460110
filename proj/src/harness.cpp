#include "tpe/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace tpe {

using nlohmann::json;

double boundary_value(const BoundaryData& data, Vec2 xy) {
    const auto param = [&](std::size_t i, double fallback) {
        return i < data.params.size() ? data.params[i] : fallback;
    };
    if (data.name == "affine")
        return param(0, 1.0) * xy.x + param(1, 0.0) * xy.y + param(2, 0.0);
    if (data.name == "cone")
        return param(2, 1.0) * std::hypot(xy.x - param(0, 0.0), xy.y - param(1, 0.0));
    if (data.name == "aronsson") {
        const auto pow43 = [](double v) {
            return std::copysign(std::pow(std::abs(v), 4.0 / 3.0), v);
        };
        return param(0, 1.0) * (pow43(xy.x) - pow43(xy.y));
    }
    if (data.name == "sinusoid")
        return param(2, 1.0) * std::sin(param(0, M_PI) * xy.x) * std::sin(param(1, M_PI) * xy.y);
    throw ConfigError("unknown boundary data: " + data.name);
}

ScalarField sample_field(const Mesh& mesh, const BoundaryData& data) {
    ScalarField f(mesh.vertex_count());
    for (int i = 0; i < mesh.vertex_count(); ++i)
        f[i] = boundary_value(data, mesh.vertices[i]);
    return f;
}

void SweepConfig::validate() const {
    if (nx < 1 || ny < 1)
        throw ConfigError("config: mesh resolution must be positive");
    if (p_list.empty() || sigma_list.empty() || variants.empty())
        throw ConfigError("config: p_list, sigma_list and variants must be nonempty");
    for (std::size_t i = 0; i < p_list.size(); ++i) {
        if (!(p_list[i] > 2.0))
            throw ConfigError("config: exponents must exceed 2");
        if (i > 0 && !(p_list[i] > p_list[i - 1]))
            throw ConfigError("config: p_list must be strictly increasing");
    }
    for (std::size_t i = 0; i < sigma_list.size(); ++i) {
        if (!(sigma_list[i] >= 0.0))
            throw ConfigError("config: sigma values must be >= 0");
        if (i > 0 && !(sigma_list[i] < sigma_list[i - 1]))
            throw ConfigError("config: sigma_list must be strictly decreasing");
    }
    if (jobs < 1)
        throw ConfigError("config: jobs must be >= 1");
    boundary_value(data, {rect.x0, rect.y0});  // rejects unknown names early
}

std::uint64_t field_hash(const ScalarField& field) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (double v : field.values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int k = 0; k < 8; ++k) {
            h ^= (bits >> (8 * k)) & 0xffu;
            h *= 1099511628211ull;
        }
    }
    return h;
}

namespace {

CellResult make_cell(const Mesh& mesh, double p, double sigma, Variant variant,
                     const SolveReport& report) {
    CellResult cell;
    cell.p = p;
    cell.sigma = sigma;
    cell.variant = variant;
    cell.energy = report.energy;
    cell.residual = report.optimality_residual;
    cell.dead_core_fraction = report.dead_core_fraction;
    cell.converged = report.converged;
    const EnergyParams params = params_for(p, sigma, variant);
    EnergyParams aux = params;
    aux.variant = Variant::plain;
    aux.source_scale = 0.0;
    aux.form = EnergyForm::p_root;
    cell.p_root = total_energy(mesh, report.solution, aux);
    aux.form = EnergyForm::sup;
    cell.sup = total_energy(mesh, report.solution, aux);
    cell.field = std::make_shared<ScalarField>(report.solution);
    cell.field_hash = field_hash(report.solution);
    return cell;
}

void run_jobs(std::vector<std::function<void()>>& jobs, int workers) {
    if (workers <= 1) {
        for (auto& job : jobs) job();
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int n = std::min<int>(workers, static_cast<int>(jobs.size()));
    for (int w = 0; w < n; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t k = next.fetch_add(1);
                if (k >= jobs.size()) return;
                jobs[k]();
            }
        });
    for (auto& th : pool) th.join();
}

}  // namespace

SweepTable run_sweep(const SweepConfig& config) {
    config.validate();
    SweepTable table;
    table.config = config;

    const Mesh mesh = build_mesh(config.nx, config.ny, config.rect);
    const ScalarField data = sample_field(mesh, config.data);

    const std::size_t cols = config.sigma_list.size() * config.variants.size();
    const std::size_t per_col = config.p_list.size();
    table.cells.resize(cols * per_col);

    std::vector<std::function<void()>> jobs;
    for (std::size_t v = 0; v < config.variants.size(); ++v) {
        for (std::size_t s = 0; s < config.sigma_list.size(); ++s) {
            const std::size_t col = v * config.sigma_list.size() + s;
            jobs.push_back([&, v, s, col] {
                const Variant variant = config.variants[v];
                const double sigma = config.sigma_list[s];
                const auto reports =
                    continuation_solve(mesh, data, config.p_list, sigma, variant, config.solver);
                for (std::size_t k = 0; k < reports.size(); ++k)
                    table.cells[col * per_col + k] =
                        make_cell(mesh, config.p_list[k], sigma, variant, reports[k]);
            });
        }
    }
    // alternate route to the corner: climb p at sigma_max first, then chain
    // along decreasing sigma at p = p_max (the other edge path of the grid)
    std::shared_ptr<ScalarField> corner_alt;
    jobs.push_back([&] {
        const Variant variant = config.variants.front();
        const double p_max = config.p_list.back();
        const double sigma_max = config.sigma_list.front();
        const auto climb =
            continuation_solve(mesh, data, config.p_list, sigma_max, variant, config.solver);
        SolveOptions opts = config.solver;
        opts.initial = climb.back().solution;
        corner_alt = std::make_shared<ScalarField>(climb.back().solution);
        for (std::size_t s = 1; s < config.sigma_list.size(); ++s) {
            const SolveReport rep = solve_dirichlet(
                mesh, data, params_for(p_max, config.sigma_list[s], variant), opts);
            opts.initial = rep.solution;
            corner_alt = std::make_shared<ScalarField>(rep.solution);
        }
    });
    run_jobs(jobs, config.jobs);
    table.corner_via_sigma = corner_alt;

    const std::size_t n = table.cells.size();
    table.distances.assign(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            const double d = sup_distance(*table.cells[a].field, *table.cells[b].field);
            table.distances[a * n + b] = d;
            table.distances[b * n + a] = d;
        }
    return table;
}

const CellResult* SweepTable::find(double p, double sigma, Variant variant) const {
    for (const auto& cell : cells)
        if (cell.p == p && cell.sigma == sigma && cell.variant == variant)
            return &cell;
    return nullptr;
}

DiagramReport diagram_commutation(const SweepTable& table) {
    const double p_max = table.config.p_list.back();
    const double sigma_min = table.config.sigma_list.back();
    const CellResult* corner = table.find(p_max, sigma_min, table.config.variants.front());
    if (!corner || !table.corner_via_sigma)
        throw ConfigError("diagram_commutation: missing corner cells");
    DiagramReport report;
    report.gap = sup_distance(*corner->field, *table.corner_via_sigma);
    report.tol = table.config.diagram_tol;
    report.pass = report.gap <= report.tol;
    return report;
}

RateFit stability_rate_fit(const std::vector<double>& sigmas, const std::vector<double>& gaps) {
    if (sigmas.size() != gaps.size())
        throw ConfigError("stability_rate_fit: length mismatch");
    std::vector<double> xs, ys;
    RateFit fit;
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        if (!(sigmas[i] > 0.0))
            throw ConfigError("stability_rate_fit: sigma values must be positive");
        if (!(gaps[i] > 0.0)) {
            ++fit.dropped;
            continue;
        }
        xs.push_back(std::log(sigmas[i]));
        ys.push_back(std::log(gaps[i]));
    }
    if (xs.size() < 3)
        throw ConfigError("stability_rate_fit: need at least 3 positive (sigma, gap) pairs");
    const std::size_t n = xs.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.used = static_cast<int>(n);
    return fit;
}

GammaReport gamma_check(const Mesh& mesh, const std::vector<ScalarField>& field_sequence,
                        const std::vector<double>& p_values, const ScalarField& limit_field,
                        double t, double tolerance) {
    if (field_sequence.empty() || field_sequence.size() != p_values.size())
        throw ConfigError("gamma_check: sequence and exponents must match and be nonempty");
    GammaReport report;
    report.sup_energy =
        total_energy(mesh, limit_field, make_params(4.0, t, Variant::plain, 0.0, EnergyForm::sup));

    // liminf surrogate: the tail of the p-root energies must not undercut the
    // sup energy of the limit
    const std::size_t tail_start = field_sequence.size() / 2;
    double tail_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = tail_start; i < field_sequence.size(); ++i) {
        const auto params = make_params(p_values[i], t, Variant::plain, 0.0, EnergyForm::p_root);
        tail_min = std::min(tail_min, total_energy(mesh, field_sequence[i], params));
    }
    report.liminf_ok = tail_min >= report.sup_energy - tolerance;

    // limsup surrogate with the constant recovery sequence u_p = limit
    const double p_max = p_values.back();
    report.tail_p_root = total_energy(
        mesh, limit_field, make_params(p_max, t, Variant::plain, 0.0, EnergyForm::p_root));
    report.limsup_ok = report.tail_p_root <= report.sup_energy + tolerance;

    // sigma -> 0 family: the truncated density grows monotonically as the
    // threshold decreases
    report.sigma_monotone_ok = true;
    double prev = -1.0;
    for (double sigma : {4.0 * t + 1.0, 2.0 * t + 0.5, t, 0.5 * t, 0.0}) {
        const double e = total_energy(
            mesh, limit_field, make_params(p_max, sigma, Variant::plain, 0.0, EnergyForm::p_root));
        if (e < prev - 1e-12) report.sigma_monotone_ok = false;
        prev = e;
    }
    return report;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void export_csv(const SweepTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("export_csv: cannot open " + path);
    out << "p,sigma,variant,energy,p_root,sup,residual,dead_core_fraction,converged\n";
    for (const auto& c : table.cells) {
        out << fmt_double(c.p) << ',' << fmt_double(c.sigma) << ',' << to_string(c.variant) << ','
            << fmt_double(c.energy) << ',' << fmt_double(c.p_root) << ',' << fmt_double(c.sup)
            << ',' << fmt_double(c.residual) << ',' << fmt_double(c.dead_core_fraction) << ','
            << (c.converged ? 1 : 0) << '\n';
    }
    if (!out)
        throw ConfigError("export_csv: write failure on " + path);
}

namespace {

json config_to_json(const SweepConfig& c) {
    json j;
    j["nx"] = c.nx;
    j["ny"] = c.ny;
    j["rect"] = {c.rect.x0, c.rect.y0, c.rect.x1, c.rect.y1};
    j["data"] = {{"name", c.data.name}, {"params", c.data.params}};
    j["p_list"] = c.p_list;
    j["sigma_list"] = c.sigma_list;
    std::vector<std::string> vars;
    for (auto v : c.variants) vars.push_back(to_string(v));
    j["variants"] = vars;
    j["solver"] = {{"grad_tol", c.solver.grad_tol},
                   {"max_iters", c.solver.max_iters},
                   {"memory", c.solver.memory},
                   {"continuation", c.solver.continuation}};
    j["seed"] = c.seed;
    j["diagram_tol"] = c.diagram_tol;
    j["jobs"] = c.jobs;
    return j;
}

SweepConfig config_from_json(const json& j) {
    SweepConfig c;
    c.nx = j.at("nx");
    c.ny = j.at("ny");
    const auto& r = j.at("rect");
    c.rect = {r.at(0), r.at(1), r.at(2), r.at(3)};
    c.data.name = j.at("data").at("name");
    c.data.params = j.at("data").at("params").get<std::vector<double>>();
    c.p_list = j.at("p_list").get<std::vector<double>>();
    c.sigma_list = j.at("sigma_list").get<std::vector<double>>();
    c.variants.clear();
    for (const auto& v : j.at("variants"))
        c.variants.push_back(variant_from_string(v.get<std::string>()));
    c.solver.grad_tol = j.at("solver").at("grad_tol");
    c.solver.max_iters = j.at("solver").at("max_iters");
    c.solver.memory = j.at("solver").at("memory");
    c.solver.continuation = j.at("solver").at("continuation");
    c.seed = j.at("seed");
    c.diagram_tol = j.at("diagram_tol");
    c.jobs = j.at("jobs");
    return c;
}

}  // namespace

void export_json(const SweepTable& table, const std::string& path) {
    json j;
    j["config"] = config_to_json(table.config);
    j["cells"] = json::array();
    for (const auto& c : table.cells) {
        j["cells"].push_back({{"p", c.p},
                              {"sigma", c.sigma},
                              {"variant", to_string(c.variant)},
                              {"energy", c.energy},
                              {"p_root", c.p_root},
                              {"sup", c.sup},
                              {"residual", c.residual},
                              {"dead_core_fraction", c.dead_core_fraction},
                              {"converged", c.converged},
                              {"field_hash", c.field_hash},
                              {"field", c.field ? c.field->values : std::vector<double>{}}});
    }
    j["distances"] = table.distances;
    if (table.corner_via_sigma)
        j["corner_via_sigma"] = table.corner_via_sigma->values;
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("export_json: cannot open " + path);
    out << j.dump(2) << "\n";
    if (!out)
        throw ConfigError("export_json: write failure on " + path);
}

SweepTable import_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("import_json: cannot open " + path);
    json j;
    in >> j;
    SweepTable table;
    table.config = config_from_json(j.at("config"));
    for (const auto& cj : j.at("cells")) {
        CellResult c;
        c.p = cj.at("p");
        c.sigma = cj.at("sigma");
        c.variant = variant_from_string(cj.at("variant").get<std::string>());
        c.energy = cj.at("energy");
        c.p_root = cj.at("p_root");
        c.sup = cj.at("sup");
        c.residual = cj.at("residual");
        c.dead_core_fraction = cj.at("dead_core_fraction");
        c.converged = cj.at("converged");
        c.field_hash = cj.at("field_hash");
        ScalarField f;
        f.values = cj.at("field").get<std::vector<double>>();
        c.field = std::make_shared<ScalarField>(std::move(f));
        table.cells.push_back(std::move(c));
    }
    table.distances = j.at("distances").get<std::vector<double>>();
    if (j.contains("corner_via_sigma")) {
        ScalarField f;
        f.values = j.at("corner_via_sigma").get<std::vector<double>>();
        table.corner_via_sigma = std::make_shared<ScalarField>(std::move(f));
    }
    return table;
}

namespace {

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(std::stod(item));
    return out;
}

}  // namespace

SweepConfig parse_config_text(const std::string& text) {
    SweepConfig c;
    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "mesh.nx") c.nx = std::stoi(val);
            else if (key == "mesh.ny") c.ny = std::stoi(val);
            else if (key == "domain.x0") c.rect.x0 = std::stod(val);
            else if (key == "domain.y0") c.rect.y0 = std::stod(val);
            else if (key == "domain.x1") c.rect.x1 = std::stod(val);
            else if (key == "domain.y1") c.rect.y1 = std::stod(val);
            else if (key == "data.name") c.data.name = val;
            else if (key == "data.params") c.data.params = parse_list(val);
            else if (key == "sweep.p_list") c.p_list = parse_list(val);
            else if (key == "sweep.sigma_list") c.sigma_list = parse_list(val);
            else if (key == "sweep.variants") {
                c.variants.clear();
                std::stringstream vs(val);
                std::string v;
                while (std::getline(vs, v, ','))
                    if (!v.empty()) c.variants.push_back(variant_from_string(v));
            } else if (key == "solver.grad_tol") c.solver.grad_tol = std::stod(val);
            else if (key == "solver.max_iters") c.solver.max_iters = std::stoi(val);
            else if (key == "solver.memory") c.solver.memory = std::stoi(val);
            else if (key == "solver.continuation") c.solver.continuation = std::stoi(val) != 0;
            else if (key == "seed") c.seed = std::stoull(val);
            else if (key == "diagram.tol") c.diagram_tol = std::stod(val);
            else if (key == "jobs") c.jobs = std::stoi(val);
            else throw ConfigError("unknown config key: " + key);
        } catch (const std::invalid_argument&) {
            throw ConfigError("config line " + std::to_string(lineno) + ": bad value for " + key);
        }
    }
    return c;
}

SweepConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace tpe

#include "tpe/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace tpe {

EnergyParams params_for(double p, double sigma, Variant variant) {
    if (variant == Variant::plain)
        return make_params(p, sigma, Variant::plain, 0.0);
    return make_jensen_params(p, sigma, variant);
}

ScalarField transfinite_init(const Mesh& mesh, const ScalarField& boundary_data) {
    const int nx = mesh.nx;
    const int ny = mesh.ny;
    ScalarField u(mesh.vertex_count());
    const auto bd = [&](int i, int j) { return boundary_data[mesh.vid(i, j)]; };
    for (int j = 0; j <= ny; ++j) {
        const double ty = static_cast<double>(j) / ny;
        for (int i = 0; i <= nx; ++i) {
            const double tx = static_cast<double>(i) / nx;
            const double blend =
                (1.0 - ty) * bd(i, 0) + ty * bd(i, ny) + (1.0 - tx) * bd(0, j) + tx * bd(nx, j) -
                ((1.0 - tx) * (1.0 - ty) * bd(0, 0) + tx * (1.0 - ty) * bd(nx, 0) +
                 (1.0 - tx) * ty * bd(0, ny) + tx * ty * bd(nx, ny));
            u[mesh.vid(i, j)] = mesh.boundary_mask[mesh.vid(i, j)] ? boundary_data[mesh.vid(i, j)]
                                                                   : blend;
        }
    }
    return u;
}

namespace {

// Positive factor turning the reported energy into the internal objective:
// 1/p for the plain energy, and for Jensen variants an extra normalization by
// source_scale when sigma < 1, so the sigma^(p-4)-sized landscape is brought
// to unit scale before tolerances apply.
double objective_scale(const EnergyParams& params) {
    if (params.variant == Variant::plain)
        return 1.0 / params.p;
    if (params.source_scale > 0.0 && params.source_scale < 1.0)
        return 1.0 / params.source_scale;
    return 1.0;
}

double masked_sup(const std::vector<double>& g, const Mesh& mesh) {
    double r = 0.0;
    for (int i = 0; i < mesh.vertex_count(); ++i)
        if (!mesh.boundary_mask[i])
            r = std::max(r, std::abs(g[i]));
    return r;
}

double dead_core_fraction(const Mesh& mesh, const ScalarField& u, double t) {
    double core = 0.0, total = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        total += mesh.element_area[e];
        if (norm2(element_gradient(mesh, u, e)) <= t)
            core += mesh.element_area[e];
    }
    return core / total;
}

}  // namespace

double optimality_residual(const Mesh& mesh, const ScalarField& field,
                           const EnergyParams& params) {
    const auto g = energy_gradient(mesh, field, params);
    return objective_scale(params) * masked_sup(g, mesh);
}

SolveReport solve_dirichlet(const Mesh& mesh, const ScalarField& boundary_data,
                            const EnergyParams& params, const SolveOptions& opts) {
    if (!(opts.grad_tol > 0.0) || opts.memory < 1 || opts.max_iters < 0)
        throw ConfigError("solve_dirichlet: invalid options");
    if (boundary_data.size() != static_cast<std::size_t>(mesh.vertex_count()))
        throw ConfigError("solve_dirichlet: boundary data size mismatch");
    for (int i = 0; i < mesh.vertex_count(); ++i)
        if (mesh.boundary_mask[i] && !std::isfinite(boundary_data[i]))
            throw ConfigError("solve_dirichlet: non-finite boundary value");

    std::vector<int> free_ids;
    for (int i = 0; i < mesh.vertex_count(); ++i)
        if (!mesh.boundary_mask[i])
            free_ids.push_back(i);
    const std::size_t n = free_ids.size();

    ScalarField u = opts.initial ? *opts.initial : transfinite_init(mesh, boundary_data);
    for (int i = 0; i < mesh.vertex_count(); ++i)
        if (mesh.boundary_mask[i])
            u[i] = boundary_data[i];

    const double scale = objective_scale(params);
    const auto eval_energy = [&](const ScalarField& f) {
        return scale * total_energy(mesh, f, params);
    };
    const auto eval_grad = [&](const ScalarField& f) {
        auto g = energy_gradient(mesh, f, params);
        for (auto& v : g) v *= scale;
        return g;
    };

    SolveReport report;
    double E = eval_energy(u);
    auto g = eval_grad(u);
    report.energy_trace.push_back(E);

    struct Pair {
        std::vector<double> s, y;
        double rho;
    };
    std::deque<Pair> history;
    std::vector<double> d(n), x_new;
    ScalarField u_trial = u;
    int iter = 0;
    bool stalled = false;

    const auto residual = [&]() { return masked_sup(g, mesh); };
    const auto done = [&](double r, double energy) {
        return r <= opts.grad_tol * std::max(1.0, std::abs(energy));
    };

    std::vector<double> dinv(n);
    for (; iter < opts.max_iters && std::isfinite(E); ++iter) {
        if (done(residual(), E))
            break;

        // diagonal preconditioner from the current curvature; without it the
        // spread of s^(p/2-1) across the domain makes large p intractable
        {
            const auto diag = energy_hessian_diag(mesh, u, params);
            for (std::size_t k = 0; k < n; ++k) {
                const double dv = scale * diag[free_ids[k]];
                dinv[k] = dv > 0.0 ? 1.0 / dv : 0.0;
            }
            double max_inv = 0.0;
            for (std::size_t k = 0; k < n; ++k) max_inv = std::max(max_inv, dinv[k]);
            if (max_inv == 0.0) max_inv = 1.0;
            for (std::size_t k = 0; k < n; ++k)
                if (dinv[k] == 0.0)
                    dinv[k] = max_inv;  // dead-core vertex, no curvature information
        }

        // two-loop recursion on the free components, H0 = gamma * D^-1
        for (std::size_t k = 0; k < n; ++k)
            d[k] = -g[free_ids[k]];
        std::vector<double> alpha(history.size());
        for (std::size_t h = history.size(); h-- > 0;) {
            const auto& pr = history[h];
            double sd = 0.0;
            for (std::size_t k = 0; k < n; ++k) sd += pr.s[k] * d[k];
            alpha[h] = pr.rho * sd;
            for (std::size_t k = 0; k < n; ++k) d[k] -= alpha[h] * pr.y[k];
        }
        double gamma = 1.0;
        if (!history.empty()) {
            const auto& last = history.back();
            double ydy = 0.0, sy = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                ydy += last.y[k] * dinv[k] * last.y[k];
                sy += last.s[k] * last.y[k];
            }
            if (ydy > 0.0 && sy > 0.0)
                gamma = sy / ydy;
        }
        for (std::size_t k = 0; k < n; ++k) d[k] *= gamma * dinv[k];
        for (std::size_t h = 0; h < history.size(); ++h) {
            const auto& pr = history[h];
            double yd = 0.0;
            for (std::size_t k = 0; k < n; ++k) yd += pr.y[k] * d[k];
            const double beta = pr.rho * yd;
            for (std::size_t k = 0; k < n; ++k) d[k] += (alpha[h] - beta) * pr.s[k];
        }

        double gd = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            gd += g[free_ids[k]] * d[k];
        if (!(gd < 0.0)) {  // not a descent direction: restart from the preconditioned gradient
            history.clear();
            gd = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                d[k] = -dinv[k] * g[free_ids[k]];
                gd += g[free_ids[k]] * d[k];
            }
            if (!(gd < 0.0))
                break;
        }

        // unit step is the Newton-like choice; cap it when the preconditioner
        // proposes a jump far beyond the current field scale (nearly flat
        // landscapes can make D^-1 g enormous)
        double dsup = 0.0, usup = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            dsup = std::max(dsup, std::abs(d[k]));
            usup = std::max(usup, std::abs(u[free_ids[k]]));
        }
        double step = 1.0;
        const double max_move = 100.0 * (1.0 + usup);
        if (dsup > max_move)
            step = max_move / dsup;
        bool accepted = false;
        double E_new = E;
        for (int bt = 0; bt < opts.line_search.max_backtracks; ++bt) {
            for (std::size_t k = 0; k < n; ++k)
                u_trial[free_ids[k]] = u[free_ids[k]] + step * d[k];
            E_new = eval_energy(u_trial);
            // the rounding slack keeps progress possible once true decreases
            // drop below the floating-point resolution of the energy
            if (std::isfinite(E_new) &&
                E_new <= E + opts.line_search.sufficient_decrease * step * gd +
                             1e-14 * std::abs(E)) {
                accepted = true;
                break;
            }
            step *= opts.line_search.shrink;
        }
        if (!accepted) {
            if (!history.empty()) {  // retry once from a fresh steepest-descent state
                history.clear();
                continue;
            }
            stalled = true;
            break;
        }

        auto g_new = eval_grad(u_trial);
        Pair pr;
        pr.s.resize(n);
        pr.y.resize(n);
        double sy = 0.0, ss = 0.0, yy = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            pr.s[k] = step * d[k];
            pr.y[k] = g_new[free_ids[k]] - g[free_ids[k]];
            sy += pr.s[k] * pr.y[k];
            ss += pr.s[k] * pr.s[k];
            yy += pr.y[k] * pr.y[k];
        }
        if (sy > 1e-12 * std::sqrt(ss * yy) && sy > 0.0) {
            pr.rho = 1.0 / sy;
            history.push_back(std::move(pr));
            if (static_cast<int>(history.size()) > opts.memory)
                history.pop_front();
        }
        u = u_trial;
        E = E_new;   // nonincreasing up to the rounding slack above
        g = std::move(g_new);
        report.energy_trace.push_back(E);
    }

    report.solution = u;
    report.optimality_residual = residual();
    report.energy = total_energy(mesh, u, params);
    report.iterations = iter;
    report.converged = std::isfinite(E) && !stalled && done(report.optimality_residual, E);
    report.dead_core_fraction = dead_core_fraction(mesh, u, params.t);
    return report;
}

std::vector<SolveReport> continuation_solve(const Mesh& mesh, const ScalarField& boundary_data,
                                            const std::vector<double>& p_schedule, double sigma,
                                            Variant variant, const SolveOptions& opts) {
    for (std::size_t i = 0; i < p_schedule.size(); ++i) {
        if (!(p_schedule[i] > 2.0))
            throw ConfigError("continuation_solve: exponents must exceed 2");
        if (i > 0 && !(p_schedule[i] > p_schedule[i - 1]))
            throw ConfigError("continuation_solve: schedule must be strictly increasing");
    }
    std::vector<SolveReport> reports;
    reports.reserve(p_schedule.size());
    SolveOptions step_opts = opts;
    for (double p : p_schedule) {
        const EnergyParams params = params_for(p, sigma, variant);
        reports.push_back(solve_dirichlet(mesh, boundary_data, params, step_opts));
        if (opts.continuation)
            step_opts.initial = reports.back().solution;
    }
    return reports;
}

}  // namespace tpe

#pragma once

#include <optional>
#include <vector>

#include "tpe/energy.hpp"
#include "tpe/mesh.hpp"

namespace tpe {

struct LineSearchOptions {
    double sufficient_decrease = 1e-4;
    double shrink = 0.5;
    int max_backtracks = 60;
};

struct SolveOptions {
    double grad_tol = 1e-8;     // sup-norm of masked gradient, relative to max(1,|E|)
    int max_iters = 5000;
    int memory = 10;            // quasi-Newton history length
    LineSearchOptions line_search;
    bool continuation = true;
    std::optional<ScalarField> initial;  // overrides the transfinite initializer
};

struct SolveReport {
    ScalarField solution;
    double energy = 0.0;               // reported energy (E_p^sigma or Jensen value)
    double optimality_residual = 0.0;  // sup-norm masked gradient of the scaled objective
    int iterations = 0;
    bool converged = false;
    double dead_core_fraction = 0.0;   // area fraction of elements with |grad|^2 <= t
    std::vector<double> energy_trace;  // internal objective at accepted iterates,
                                       // nonincreasing up to rounding slack
};

/// Transfinite (Coons) blend of the boundary data; the documented, fixed
/// initializer.  Reproduces bilinear data exactly and is affine-exact.
ScalarField transfinite_init(const Mesh& mesh, const ScalarField& boundary_data);

/// Minimizes the discrete energy over interior vertex values with Dirichlet
/// values imposed by elimination.  Limited-memory BFGS with backtracking on
/// the 1/p-scaled (and, for Jensen variants, source-normalized) objective.
/// Non-convergence is reported, not thrown.
SolveReport solve_dirichlet(const Mesh& mesh, const ScalarField& boundary_data,
                            const EnergyParams& params, const SolveOptions& opts = {});

/// Warm-started solves along a strictly increasing p schedule.
/// Jensen variants recompute source_scale = sigma^(p-4) at each p.
std::vector<SolveReport> continuation_solve(const Mesh& mesh, const ScalarField& boundary_data,
                                            const std::vector<double>& p_schedule, double sigma,
                                            Variant variant, const SolveOptions& opts = {});

/// Sup-norm of the interior-masked gradient of the scaled objective.
double optimality_residual(const Mesh& mesh, const ScalarField& field,
                           const EnergyParams& params);

/// Parameters for one solve from (p, sigma, variant) under the module's
/// threshold conventions: plain uses t = sigma, Jensen variants use
/// t = sigma^2 and source_scale = sigma^(p-4).
EnergyParams params_for(double p, double sigma, Variant variant);

}  // namespace tpe

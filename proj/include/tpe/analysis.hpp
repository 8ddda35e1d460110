#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tpe/energy.hpp"
#include "tpe/mesh.hpp"

namespace tpe {

struct NodeDerivatives {
    Vec2 gradient;
    double uxx = 0.0;
    double uyy = 0.0;
    double uxy = 0.0;  // symmetric by construction
    double laplacian() const { return uxx + uyy; }
    double inf_laplacian() const {
        return gradient.x * gradient.x * uxx + 2.0 * gradient.x * gradient.y * uxy +
               gradient.y * gradient.y * uyy;
    }
};

enum class EquationKind {
    inf_laplace,
    p_laplace,
    trunc_p,             // truncated p-Laplace operator, t = sigma
    trunc_limit,         // {|grad|^2 - sigma}_+ * inf-Laplacian
    jensen_upper_p,      // t = sigma^2, rhs -sigma^(p-4)
    jensen_lower_p,      // t = sigma^2, rhs +sigma^(p-4)
    jensen_upper_limit,  // max{2 sigma^2 - |grad|^2, inf-Laplacian}
    jensen_lower_limit,  // min{|grad| - 2 sigma^2, inf-Laplacian} as printed
};

EquationKind equation_from_string(const std::string& s);
std::string to_string(EquationKind k);

struct StencilError : std::exception {
    std::string message;
    explicit StencilError(std::string m) : message(std::move(m)) {}
    const char* what() const noexcept override { return message.c_str(); }
};

/// Second-order central differences at grid node (i,j); the full 3x3 stencil
/// must lie in the grid.
NodeDerivatives node_derivatives(const Mesh& mesh, const ScalarField& field, int i, int j);

/// Left-hand side minus right-hand side of the named equation at node (i,j).
double equation_residual(const Mesh& mesh, const ScalarField& field, int i, int j,
                         EquationKind kind, const EnergyParams& params);

/// Companion to jensen_lower_limit with the gradient squared, matching the
/// upper equation's form.  Reported alongside, not instead.
double jensen_lower_limit_squared_residual(const Mesh& mesh, const ScalarField& field, int i,
                                           int j, const EnergyParams& params);

struct ResidualScan {
    double max_abs = 0.0;
    int nodes_checked = 0;
};

/// Max |residual| over interior nodes whose 3x3 stencil is interior and whose
/// gradient stays outside the margin band |grad|^2 in [t-delta, t+delta] with
/// delta = 0.05*max(1,t); the truncation boundary is where the differences are
/// least trustworthy.
ResidualScan residual_scan(const Mesh& mesh, const ScalarField& field, EquationKind kind,
                           const EnergyParams& params);

struct DeadCoreMask {
    std::vector<char> in_core;  // per element, |grad|^2 <= t
    double fraction(const Mesh& mesh) const;
};

DeadCoreMask dead_core(const Mesh& mesh, const ScalarField& field, double t);

struct OrderingReport {
    bool pass = true;
    double max_violation = 0.0;
    int checked_vertices = 0;
    std::vector<int> violating_vertices;
};

/// Verifies u1 <= u2 + slack at every vertex all of whose adjacent elements
/// lie outside both dead cores.
OrderingReport comparison_check(const Mesh& mesh, const ScalarField& u1, const ScalarField& u2,
                                double t, double slack);

struct SandwichReport {
    bool pass = true;
    double max_violation = 0.0;
    int checked_vertices = 0;
};

/// u_minus <= u <= u_plus with slack on vertices outside the union of the
/// three dead cores.
SandwichReport sandwich_check(const Mesh& mesh, const ScalarField& u_minus, const ScalarField& u,
                              const ScalarField& u_plus, double t, double slack);

/// Max-vertex |u_plus - u_minus| (discrete ess.sup).
double stability_gap(const ScalarField& u_plus, const ScalarField& u_minus);

struct AmleReport {
    bool pass_linear = true;    // {|grad| - sqrt(t)}_+ form
    bool pass_squared = true;   // {|grad|^2 - t}_+ form
    double worst_linear = 0.0;  // most negative (sup_w - sup_u); >= -slack when passing
    double worst_squared = 0.0;
    int perturbations = 0;
};

/// Checks that u minimizes the truncated sup-gradient over the elements fully
/// inside V against each u + perturbation, slack 1e-10, in both norm forms.
AmleReport amle_check(const Mesh& mesh, const ScalarField& u, double t,
                      const std::vector<int>& subdomain_vertices,
                      const std::vector<ScalarField>& perturbations);

/// Random hat-bump and radial-bump perturbations supported in the interior of
/// the subdomain; amplitudes scale with the mesh size.  Seeded, deterministic.
std::vector<ScalarField> make_bump_perturbations(const Mesh& mesh,
                                                 const std::vector<int>& subdomain_vertices,
                                                 int count, std::uint64_t seed);

struct HolderReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

/// lhs = p-root energy at q, rhs = |Omega|^(1/q - 1/p) * p-root energy at p,
/// pass when lhs <= rhs + 1e-12.  Requires 2 < q <= p.
HolderReport holder_check(const Mesh& mesh, const ScalarField& field, double q, double p,
                          double t);

}  // namespace tpe

#include "tpe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_set>

namespace tpe {

EquationKind equation_from_string(const std::string& s) {
    if (s == "inf_laplace") return EquationKind::inf_laplace;
    if (s == "p_laplace") return EquationKind::p_laplace;
    if (s == "trunc_p") return EquationKind::trunc_p;
    if (s == "trunc_limit") return EquationKind::trunc_limit;
    if (s == "jensen_upper_p") return EquationKind::jensen_upper_p;
    if (s == "jensen_lower_p") return EquationKind::jensen_lower_p;
    if (s == "jensen_upper_limit") return EquationKind::jensen_upper_limit;
    if (s == "jensen_lower_limit") return EquationKind::jensen_lower_limit;
    throw ConfigError("unknown equation: " + s);
}

std::string to_string(EquationKind k) {
    switch (k) {
        case EquationKind::inf_laplace: return "inf_laplace";
        case EquationKind::p_laplace: return "p_laplace";
        case EquationKind::trunc_p: return "trunc_p";
        case EquationKind::trunc_limit: return "trunc_limit";
        case EquationKind::jensen_upper_p: return "jensen_upper_p";
        case EquationKind::jensen_lower_p: return "jensen_lower_p";
        case EquationKind::jensen_upper_limit: return "jensen_upper_limit";
        case EquationKind::jensen_lower_limit: return "jensen_lower_limit";
    }
    return "?";
}

NodeDerivatives node_derivatives(const Mesh& mesh, const ScalarField& field, int i, int j) {
    if (i < 1 || i > mesh.nx - 1 || j < 1 || j > mesh.ny - 1)
        throw StencilError("node_derivatives: 3x3 stencil off grid");
    const double dx = mesh.dx();
    const double dy = mesh.dy();
    const auto v = [&](int ii, int jj) { return field[mesh.vid(ii, jj)]; };
    NodeDerivatives nd;
    nd.gradient.x = (v(i + 1, j) - v(i - 1, j)) / (2.0 * dx);
    nd.gradient.y = (v(i, j + 1) - v(i, j - 1)) / (2.0 * dy);
    nd.uxx = (v(i + 1, j) - 2.0 * v(i, j) + v(i - 1, j)) / (dx * dx);
    nd.uyy = (v(i, j + 1) - 2.0 * v(i, j) + v(i, j - 1)) / (dy * dy);
    nd.uxy = (v(i + 1, j + 1) - v(i + 1, j - 1) - v(i - 1, j + 1) + v(i - 1, j - 1)) /
             (4.0 * dx * dy);
    return nd;
}

namespace {

double pos_pow(double s, double q) {  // {s}_+^q with the 0-for-nonpositive convention
    return s <= 0.0 ? 0.0 : std::pow(s, q);
}

}  // namespace

double equation_residual(const Mesh& mesh, const ScalarField& field, int i, int j,
                         EquationKind kind, const EnergyParams& params) {
    const NodeDerivatives nd = node_derivatives(mesh, field, i, j);
    const double g2 = norm2(nd.gradient);
    const double p = params.p;
    const double t = params.t;
    switch (kind) {
        case EquationKind::inf_laplace:
            return nd.inf_laplacian();
        case EquationKind::p_laplace:
            return pos_pow(g2, 0.5 * (p - 4.0)) *
                   (g2 * nd.laplacian() + (p - 2.0) * nd.inf_laplacian());
        case EquationKind::trunc_p:
            return pos_pow(g2 - t, 0.5 * (p - 4.0)) *
                   (std::max(g2 - t, 0.0) * nd.laplacian() + (p - 2.0) * nd.inf_laplacian());
        case EquationKind::trunc_limit:
            return std::max(g2 - t, 0.0) * nd.inf_laplacian();
        case EquationKind::jensen_upper_p:
            return pos_pow(g2 - t, 0.5 * (p - 4.0)) *
                       ((g2 - t) * nd.laplacian() + (p - 2.0) * nd.inf_laplacian()) +
                   params.source_scale;
        case EquationKind::jensen_lower_p:
            return pos_pow(g2 - t, 0.5 * (p - 4.0)) *
                       ((g2 - t) * nd.laplacian() + (p - 2.0) * nd.inf_laplacian()) -
                   params.source_scale;
        case EquationKind::jensen_upper_limit:
            return std::max(2.0 * t - g2, nd.inf_laplacian());
        case EquationKind::jensen_lower_limit:
            return std::min(std::sqrt(g2) - 2.0 * t, nd.inf_laplacian());
    }
    return 0.0;
}

double jensen_lower_limit_squared_residual(const Mesh& mesh, const ScalarField& field, int i,
                                           int j, const EnergyParams& params) {
    const NodeDerivatives nd = node_derivatives(mesh, field, i, j);
    return std::min(norm2(nd.gradient) - 2.0 * params.t, nd.inf_laplacian());
}

ResidualScan residual_scan(const Mesh& mesh, const ScalarField& field, EquationKind kind,
                           const EnergyParams& params) {
    ResidualScan scan;
    const double delta = 0.05 * std::max(1.0, params.t);
    for (int j = 2; j <= mesh.ny - 2; ++j) {
        for (int i = 2; i <= mesh.nx - 2; ++i) {
            const double g2 = norm2(node_derivatives(mesh, field, i, j).gradient);
            if (g2 >= params.t - delta && g2 <= params.t + delta)
                continue;
            scan.max_abs =
                std::max(scan.max_abs, std::abs(equation_residual(mesh, field, i, j, kind, params)));
            ++scan.nodes_checked;
        }
    }
    return scan;
}

double DeadCoreMask::fraction(const Mesh& mesh) const {
    double core = 0.0, total = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        total += mesh.element_area[e];
        if (in_core[e]) core += mesh.element_area[e];
    }
    return total > 0.0 ? core / total : 0.0;
}

DeadCoreMask dead_core(const Mesh& mesh, const ScalarField& field, double t) {
    DeadCoreMask mask;
    mask.in_core.resize(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e)
        mask.in_core[e] = norm2(element_gradient(mesh, field, e)) <= t;
    return mask;
}

OrderingReport comparison_check(const Mesh& mesh, const ScalarField& u1, const ScalarField& u2,
                                double t, double slack) {
    if (u1.size() != u2.size() || u1.size() != static_cast<std::size_t>(mesh.vertex_count()))
        throw MeshError("comparison_check: field/mesh mismatch");
    const DeadCoreMask m1 = dead_core(mesh, u1, t);
    const DeadCoreMask m2 = dead_core(mesh, u2, t);
    OrderingReport report;
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        bool eligible = !mesh.vertex_elements[v].empty();
        for (int e : mesh.vertex_elements[v])
            if (m1.in_core[e] || m2.in_core[e]) {
                eligible = false;
                break;
            }
        if (!eligible) continue;
        ++report.checked_vertices;
        const double excess = u1[v] - u2[v] - slack;
        if (excess > 0.0) {
            report.pass = false;
            report.max_violation = std::max(report.max_violation, excess);
            report.violating_vertices.push_back(v);
        }
    }
    return report;
}

SandwichReport sandwich_check(const Mesh& mesh, const ScalarField& u_minus, const ScalarField& u,
                              const ScalarField& u_plus, double t, double slack) {
    if (u_minus.size() != u.size() || u_plus.size() != u.size())
        throw MeshError("sandwich_check: field size mismatch");
    const DeadCoreMask mm = dead_core(mesh, u_minus, t);
    const DeadCoreMask m0 = dead_core(mesh, u, t);
    const DeadCoreMask mp = dead_core(mesh, u_plus, t);
    SandwichReport report;
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        bool eligible = !mesh.vertex_elements[v].empty();
        for (int e : mesh.vertex_elements[v])
            if (mm.in_core[e] || m0.in_core[e] || mp.in_core[e]) {
                eligible = false;
                break;
            }
        if (!eligible) continue;
        ++report.checked_vertices;
        const double lower = u_minus[v] - u[v] - slack;
        const double upper = u[v] - u_plus[v] - slack;
        const double worst = std::max(lower, upper);
        if (worst > 0.0) {
            report.pass = false;
            report.max_violation = std::max(report.max_violation, worst);
        }
    }
    return report;
}

double stability_gap(const ScalarField& u_plus, const ScalarField& u_minus) {
    return sup_distance(u_plus, u_minus);
}

namespace {

struct SupPair {
    double linear = 0.0;
    double squared = 0.0;
};

SupPair truncated_sup(const Mesh& mesh, const ScalarField& f, double t,
                      const std::vector<int>& elems) {
    SupPair s;
    const double root_t = std::sqrt(t);
    for (int e : elems) {
        const double g = std::sqrt(norm2(element_gradient(mesh, f, e)));
        s.linear = std::max(s.linear, std::max(g - root_t, 0.0));
        s.squared = std::max(s.squared, std::max(g * g - t, 0.0));
    }
    return s;
}

}  // namespace

AmleReport amle_check(const Mesh& mesh, const ScalarField& u, double t,
                      const std::vector<int>& subdomain_vertices,
                      const std::vector<ScalarField>& perturbations) {
    std::unordered_set<int> in_v(subdomain_vertices.begin(), subdomain_vertices.end());
    std::vector<int> elems;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& tri = mesh.elements[e];
        if (in_v.count(tri[0]) && in_v.count(tri[1]) && in_v.count(tri[2]))
            elems.push_back(e);
    }
    if (elems.empty())
        throw MeshError("amle_check: subdomain induces no elements");

    constexpr double kSlack = 1e-10;
    const SupPair base = truncated_sup(mesh, u, t, elems);
    AmleReport report;
    report.worst_linear = std::numeric_limits<double>::infinity();
    report.worst_squared = std::numeric_limits<double>::infinity();
    ScalarField w = u;
    for (const auto& pert : perturbations) {
        for (std::size_t i = 0; i < u.size(); ++i)
            w.values[i] = u[i] + pert[i];
        const SupPair sw = truncated_sup(mesh, w, t, elems);
        report.worst_linear = std::min(report.worst_linear, sw.linear - base.linear);
        report.worst_squared = std::min(report.worst_squared, sw.squared - base.squared);
        ++report.perturbations;
    }
    if (report.perturbations == 0) {
        report.worst_linear = 0.0;
        report.worst_squared = 0.0;
    }
    report.pass_linear = report.worst_linear >= -kSlack;
    report.pass_squared = report.worst_squared >= -kSlack;
    return report;
}

std::vector<ScalarField> make_bump_perturbations(const Mesh& mesh,
                                                 const std::vector<int>& subdomain_vertices,
                                                 int count, std::uint64_t seed) {
    std::unordered_set<int> in_v(subdomain_vertices.begin(), subdomain_vertices.end());
    // deep vertices: the whole (2R+1)^2 grid patch stays inside the subdomain
    // and off the domain boundary, so bumps of radius R vanish on its boundary
    const auto deep = [&](int i, int j, int radius) {
        for (int dj = -radius; dj <= radius; ++dj)
            for (int di = -radius; di <= radius; ++di) {
                const int ii = i + di, jj = j + dj;
                if (ii < 1 || ii > mesh.nx - 1 || jj < 1 || jj > mesh.ny - 1)
                    return false;
                if (!in_v.count(mesh.vid(ii, jj)))
                    return false;
            }
        return true;
    };

    std::vector<std::pair<int, int>> hat_centers, radial_centers;
    constexpr int kRadialCells = 2;
    for (int j = 1; j < mesh.ny; ++j)
        for (int i = 1; i < mesh.nx; ++i) {
            if (!in_v.count(mesh.vid(i, j))) continue;
            if (deep(i, j, 1)) hat_centers.emplace_back(i, j);
            if (deep(i, j, kRadialCells)) radial_centers.emplace_back(i, j);
        }
    if (hat_centers.empty())
        throw MeshError("make_bump_perturbations: subdomain has no interior");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(0.3, 1.0);
    std::uniform_int_distribution<int> sign(0, 1);
    std::vector<ScalarField> perts;
    perts.reserve(count);
    for (int k = 0; k < count; ++k) {
        ScalarField pert(mesh.vertex_count(), 0.0);
        const bool radial = !radial_centers.empty() && (k % 2 == 1);
        const double a = (sign(rng) ? 1.0 : -1.0) * amp(rng) * mesh.h;
        if (!radial) {
            std::uniform_int_distribution<std::size_t> pick(0, hat_centers.size() - 1);
            const auto [ci, cj] = hat_centers[pick(rng)];
            pert[mesh.vid(ci, cj)] = a;
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, radial_centers.size() - 1);
            const auto [ci, cj] = radial_centers[pick(rng)];
            const Vec2 c = mesh.vertices[mesh.vid(ci, cj)];
            const double radius = kRadialCells * mesh.h;
            for (int dj = -kRadialCells; dj <= kRadialCells; ++dj)
                for (int di = -kRadialCells; di <= kRadialCells; ++di) {
                    const int vid = mesh.vid(ci + di, cj + dj);
                    const double r = std::sqrt(norm2(mesh.vertices[vid] - c));
                    if (r < radius) {
                        const double s = std::cos(0.5 * M_PI * r / radius);
                        pert[vid] = kRadialCells * a * s * s;
                    }
                }
        }
        perts.push_back(std::move(pert));
    }
    return perts;
}

HolderReport holder_check(const Mesh& mesh, const ScalarField& field, double q, double p,
                          double t) {
    if (!(q > 2.0) || !(q <= p))
        throw ConfigError("holder_check: requires 2 < q <= p");
    HolderReport report;
    const double area = pairwise_sum(mesh.element_area);
    report.lhs = total_energy(mesh, field, make_params(q, t, Variant::plain, 0.0, EnergyForm::p_root));
    report.rhs = std::pow(area, 1.0 / q - 1.0 / p) *
                 total_energy(mesh, field, make_params(p, t, Variant::plain, 0.0, EnergyForm::p_root));
    report.pass = report.lhs <= report.rhs + 1e-12;
    return report;
}

}  // namespace tpe

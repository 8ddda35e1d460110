#include "tpe/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tpe {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::plain: return "plain";
        case Variant::jensen_upper: return "jensen_upper";
        case Variant::jensen_lower: return "jensen_lower";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    if (s == "plain") return Variant::plain;
    if (s == "jensen_upper") return Variant::jensen_upper;
    if (s == "jensen_lower") return Variant::jensen_lower;
    throw ConfigError("unknown variant: " + s);
}

EnergyParams make_params(double p, double t, Variant variant, double source_scale,
                         EnergyForm form) {
    if (!(p > 2.0))
        throw ConfigError("EnergyParams: p must exceed 2");
    if (!(t >= 0.0) || !std::isfinite(t))
        throw ConfigError("EnergyParams: threshold must be finite and >= 0");
    if (!std::isfinite(source_scale) || source_scale < 0.0)
        throw ConfigError("EnergyParams: source_scale must be finite and >= 0");
    if (variant == Variant::plain && source_scale != 0.0)
        throw ConfigError("EnergyParams: plain variant requires source_scale = 0");
    EnergyParams params;
    params.p = p;
    params.t = t;
    params.variant = variant;
    params.source_scale = source_scale;
    params.form = form;
    return params;
}

EnergyParams make_jensen_params(double p, double sigma, Variant variant, EnergyForm form) {
    if (variant == Variant::plain)
        throw ConfigError("make_jensen_params: variant must be a Jensen variant");
    if (!(sigma >= 0.0))
        throw ConfigError("make_jensen_params: sigma must be >= 0");
    const double scale = (sigma == 0.0) ? 0.0 : std::pow(sigma, p - 4.0);
    if (sigma > 0.0 && scale == 0.0)
        throw ConfigError("make_jensen_params: sigma^(p-4) underflows double precision");
    if (!std::isfinite(scale))
        throw ConfigError("make_jensen_params: sigma^(p-4) overflows double precision");
    return make_params(p, sigma * sigma, variant, scale, form);
}

Density density(Vec2 a, const EnergyParams& params) {
    Density d;
    const double s = norm2(a) - params.t;
    if (s <= 0.0)
        return d;
    d.value = std::pow(s, 0.5 * params.p);
    d.gradient = (params.p * std::pow(s, 0.5 * params.p - 1.0)) * a;
    return d;
}

namespace {

// log of the integral of {|g|^2-t}_+^{p/2}, via log-sum-exp over elements;
// returns -inf when every element is inside the dead core.
double log_integral_energy(const Mesh& mesh, const ScalarField& field, double p, double t,
                           double* sup_out) {
    std::vector<double> logs;
    logs.reserve(mesh.element_count());
    std::vector<double> areas;
    areas.reserve(mesh.element_count());
    double max_log = -std::numeric_limits<double>::infinity();
    double sup = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const double s = norm2(element_gradient(mesh, field, e)) - t;
        if (s <= 0.0) continue;
        sup = std::max(sup, s);
        const double l = 0.5 * p * std::log(s);
        logs.push_back(l);
        areas.push_back(mesh.element_area[e]);
        max_log = std::max(max_log, l);
    }
    if (sup_out) *sup_out = std::sqrt(sup);
    if (logs.empty())
        return -std::numeric_limits<double>::infinity();
    std::vector<double> terms(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i)
        terms[i] = areas[i] * std::exp(logs[i] - max_log);
    return max_log + std::log(pairwise_sum(terms));
}

}  // namespace

double total_energy(const Mesh& mesh, const ScalarField& field, const EnergyParams& params) {
    if (field.size() != static_cast<std::size_t>(mesh.vertex_count()))
        throw MeshError("total_energy: field size mismatch");

    if (params.form == EnergyForm::sup) {
        double sup = 0.0;
        log_integral_energy(mesh, field, params.p, params.t, &sup);
        return sup;
    }
    if (params.form == EnergyForm::p_root) {
        const double li = log_integral_energy(mesh, field, params.p, params.t, nullptr);
        return std::isinf(li) ? 0.0 : std::exp(li / params.p);
    }

    // extended precision here and in the gradient assembly: at large p the
    // per-element values span many orders of magnitude and double rounding in
    // the accumulation becomes the accuracy floor of the whole solve
    long double acc = 0.0L;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const long double s =
            static_cast<long double>(norm2(element_gradient(mesh, field, e))) - params.t;
        if (s <= 0.0L) continue;
        acc += mesh.element_area[e] * powl(s, 0.5L * params.p);
    }
    const double grad_term = static_cast<double>(acc);

    if (params.variant == Variant::plain)
        return grad_term;
    const double sign = (params.variant == Variant::jensen_upper) ? -1.0 : 1.0;
    return grad_term / params.p + sign * params.source_scale * lumped_integral(mesh, field);
}

std::vector<double> energy_gradient(const Mesh& mesh, const ScalarField& field,
                                    const EnergyParams& params) {
    if (field.size() != static_cast<std::size_t>(mesh.vertex_count()))
        throw MeshError("energy_gradient: field size mismatch");

    const double scale = (params.variant == Variant::plain) ? 1.0 : 1.0 / params.p;
    std::vector<long double> acc(mesh.vertex_count(), 0.0L);
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Vec2 g = element_gradient(mesh, field, e);
        const long double s = static_cast<long double>(norm2(g)) - params.t;
        if (s <= 0.0L)
            continue;
        const long double dd = params.p * powl(s, 0.5L * params.p - 1.0L);
        const auto& t = mesh.elements[e];
        const Vec2 a = mesh.vertices[t[0]];
        const Vec2 b = mesh.vertices[t[1]];
        const Vec2 c = mesh.vertices[t[2]];
        // d grad / d u_k are the P1 shape gradients
        const double area2 = 2.0 * mesh.element_area[e];
        const Vec2 dg[3] = {
            {(b.y - c.y) / area2, (c.x - b.x) / area2},
            {(c.y - a.y) / area2, (a.x - c.x) / area2},
            {(a.y - b.y) / area2, (b.x - a.x) / area2},
        };
        const long double w = scale * mesh.element_area[e] * dd;
        for (int k = 0; k < 3; ++k)
            acc[t[k]] += w * (static_cast<long double>(g.x) * dg[k].x +
                              static_cast<long double>(g.y) * dg[k].y);
    }
    std::vector<double> grad(mesh.vertex_count());
    for (int i = 0; i < mesh.vertex_count(); ++i)
        grad[i] = static_cast<double>(acc[i]);
    if (params.variant != Variant::plain) {
        const double sign = (params.variant == Variant::jensen_upper) ? -1.0 : 1.0;
        for (int i = 0; i < mesh.vertex_count(); ++i)
            grad[i] += sign * params.source_scale * mesh.lumped_area[i];
    }
    return grad;
}

std::vector<double> energy_hessian_diag(const Mesh& mesh, const ScalarField& field,
                                        const EnergyParams& params) {
    if (field.size() != static_cast<std::size_t>(mesh.vertex_count()))
        throw MeshError("energy_hessian_diag: field size mismatch");

    const double scale = (params.variant == Variant::plain) ? 1.0 : 1.0 / params.p;
    const double p = params.p;
    std::vector<long double> acc(mesh.vertex_count(), 0.0L);
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Vec2 g = element_gradient(mesh, field, e);
        const long double s = static_cast<long double>(norm2(g)) - params.t;
        if (s <= 0.0L)
            continue;
        // D^2 f = p s^(p/2-1) I + p(p-2) s^(p/2-2) g (x) g
        const long double c1 = p * powl(s, 0.5L * p - 1.0L);
        const long double c2 = p * (p - 2.0) * powl(s, 0.5L * p - 2.0L);
        const auto& t = mesh.elements[e];
        const Vec2 a = mesh.vertices[t[0]];
        const Vec2 b = mesh.vertices[t[1]];
        const Vec2 c = mesh.vertices[t[2]];
        const double area2 = 2.0 * mesh.element_area[e];
        const Vec2 dg[3] = {
            {(b.y - c.y) / area2, (c.x - b.x) / area2},
            {(c.y - a.y) / area2, (a.x - c.x) / area2},
            {(a.y - b.y) / area2, (b.x - a.x) / area2},
        };
        const long double w = scale * mesh.element_area[e];
        for (int k = 0; k < 3; ++k) {
            const long double gd = static_cast<long double>(g.x) * dg[k].x +
                                   static_cast<long double>(g.y) * dg[k].y;
            const long double nn = static_cast<double>(dg[k].x) * dg[k].x + dg[k].y * dg[k].y;
            acc[t[k]] += w * (c1 * nn + c2 * gd * gd);
        }
    }
    std::vector<double> diag(mesh.vertex_count());
    for (int i = 0; i < mesh.vertex_count(); ++i)
        diag[i] = static_cast<double>(acc[i]);
    return diag;
}

double phi_ab(Vec2 a, Vec2 b, const EnergyParams& params) {
    const auto flux = [&](Vec2 v) -> Vec2 {
        const double s = norm2(v) - params.t;
        if (s <= 0.0) return {0.0, 0.0};
        return std::pow(s, 0.5 * params.p - 1.0) * v;
    };
    return dot(flux(a) - flux(b), a - b);
}

double convexity_gap(Vec2 a, Vec2 b, const EnergyParams& params) {
    const double fa = density(a, params).value;
    const double fb = density(b, params).value;
    const double sb = norm2(b) - params.t;
    const double sub = (sb <= 0.0) ? 0.0 : params.p * std::pow(sb, 0.5 * params.p - 1.0);
    return fa - fb - sub * dot(b, a - b);
}

}  // namespace tpe

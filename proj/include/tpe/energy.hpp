#pragma once

#include <string>
#include <vector>

#include "tpe/mesh.hpp"

namespace tpe {

enum class Variant { plain, jensen_upper, jensen_lower };
enum class EnergyForm { integral, p_root, sup };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct ConfigError : std::exception {
    std::string message;
    explicit ConfigError(std::string m) : message(std::move(m)) {}
    const char* what() const noexcept override { return message.c_str(); }
};

/// Parameters of the truncated density {|a|^2 - t}_+^{p/2}.
///
/// The threshold is stored as a single number t; callers set t = sigma for
/// the plain energy and t = sigma^2 for the Jensen variants, so there is no
/// hidden convention switch inside the module.  source_scale holds the
/// sigma^(p-4) coefficient of the Jensen linear term explicitly.
struct EnergyParams {
    double p = 4.0;
    double t = 0.0;
    Variant variant = Variant::plain;
    double source_scale = 0.0;
    EnergyForm form = EnergyForm::integral;
};

/// Validates p > 2, t >= 0 and the plain/source coupling.
EnergyParams make_params(double p, double t, Variant variant = Variant::plain,
                         double source_scale = 0.0,
                         EnergyForm form = EnergyForm::integral);

/// Jensen parameters from sigma: t = sigma^2, source_scale = sigma^(p-4).
/// Rejects configurations where sigma^(p-4) underflows to zero while being
/// mathematically nonzero.
EnergyParams make_jensen_params(double p, double sigma, Variant variant,
                                EnergyForm form = EnergyForm::integral);

struct Density {
    double value = 0.0;
    Vec2 gradient;  // d value / d a
};

/// value = {|a|^2 - t}_+^{p/2}, gradient = p {|a|^2 - t}_+^{p/2-1} a,
/// with {s}_+^q = 0 for s <= 0.
Density density(Vec2 a, const EnergyParams& params);

/// form=integral: per-element exact integral of the density; Jensen variants
/// scale the gradient term by 1/p and add -/+ source_scale * lumped integral
/// of the field.  form=p_root: the L^p norm of {|grad|^2-t}_+^{1/2}, evaluated
/// in log space so large p does not overflow.  form=sup: max over elements of
/// {|grad|^2-t}_+^{1/2}.
double total_energy(const Mesh& mesh, const ScalarField& field, const EnergyParams& params);

/// Exact derivative of total_energy(form=integral) with respect to each
/// vertex value.  Boundary entries are included; the solver masks them.
std::vector<double> energy_gradient(const Mesh& mesh, const ScalarField& field,
                                    const EnergyParams& params);

/// Diagonal of the second derivative of total_energy(form=integral) with
/// respect to the vertex values.  Used as a preconditioner; entries are zero
/// on dead-core vertices (the linear Jensen term contributes no curvature).
std::vector<double> energy_hessian_diag(const Mesh& mesh, const ScalarField& field,
                                        const EnergyParams& params);

/// <{|a|^2-t}_+^{p/2-1} a - {|b|^2-t}_+^{p/2-1} b, a-b>, the monotonicity
/// quantity of the comparison argument.  Nonnegative.
double phi_ab(Vec2 a, Vec2 b, const EnergyParams& params);

/// f(a) - f(b) - p {|b|^2-t}_+^{p/2-1} <b, a-b> for the density f.
/// Nonnegative by convexity.
double convexity_gap(Vec2 a, Vec2 b, const EnergyParams& params);

}  // namespace tpe

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tpe/analysis.hpp"
#include "tpe/energy.hpp"
#include "tpe/mesh.hpp"
#include "tpe/solver.hpp"

namespace tpe {

/// Named boundary-data catalog entry.  Known names and parameters:
///   affine   [gx, gy, c]        gx*x + gy*y + c
///   cone     [cx, cy, amp]      amp * |(x,y) - (cx,cy)|
///   aronsson [scale]            scale * (sgn(x)|x|^{4/3} - sgn(y)|y|^{4/3})
///   sinusoid [ax, ay, amp]      amp * sin(ax*x) * sin(ay*y)
struct BoundaryData {
    std::string name = "affine";
    std::vector<double> params;
};

double boundary_value(const BoundaryData& data, Vec2 xy);
/// Catalog entry sampled at every vertex (boundary rows are what solves use;
/// the interior values double as closed-form references).
ScalarField sample_field(const Mesh& mesh, const BoundaryData& data);

struct SweepConfig {
    int nx = 32, ny = 32;
    Rect rect;
    BoundaryData data;
    std::vector<double> p_list;      // strictly increasing, all > 2
    std::vector<double> sigma_list;  // decreasing, all >= 0
    std::vector<Variant> variants = {Variant::plain};
    SolveOptions solver;
    std::uint64_t seed = 0;
    double diagram_tol = 1e-5;
    int jobs = 1;

    void validate() const;
};

struct CellResult {
    double p = 0.0;
    double sigma = 0.0;
    Variant variant = Variant::plain;
    double energy = 0.0;
    double p_root = 0.0;
    double sup = 0.0;
    double residual = 0.0;
    double dead_core_fraction = 0.0;
    bool converged = false;
    std::uint64_t field_hash = 0;
    std::shared_ptr<const ScalarField> field;
};

struct SweepTable {
    SweepConfig config;
    std::vector<CellResult> cells;   // variant-major, then sigma list order, then p ascending
    std::vector<double> distances;   // cells.size()^2 sup-distance matrix, row-major
    // corner cell recomputed along the other edge path: p-continuation at
    // sigma_max, then chaining down sigma at p_max (first variant); the
    // regular cells chain along p within each sigma column
    std::shared_ptr<const ScalarField> corner_via_sigma;

    const CellResult* find(double p, double sigma, Variant variant) const;
    double distance(std::size_t a, std::size_t b) const { return distances[a * cells.size() + b]; }
};

SweepTable run_sweep(const SweepConfig& config);

struct DiagramReport {
    double gap = 0.0;
    bool pass = false;
    double tol = 0.0;
};

/// Sup-distance between the (p_max, sigma_min) field reached by p-continuation
/// inside the sigma_min column and the same cell reached by climbing p at
/// sigma_max and then descending sigma along the p_max row.
DiagramReport diagram_commutation(const SweepTable& table);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int used = 0;
    int dropped = 0;  // nonpositive gaps
};

/// Log-log least squares of gap against sigma.
RateFit stability_rate_fit(const std::vector<double>& sigmas, const std::vector<double>& gaps);

struct GammaReport {
    bool liminf_ok = false;
    bool limsup_ok = false;
    bool sigma_monotone_ok = false;
    double tail_p_root = 0.0;   // p-root energy at the largest p in the sequence
    double sup_energy = 0.0;    // sup-form energy of the limit field
    bool pass() const { return liminf_ok && limsup_ok && sigma_monotone_ok; }
};

/// Energy-value surrogates for the Gamma-limit statements: tail p-root
/// energies against the sup energy of the limit field, the constant recovery
/// sequence, and monotonicity of the truncated density as sigma decreases.
GammaReport gamma_check(const Mesh& mesh, const std::vector<ScalarField>& field_sequence,
                        const std::vector<double>& p_values, const ScalarField& limit_field,
                        double t, double tolerance);

void export_csv(const SweepTable& table, const std::string& path);
void export_json(const SweepTable& table, const std::string& path);
SweepTable import_json(const std::string& path);

/// Flat key-value config file ("key = value", '#' comments).
SweepConfig parse_config_file(const std::string& path);
SweepConfig parse_config_text(const std::string& text);

std::uint64_t field_hash(const ScalarField& field);

}  // namespace tpe

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace tpe {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm2(Vec2 a) { return dot(a, a); }

struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
};

/// Structured crossed-diagonal triangulation of a rectangle.
/// Vertices are stored row-major: index = j*(nx+1) + i.  Each grid cell is
/// split along a diagonal whose direction alternates with (i+j) parity, so
/// piecewise-linear gradients are element-wise constant and the truncated
/// energy density is integrated exactly per element.
struct Mesh {
    int nx = 0;
    int ny = 0;
    Rect rect;
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> elements;
    std::vector<char> boundary_mask;           // 1 on perimeter vertices
    std::vector<double> element_area;
    std::vector<double> lumped_area;           // per-vertex, sums to rect area
    std::vector<std::vector<int>> vertex_elements;  // elements touching each vertex
    double h = 0.0;                            // max cell edge length

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int element_count() const { return static_cast<int>(elements.size()); }
    int vid(int i, int j) const { return j * (nx + 1) + i; }
    double dx() const { return rect.width() / nx; }
    double dy() const { return rect.height() / ny; }
};

struct ScalarField {
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(std::size_t n, double v = 0.0) : values(n, v) {}

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

struct GeometryStats {
    double diameter = 0.0;
    double area = 0.0;
    double mean = 0.0;
};

struct MeshError : std::exception {
    std::string message;
    explicit MeshError(std::string m) : message(std::move(m)) {}
    const char* what() const noexcept override { return message.c_str(); }
};

Mesh build_mesh(int nx, int ny, const Rect& rect);

/// Constant gradient of the linear interpolant on one element.
Vec2 element_gradient(const Mesh& mesh, const ScalarField& field, int element);

GeometryStats geometry_stats(const Mesh& mesh, const ScalarField& field);

/// Vertex-lumped integral of the linear interpolant, exact for P1 fields.
double lumped_integral(const Mesh& mesh, const ScalarField& field);

double sup_distance(const ScalarField& a, const ScalarField& b);

/// Text dump: line 1 "FIELD nx ny x0 y0 x1 y1", then row-major vertex
/// values one per line with round-trip precision.
void write_field(const std::string& path, const Mesh& mesh, const ScalarField& field);

struct LoadedField {
    int nx = 0, ny = 0;
    Rect rect;
    ScalarField field;
};
LoadedField read_field(const std::string& path);

/// Deterministic pairwise-tree sum; result independent of chunking.
double pairwise_sum(const double* data, std::size_t n);
double pairwise_sum(const std::vector<double>& v);

}  // namespace tpe

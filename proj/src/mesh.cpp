#include "tpe/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tpe {

Mesh build_mesh(int nx, int ny, const Rect& rect) {
    if (nx < 1 || ny < 1)
        throw MeshError("build_mesh: nx and ny must be positive");
    if (!(rect.x1 > rect.x0) || !(rect.y1 > rect.y0))
        throw MeshError("build_mesh: degenerate rectangle");

    Mesh m;
    m.nx = nx;
    m.ny = ny;
    m.rect = rect;

    const int npx = nx + 1;
    const int npy = ny + 1;
    const double dx = rect.width() / nx;
    const double dy = rect.height() / ny;
    m.h = std::max(dx, dy);

    m.vertices.reserve(static_cast<std::size_t>(npx) * npy);
    m.boundary_mask.assign(static_cast<std::size_t>(npx) * npy, 0);
    for (int j = 0; j < npy; ++j) {
        for (int i = 0; i < npx; ++i) {
            m.vertices.push_back({rect.x0 + i * dx, rect.y0 + j * dy});
            if (i == 0 || j == 0 || i == nx || j == ny)
                m.boundary_mask[m.vid(i, j)] = 1;
        }
    }

    m.elements.reserve(2u * nx * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int v00 = m.vid(i, j);
            const int v10 = m.vid(i + 1, j);
            const int v01 = m.vid(i, j + 1);
            const int v11 = m.vid(i + 1, j + 1);
            if ((i + j) % 2 == 0) {
                m.elements.push_back({v00, v10, v11});
                m.elements.push_back({v00, v11, v01});
            } else {
                m.elements.push_back({v00, v10, v01});
                m.elements.push_back({v10, v11, v01});
            }
        }
    }

    m.element_area.resize(m.elements.size());
    m.lumped_area.assign(m.vertices.size(), 0.0);
    m.vertex_elements.assign(m.vertices.size(), {});
    for (int e = 0; e < m.element_count(); ++e) {
        const auto& t = m.elements[e];
        const Vec2 a = m.vertices[t[0]];
        const Vec2 b = m.vertices[t[1]];
        const Vec2 c = m.vertices[t[2]];
        const double area2 = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        if (area2 <= 0.0)
            throw MeshError("build_mesh: nonpositive element area");
        m.element_area[e] = 0.5 * area2;
        for (int k = 0; k < 3; ++k) {
            m.lumped_area[t[k]] += m.element_area[e] / 3.0;
            m.vertex_elements[t[k]].push_back(e);
        }
    }
    return m;
}

Vec2 element_gradient(const Mesh& mesh, const ScalarField& field, int element) {
    if (element < 0 || element >= mesh.element_count())
        throw MeshError("element_gradient: element index out of range");
    const auto& t = mesh.elements[element];
    const Vec2 a = mesh.vertices[t[0]];
    const Vec2 b = mesh.vertices[t[1]];
    const Vec2 c = mesh.vertices[t[2]];
    const double ua = field[t[0]];
    const double ub = field[t[1]];
    const double uc = field[t[2]];
    const double area2 = 2.0 * mesh.element_area[element];
    // gradient of the P1 interpolant from the edge-normal formula
    Vec2 g;
    g.x = (ua * (b.y - c.y) + ub * (c.y - a.y) + uc * (a.y - b.y)) / area2;
    g.y = (ua * (c.x - b.x) + ub * (a.x - c.x) + uc * (b.x - a.x)) / area2;
    return g;
}

double pairwise_sum(const double* data, std::size_t n) {
    if (n == 0) return 0.0;
    if (n == 1) return data[0];
    if (n == 2) return data[0] + data[1];
    const std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(v.data(), v.size());
}

double lumped_integral(const Mesh& mesh, const ScalarField& field) {
    std::vector<double> terms(mesh.vertex_count());
    for (int i = 0; i < mesh.vertex_count(); ++i)
        terms[i] = mesh.lumped_area[i] * field[i];
    return pairwise_sum(terms);
}

GeometryStats geometry_stats(const Mesh& mesh, const ScalarField& field) {
    GeometryStats s;
    s.diameter = std::hypot(mesh.rect.width(), mesh.rect.height());
    s.area = pairwise_sum(mesh.element_area);
    s.mean = lumped_integral(mesh, field) / s.area;
    return s;
}

double sup_distance(const ScalarField& a, const ScalarField& b) {
    if (a.size() != b.size())
        throw MeshError("sup_distance: field size mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

void write_field(const std::string& path, const Mesh& mesh, const ScalarField& field) {
    std::ofstream out(path);
    if (!out)
        throw MeshError("write_field: cannot open " + path);
    char buf[64];
    out << "FIELD " << mesh.nx << " " << mesh.ny;
    for (double v : {mesh.rect.x0, mesh.rect.y0, mesh.rect.x1, mesh.rect.y1}) {
        std::snprintf(buf, sizeof buf, " %.17g", v);
        out << buf;
    }
    out << "\n";
    for (double v : field.values) {
        std::snprintf(buf, sizeof buf, "%.17g\n", v);
        out << buf;
    }
    if (!out)
        throw MeshError("write_field: write failure on " + path);
}

LoadedField read_field(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw MeshError("read_field: cannot open " + path);
    std::string tag;
    LoadedField lf;
    in >> tag >> lf.nx >> lf.ny >> lf.rect.x0 >> lf.rect.y0 >> lf.rect.x1 >> lf.rect.y1;
    if (tag != "FIELD" || !in)
        throw MeshError("read_field: bad header in " + path);
    const std::size_t n = static_cast<std::size_t>(lf.nx + 1) * (lf.ny + 1);
    lf.field.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(in >> lf.field.values[i]))
            throw MeshError("read_field: truncated data in " + path);
    }
    return lf;
}

}  // namespace tpe

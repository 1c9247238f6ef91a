#pragma once

#include "facematch/core/error.hpp"
#include "facematch/mesh/triangle_mesh.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace facematch {
namespace synth {

using mesh::Face;
using mesh::TriangleMesh;
using mesh::Vec3;

/// A synthetic canonical face template and its landmark vertices.
struct FaceTemplate
{
    TriangleMesh mesh;
    /// Lower-left, lower-right, upper-right, upper-left grid corners.
    std::array<int, 4> corners{};
    int nose_vertex = 0;
};

struct TemplateShape
{
    int cells = 48;
    double half_width = 80.0;
    double half_height = 100.0;
    /// Grid lines are pulled toward the nose by this fraction (0 = uniform grid).
    double density_warp = 0.35;
};

/// Height of the synthetic face surface in mm at normalized (u, v) in [-1, 1]².
inline double face_height(double u, double v)
{
    auto bump = [](double du, double dv, double su, double sv) {
        return std::exp(-(du * du) / su - (dv * dv) / sv);
    };
    const double dome = 45.0 * std::sqrt(std::max(0.0, 1.0 - 0.55 * u * u - 0.35 * v * v));
    const double nose = 22.0 * bump(u, v + 0.05, 0.012, 0.08);
    const double nostrils = 4.0 * (bump(u - 0.1, v + 0.28, 0.006, 0.004) + bump(u + 0.1, v + 0.28, 0.006, 0.004));
    const double eyes = -9.0 * (bump(u - 0.35, v - 0.22, 0.025, 0.012) + bump(u + 0.35, v - 0.22, 0.025, 0.012));
    const double brows = 5.0 * (bump(u - 0.35, v - 0.4, 0.05, 0.004) + bump(u + 0.35, v - 0.4, 0.05, 0.004));
    const double lips = 3.5 * bump(u, v + 0.5, 0.05, 0.004) - 2.5 * bump(u, v + 0.56, 0.04, 0.001);
    const double chin = 4.0 * bump(u, v + 0.8, 0.05, 0.01);
    return dome + nose + nostrils + eyes + brows + lips + chin;
}

/// Grid coordinate in [-1, 1] with lines clustered toward zero.
inline double warp_coordinate(double s, double warp)
{
    return s - warp * std::sin(M_PI * s) / M_PI;
}

/**
 * Regular grid over the face height field with a consistent diagonal and
 * counterclockwise winding seen from +z. Vertex (i, j) has index j * (cells+1) + i.
 */
inline FaceTemplate make_face_template(const TemplateShape& shape = {})
{
    if (shape.cells < 2 || !(shape.half_width > 0.0) || !(shape.half_height > 0.0) ||
        !(shape.density_warp >= 0.0 && shape.density_warp < 1.0)) {
        throw ValidationError("make_face_template: invalid template shape");
    }
    const int n = shape.cells + 1;
    std::vector<Vec3> vertices;
    vertices.reserve(static_cast<std::size_t>(n * n));
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double u = warp_coordinate(-1.0 + 2.0 * i / shape.cells, shape.density_warp);
            const double v = warp_coordinate(-1.0 + 2.0 * j / shape.cells, shape.density_warp);
            vertices.emplace_back(u * shape.half_width, v * shape.half_height, face_height(u, v));
        }
    }
    std::vector<Face> faces;
    faces.reserve(static_cast<std::size_t>(2 * shape.cells * shape.cells));
    for (int j = 0; j < shape.cells; ++j) {
        for (int i = 0; i < shape.cells; ++i) {
            const int a = j * n + i;
            const int b = a + 1;
            const int c = a + n + 1;
            const int d = a + n;
            faces.push_back({a, b, c});
            faces.push_back({a, c, d});
        }
    }
    FaceTemplate t;
    t.mesh = mesh::make_mesh(std::move(vertices), std::move(faces));
    t.corners = {0, n - 1, n * n - 1, n * (n - 1)};
    double best = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < t.mesh.num_vertices(); ++v) {
        if (t.mesh.vertices[static_cast<std::size_t>(v)].z() > best) {
            best = t.mesh.vertices[static_cast<std::size_t>(v)].z();
            t.nose_vertex = v;
        }
    }
    return t;
}

/// Landmarks of an arbitrary disk template: the boundary vertices extreme in
/// the four diagonal directions of the xy plane, and the vertex of largest z.
inline FaceTemplate detect_landmarks(const TriangleMesh& m)
{
    const auto loops = mesh::boundary_loops(m.faces);
    if (loops.size() != 1) {
        throw ValidationError("detect_landmarks: template must have exactly one boundary loop");
    }
    FaceTemplate t;
    t.mesh = m;
    const std::array<std::array<double, 2>, 4> dirs{{{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}}};
    for (std::size_t k = 0; k < 4; ++k) {
        double best = -std::numeric_limits<double>::infinity();
        for (int v : loops.front()) {
            const auto& p = m.vertices[static_cast<std::size_t>(v)];
            const double s = dirs[k][0] * p.x() + dirs[k][1] * p.y();
            if (s > best) {
                best = s;
                t.corners[k] = v;
            }
        }
    }
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = a + 1; b < 4; ++b) {
            if (t.corners[a] == t.corners[b]) {
                throw ValidationError("detect_landmarks: boundary too small for four distinct corners");
            }
        }
    }
    double best = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < m.num_vertices(); ++v) {
        if (m.vertices[static_cast<std::size_t>(v)].z() > best) {
            best = m.vertices[static_cast<std::size_t>(v)].z();
            t.nose_vertex = v;
        }
    }
    return t;
}

} // namespace synth
} // namespace facematch

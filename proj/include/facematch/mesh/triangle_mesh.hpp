#pragma once

#include "facematch/core/digest.hpp"
#include "facematch/core/error.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace facematch {
namespace mesh {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;

/**
 * A triangle mesh with a topology shared across a dataset.
 *
 * Faces are ordered vertex-index triples; the winding of the triples defines
 * the surface orientation. topology_id is a digest of the face list, so two
 * meshes with equal ids can be compared vertex by vertex.
 */
struct TriangleMesh
{
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::string topology_id;

    int num_vertices() const noexcept { return static_cast<int>(vertices.size()); }
    int num_faces() const noexcept { return static_cast<int>(faces.size()); }
};

inline std::string topology_digest(const std::vector<Face>& faces)
{
    Fnv1a h;
    for (const auto& f : faces) {
        for (int v : f) {
            h.update_value(static_cast<std::int32_t>(v));
        }
    }
    return h.hex();
}

inline TriangleMesh make_mesh(std::vector<Vec3> vertices, std::vector<Face> faces)
{
    TriangleMesh m;
    m.vertices = std::move(vertices);
    m.faces = std::move(faces);
    m.topology_id = topology_digest(m.faces);
    return m;
}

/// Undirected edge with first < second.
using Edge = std::pair<int, int>;

inline Edge make_edge(int a, int b) noexcept
{
    return a < b ? Edge{a, b} : Edge{b, a};
}

/// Sorted list of unique undirected edges.
inline std::vector<Edge> unique_edges(const std::vector<Face>& faces)
{
    std::vector<Edge> edges;
    edges.reserve(faces.size() * 3);
    for (const auto& f : faces) {
        for (int k = 0; k < 3; ++k) {
            edges.push_back(make_edge(f[k], f[(k + 1) % 3]));
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

/// Per-vertex sorted neighbor lists.
inline std::vector<std::vector<int>> vertex_adjacency(int num_vertices, const std::vector<Face>& faces)
{
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(num_vertices));
    for (const auto& [a, b] : unique_edges(faces)) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& n : adj) {
        std::sort(n.begin(), n.end());
    }
    return adj;
}

struct ValidationReport
{
    int num_vertices = 0;
    int num_edges = 0;
    int num_faces = 0;
    int euler_characteristic = 0;
    int boundary_loops = 0;
    std::vector<int> out_of_range_faces;
    std::vector<int> degenerate_faces;
    std::vector<Edge> non_manifold_edges;
    std::vector<Edge> winding_violations;

    /// Every invariant of a disk-topology face template holds.
    bool valid() const noexcept
    {
        return out_of_range_faces.empty() && degenerate_faces.empty() && non_manifold_edges.empty() &&
               winding_violations.empty() && euler_characteristic == 1;
    }
};

/// Extracts boundary loops as vertex cycles following the face winding.
/// Assumes a manifold, consistently wound mesh.
inline std::vector<std::vector<int>> boundary_loops(const std::vector<Face>& faces)
{
    std::map<Edge, int> count;
    std::map<int, int> next;
    for (const auto& f : faces) {
        for (int k = 0; k < 3; ++k) {
            ++count[make_edge(f[k], f[(k + 1) % 3])];
        }
    }
    for (const auto& f : faces) {
        for (int k = 0; k < 3; ++k) {
            const int a = f[k];
            const int b = f[(k + 1) % 3];
            if (count[make_edge(a, b)] == 1) {
                next[a] = b;
            }
        }
    }
    std::vector<std::vector<int>> loops;
    std::map<int, bool> seen;
    for (const auto& [start, unused] : next) {
        if (seen[start]) {
            continue;
        }
        std::vector<int> loop;
        int v = start;
        while (!seen[v]) {
            seen[v] = true;
            loop.push_back(v);
            auto it = next.find(v);
            if (it == next.end()) {
                break;
            }
            v = it->second;
        }
        loops.push_back(std::move(loop));
    }
    return loops;
}

inline ValidationReport validate_topology(const TriangleMesh& mesh)
{
    ValidationReport r;
    r.num_vertices = mesh.num_vertices();
    r.num_faces = mesh.num_faces();

    std::map<Edge, std::vector<std::pair<int, int>>> directed; // edge -> (face, +1 if a<b direction)
    for (int fi = 0; fi < mesh.num_faces(); ++fi) {
        const auto& f = mesh.faces[fi];
        bool in_range = true;
        for (int v : f) {
            if (v < 0 || v >= r.num_vertices) {
                in_range = false;
            }
        }
        if (!in_range) {
            r.out_of_range_faces.push_back(fi);
            continue;
        }
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
            r.degenerate_faces.push_back(fi);
            continue;
        }
        for (int k = 0; k < 3; ++k) {
            const int a = f[k];
            const int b = f[(k + 1) % 3];
            directed[make_edge(a, b)].emplace_back(fi, a < b ? 1 : -1);
        }
    }
    r.num_edges = static_cast<int>(directed.size());
    for (const auto& [edge, uses] : directed) {
        if (uses.size() > 2) {
            r.non_manifold_edges.push_back(edge);
        } else if (uses.size() == 2 && uses[0].second == uses[1].second) {
            r.winding_violations.push_back(edge);
        }
    }
    r.euler_characteristic = r.num_vertices - r.num_edges + r.num_faces;
    if (r.non_manifold_edges.empty() && r.winding_violations.empty() && r.out_of_range_faces.empty() &&
        r.degenerate_faces.empty()) {
        r.boundary_loops = static_cast<int>(boundary_loops(mesh.faces).size());
    }
    return r;
}

/// Vertices whose edge-graph distance from v is at most k, ascending.
inline std::vector<int> k_hop_neighborhood(const TriangleMesh& mesh, int v, int k)
{
    if (v < 0 || v >= mesh.num_vertices()) {
        throw ValidationError("k_hop_neighborhood: vertex out of range");
    }
    if (k < 0) {
        throw ValidationError("k_hop_neighborhood: negative hop count");
    }
    const auto adj = vertex_adjacency(mesh.num_vertices(), mesh.faces);
    std::vector<int> dist(adj.size(), -1);
    std::deque<int> queue{v};
    dist[v] = 0;
    std::vector<int> out;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        out.push_back(u);
        if (dist[u] == k) {
            continue;
        }
        for (int w : adj[u]) {
            if (dist[w] < 0) {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Signed area of a 2D triangle (positive for counterclockwise).
inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) noexcept
{
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) noexcept
{
    return 0.5 * (b - a).cross(c - a).norm();
}

/// Sum of incident 2D triangle areas per vertex.
inline std::vector<double> vertex_areas(const std::vector<Vec2>& uv, const std::vector<Face>& faces)
{
    std::vector<double> areas(uv.size(), 0.0);
    for (const auto& f : faces) {
        const double a = std::abs(signed_area(uv[f[0]], uv[f[1]], uv[f[2]]));
        for (int v : f) {
            areas[v] += a;
        }
    }
    return areas;
}

} // namespace mesh
} // namespace facematch

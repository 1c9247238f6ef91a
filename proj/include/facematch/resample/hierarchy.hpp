#pragma once

#include "facematch/core/error.hpp"
#include "facematch/mesh/triangle_mesh.hpp"

#include <Eigen/Core>

#include <map>
#include <string>
#include <vector>

namespace facematch {
namespace resample {

using mesh::Face;
using mesh::Vec2;

/// Origin of a fine-level vertex: a copy of coarse vertex `a` when a == b,
/// otherwise the midpoint of coarse edge (a, b).
struct ParentRef
{
    int a = 0;
    int b = 0;

    bool is_copy() const noexcept { return a == b; }
    friend bool operator==(const ParentRef&, const ParentRef&) = default;
};

struct HierarchyLevel
{
    std::vector<Face> faces;
    std::vector<Vec2> uv;
    /// Empty at level 0; otherwise one entry per vertex of this level.
    std::vector<ParentRef> parents;

    int num_vertices() const noexcept { return static_cast<int>(uv.size()); }
    int num_faces() const noexcept { return static_cast<int>(faces.size()); }
};

/**
 * Nested 1-to-4 subdivision levels of the unit square.
 *
 * Level 0 is the five-vertex base mesh (four square corners plus a center
 * vertex at the nose UV). Coarse vertex i keeps index i at every finer level,
 * so restriction to a coarser level is a prefix of the vertex rows.
 */
struct MeshHierarchy
{
    std::vector<HierarchyLevel> levels;

    int finest() const noexcept { return static_cast<int>(levels.size()) - 1; }
    const HierarchyLevel& level(int l) const
    {
        if (l < 0 || l > finest()) {
            throw ValidationError("hierarchy level " + std::to_string(l) + " out of range");
        }
        return levels[static_cast<std::size_t>(l)];
    }
};

inline HierarchyLevel base_level(const Vec2& nose_uv)
{
    HierarchyLevel l0;
    l0.uv = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1), nose_uv};
    l0.faces = {Face{0, 1, 4}, Face{1, 2, 4}, Face{2, 3, 4}, Face{3, 0, 4}};
    return l0;
}

inline HierarchyLevel subdivide(const HierarchyLevel& coarse)
{
    HierarchyLevel fine;
    const int n = coarse.num_vertices();
    fine.uv = coarse.uv;
    fine.parents.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        fine.parents.push_back({i, i});
    }
    std::map<mesh::Edge, int> midpoint;
    for (const auto& e : mesh::unique_edges(coarse.faces)) {
        midpoint[e] = static_cast<int>(fine.uv.size());
        fine.uv.push_back(0.5 * (coarse.uv[e.first] + coarse.uv[e.second]));
        fine.parents.push_back({e.first, e.second});
    }
    fine.faces.reserve(coarse.faces.size() * 4);
    for (const auto& f : coarse.faces) {
        const int ab = midpoint.at(mesh::make_edge(f[0], f[1]));
        const int bc = midpoint.at(mesh::make_edge(f[1], f[2]));
        const int ca = midpoint.at(mesh::make_edge(f[2], f[0]));
        fine.faces.push_back({f[0], ab, ca});
        fine.faces.push_back({ab, f[1], bc});
        fine.faces.push_back({ca, bc, f[2]});
        fine.faces.push_back({ab, bc, ca});
    }
    return fine;
}

inline MeshHierarchy build_hierarchy(const Vec2& nose_uv, int levels)
{
    if (!(nose_uv.x() > 0.0 && nose_uv.x() < 1.0 && nose_uv.y() > 0.0 && nose_uv.y() < 1.0)) {
        throw ValidationError("build_hierarchy: nose UV must lie strictly inside the unit square");
    }
    if (levels < 0) {
        throw ValidationError("build_hierarchy: negative level count");
    }
    MeshHierarchy h;
    h.levels.push_back(base_level(nose_uv));
    for (int l = 0; l < levels; ++l) {
        h.levels.push_back(subdivide(h.levels.back()));
    }
    return h;
}

/// Topology of one level as a mesh with vertices on the z = 0 plane at the level's UVs.
inline mesh::TriangleMesh level_mesh(const MeshHierarchy& h, int level)
{
    const auto& l = h.level(level);
    std::vector<mesh::Vec3> vertices;
    vertices.reserve(l.uv.size());
    for (const auto& p : l.uv) {
        vertices.emplace_back(p.x(), p.y(), 0.0);
    }
    return mesh::make_mesh(std::move(vertices), l.faces);
}

enum class PoolDirection { down, up };

/**
 * Moves per-vertex feature rows between adjacent levels.
 *
 * down: rows of level `level + 1` restricted to the level-`level` vertices.
 * up:   rows of level `level` extended to level `level + 1`; copies keep their
 *       row and midpoint vertices average their two edge endpoints.
 */
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
pool_features(const Eigen::MatrixBase<Derived>& features, const MeshHierarchy& h, int level, PoolDirection direction)
{
    using Scalar = typename Derived::Scalar;
    using Out = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    if (level < 0 || level >= h.finest()) {
        throw ValidationError("pool_features: level out of range");
    }
    const auto& coarse = h.level(level);
    const auto& fine = h.level(level + 1);
    if (direction == PoolDirection::down) {
        if (features.rows() != fine.num_vertices()) {
            throw ValidationError("pool_features: row count does not match the fine level");
        }
        return features.topRows(coarse.num_vertices());
    }
    if (features.rows() != coarse.num_vertices()) {
        throw ValidationError("pool_features: row count does not match the coarse level");
    }
    Out out(fine.num_vertices(), features.cols());
    for (int i = 0; i < fine.num_vertices(); ++i) {
        const auto& p = fine.parents[static_cast<std::size_t>(i)];
        if (p.is_copy()) {
            out.row(i) = features.row(p.a);
        } else {
            out.row(i) = Scalar(0.5) * (features.row(p.a) + features.row(p.b));
        }
    }
    return out;
}

} // namespace resample
} // namespace facematch

#pragma once

#include "facematch/core/error.hpp"
#include "facematch/mesh/triangle_mesh.hpp"

#include <limits>
#include <vector>

namespace facematch {
namespace mesh {

/// Mirror correspondence across a plane through the origin.
struct ReflectionMap
{
    std::vector<int> pairing;
    Vec3 mirror_normal = Vec3::UnitX();

    Vec3 reflect(const Vec3& p) const
    {
        const Vec3 n = mirror_normal.normalized();
        return p - 2.0 * p.dot(n) * n;
    }

    bool is_involution() const
    {
        const int n = static_cast<int>(pairing.size());
        for (int i = 0; i < n; ++i) {
            const int j = pairing[i];
            if (j < 0 || j >= n || pairing[j] != i) {
                return false;
            }
        }
        return true;
    }
};

/// Pairs every vertex with the vertex nearest to its reflection. Fails when
/// the match is farther than tol or the result is not an involution.
inline ReflectionMap find_reflection_map(const TriangleMesh& mesh, const Vec3& normal, double tol)
{
    ReflectionMap map;
    map.mirror_normal = normal.normalized();
    map.pairing.resize(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3 r = map.reflect(mesh.vertices[i]);
        double best = std::numeric_limits<double>::infinity();
        int best_j = -1;
        for (std::size_t j = 0; j < mesh.vertices.size(); ++j) {
            const double d = (mesh.vertices[j] - r).squaredNorm();
            if (d < best) {
                best = d;
                best_j = static_cast<int>(j);
            }
        }
        if (best > tol * tol) {
            throw ValidationError("find_reflection_map: vertex " + std::to_string(i) + " has no mirror partner");
        }
        map.pairing[i] = best_j;
    }
    if (!map.is_involution()) {
        throw ValidationError("find_reflection_map: pairing is not an involution");
    }
    return map;
}

/// Average of the mesh and its mirror image: v_i <- (v_i + reflect(v_pair(i))) / 2.
inline TriangleMesh symmetrize(const TriangleMesh& mesh, const ReflectionMap& map)
{
    if (map.pairing.size() != mesh.vertices.size()) {
        throw ValidationError("symmetrize: pairing length does not match vertex count");
    }
    if (!map.is_involution()) {
        throw ValidationError("symmetrize: pairing is not an involution");
    }
    TriangleMesh out = mesh;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        out.vertices[i] = 0.5 * (mesh.vertices[i] + map.reflect(mesh.vertices[map.pairing[i]]));
    }
    return out;
}

} // namespace mesh
} // namespace facematch

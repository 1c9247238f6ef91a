#pragma once

#include "facematch/core/error.hpp"
#include "facematch/mesh/triangle_mesh.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace facematch {
namespace resample {

using mesh::Face;
using mesh::TriangleMesh;
using mesh::Vec2;
using mesh::Vec3;

/// Planar parameterization of a disk mesh over the unit square.
struct UvEmbedding
{
    std::vector<Vec2> uv;
    std::vector<bool> boundary;
    /// Vertices pinned to (0,0), (1,0), (1,1), (0,1) in that order.
    std::array<int, 4> corners{};

    int size() const noexcept { return static_cast<int>(uv.size()); }
};

inline constexpr double cotangent_floor = 1e-8;

/// Symmetric cotangent edge weights (cot a + cot b) / 2, floored at a small
/// positive value so the harmonic system stays positive definite.
inline std::map<mesh::Edge, double> cotangent_weights(const TriangleMesh& m, double floor = cotangent_floor)
{
    std::map<mesh::Edge, double> w;
    for (const auto& f : m.faces) {
        for (int k = 0; k < 3; ++k) {
            const int o = f[k];
            const int i = f[(k + 1) % 3];
            const int j = f[(k + 2) % 3];
            const Vec3 a = m.vertices[i] - m.vertices[o];
            const Vec3 b = m.vertices[j] - m.vertices[o];
            const double cross = a.cross(b).norm();
            const double cot = cross > 0.0 ? a.dot(b) / cross : 0.0;
            w[mesh::make_edge(i, j)] += 0.5 * cot;
        }
    }
    for (auto& [e, value] : w) {
        value = std::max(value, floor);
    }
    return w;
}

struct ConformalMapResult
{
    UvEmbedding embedding;
    /// Max-norm residual of the interior harmonic system.
    double residual = 0.0;
};

namespace detail {

/// Boundary loop rotated to start at corners[0] and oriented so the other
/// corners follow in the given order.
inline std::vector<int> ordered_boundary(const TriangleMesh& m, const std::array<int, 4>& corners)
{
    const auto report = mesh::validate_topology(m);
    if (!report.valid() || report.boundary_loops != 1) {
        throw ValidationError("conformal_map_to_square: mesh is not a topological disk (Euler " +
                              std::to_string(report.euler_characteristic) + ", " +
                              std::to_string(report.boundary_loops) + " boundary loops)");
    }
    std::vector<int> loop = mesh::boundary_loops(m.faces).front();
    auto position = [&](int v) {
        const auto it = std::find(loop.begin(), loop.end(), v);
        if (it == loop.end()) {
            throw ValidationError("conformal_map_to_square: corner " + std::to_string(v) + " is not on the boundary");
        }
        return static_cast<int>(it - loop.begin());
    };
    std::rotate(loop.begin(), loop.begin() + position(corners[0]), loop.end());
    auto increasing = [&] {
        const int p1 = position(corners[1]);
        const int p2 = position(corners[2]);
        const int p3 = position(corners[3]);
        return 0 < p1 && p1 < p2 && p2 < p3;
    };
    if (!increasing()) {
        std::reverse(loop.begin() + 1, loop.end());
        if (!increasing()) {
            throw ValidationError("conformal_map_to_square: corners are not in cyclic boundary order");
        }
    }
    return loop;
}

} // namespace detail

/**
 * Harmonic (cotangent-weight) map of a disk mesh onto the unit square.
 *
 * Boundary vertices are spread over the four sides by arc length between the
 * pinned corners; every interior vertex ends up at the weighted mean of its
 * neighbors.
 */
inline ConformalMapResult conformal_map_to_square(const TriangleMesh& m, const std::array<int, 4>& corners)
{
    const auto loop = detail::ordered_boundary(m, corners);
    const int n = m.num_vertices();

    ConformalMapResult result;
    auto& emb = result.embedding;
    emb.uv.assign(static_cast<std::size_t>(n), Vec2::Zero());
    emb.boundary.assign(static_cast<std::size_t>(n), false);
    emb.corners = corners;

    static const Vec2 square[4] = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    std::vector<int> corner_pos;
    for (int c : corners) {
        corner_pos.push_back(static_cast<int>(std::find(loop.begin(), loop.end(), c) - loop.begin()));
    }
    corner_pos.push_back(static_cast<int>(loop.size()));
    for (int side = 0; side < 4; ++side) {
        const int begin = corner_pos[side];
        const int end = corner_pos[side + 1];
        std::vector<double> arc{0.0};
        for (int k = begin; k < end; ++k) {
            const int a = loop[static_cast<std::size_t>(k)];
            const int b = loop[static_cast<std::size_t>((k + 1) % loop.size())];
            arc.push_back(arc.back() + (m.vertices[b] - m.vertices[a]).norm());
        }
        const Vec2 from = square[side];
        const Vec2 to = square[(side + 1) % 4];
        for (int k = begin; k < end; ++k) {
            const int v = loop[static_cast<std::size_t>(k)];
            const double t = arc[static_cast<std::size_t>(k - begin)] / arc.back();
            Vec2 p = from + t * (to - from);
            // Keep the fixed coordinate exact so later side tests are bitwise.
            if (from.x() == to.x()) p.x() = from.x();
            if (from.y() == to.y()) p.y() = from.y();
            emb.uv[static_cast<std::size_t>(v)] = p;
            emb.boundary[static_cast<std::size_t>(v)] = true;
        }
    }

    std::vector<int> unknown(static_cast<std::size_t>(n), -1);
    int num_interior = 0;
    for (int v = 0; v < n; ++v) {
        if (!emb.boundary[static_cast<std::size_t>(v)]) {
            unknown[static_cast<std::size_t>(v)] = num_interior++;
        }
    }
    if (num_interior == 0) {
        return result;
    }

    const auto weights = cotangent_weights(m);
    std::vector<Eigen::Triplet<double>> entries;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(num_interior, 2);
    Eigen::VectorXd diagonal = Eigen::VectorXd::Zero(num_interior);
    for (const auto& [e, w] : weights) {
        const int ui = unknown[static_cast<std::size_t>(e.first)];
        const int uj = unknown[static_cast<std::size_t>(e.second)];
        if (ui >= 0) diagonal[ui] += w;
        if (uj >= 0) diagonal[uj] += w;
        if (ui >= 0 && uj >= 0) {
            entries.emplace_back(ui, uj, -w);
            entries.emplace_back(uj, ui, -w);
        } else if (ui >= 0) {
            rhs.row(ui) += w * emb.uv[static_cast<std::size_t>(e.second)].transpose();
        } else if (uj >= 0) {
            rhs.row(uj) += w * emb.uv[static_cast<std::size_t>(e.first)].transpose();
        }
    }
    for (int i = 0; i < num_interior; ++i) {
        entries.emplace_back(i, i, diagonal[i]);
    }
    Eigen::SparseMatrix<double> laplacian(num_interior, num_interior);
    laplacian.setFromTriplets(entries.begin(), entries.end());

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(laplacian);
    if (solver.info() != Eigen::Success || (solver.vectorD().array() <= 0.0).any()) {
        throw NumericalError("conformal_map_to_square: harmonic system is not positive definite (" +
                             std::to_string(num_interior) + " interior vertices)");
    }
    const Eigen::MatrixXd solution = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !solution.allFinite()) {
        throw NumericalError("conformal_map_to_square: harmonic solve failed");
    }
    result.residual = (laplacian * solution - rhs).cwiseAbs().maxCoeff();
    for (int v = 0; v < n; ++v) {
        const int u = unknown[static_cast<std::size_t>(v)];
        if (u >= 0) {
            emb.uv[static_cast<std::size_t>(v)] = solution.row(u).transpose();
        }
    }
    return result;
}

} // namespace resample
} // namespace facematch

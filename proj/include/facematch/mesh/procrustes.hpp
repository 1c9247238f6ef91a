#pragma once

#include "facematch/core/error.hpp"
#include "facematch/core/log.hpp"
#include "facematch/mesh/triangle_mesh.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace facematch {
namespace mesh {

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

inline PointMatrix to_matrix(const std::vector<Vec3>& points)
{
    PointMatrix m(static_cast<Eigen::Index>(points.size()), 3);
    for (std::size_t i = 0; i < points.size(); ++i) {
        m.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
    }
    return m;
}

inline std::vector<Vec3> to_points(const PointMatrix& m)
{
    std::vector<Vec3> points(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        points[static_cast<std::size_t>(i)] = m.row(i).transpose();
    }
    return points;
}

/// Rotation R (det +1) minimizing ||source * R^T - target||_F for centered
/// point sets. Kabsch closed form on the cross-covariance.
inline Eigen::Matrix3d optimal_rotation(const PointMatrix& source, const PointMatrix& target)
{
    const Eigen::Matrix3d cov = target.transpose() * source;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
        d(2, 2) = -1.0;
    }
    return svd.matrixU() * d * svd.matrixV().transpose();
}

inline double centroid_size(const PointMatrix& centered)
{
    return std::sqrt(centered.squaredNorm());
}

struct GpaResult
{
    std::vector<TriangleMesh> meshes;
    /// Mean over shapes of the squared Frobenius distance to the final mean.
    double residual = 0.0;
    /// RMS change of the mean shape in the last iteration.
    double mean_change = 0.0;
    int iterations = 0;
    bool converged = false;
};

/**
 * Generalized Procrustes analysis with similarity transforms.
 *
 * Every shape is centered and scaled to unit centroid size, then rotated
 * onto the evolving mean until the mean moves less than tol (RMS over
 * coordinates). The mean is renormalized to unit size each iteration. The
 * global frame is fixed by the first input: the final mean is rotated onto
 * it, so the first output is that input centered and scaled.
 */
inline GpaResult generalized_procrustes(const std::vector<TriangleMesh>& meshes, double tol = 1e-10,
                                        int max_iter = 100)
{
    if (meshes.empty()) {
        throw ValidationError("generalized_procrustes: no meshes");
    }
    for (const auto& m : meshes) {
        if (m.topology_id != meshes.front().topology_id || m.num_vertices() != meshes.front().num_vertices()) {
            throw ValidationError("generalized_procrustes: meshes do not share a topology");
        }
    }

    std::vector<PointMatrix> shapes;
    shapes.reserve(meshes.size());
    for (const auto& m : meshes) {
        PointMatrix p = to_matrix(m.vertices);
        p.rowwise() -= p.colwise().mean();
        const double size = centroid_size(p);
        if (size <= 0.0) {
            throw ValidationError("generalized_procrustes: degenerate shape with zero centroid size");
        }
        shapes.push_back(p / size);
    }

    GpaResult result;
    const PointMatrix reference = shapes.front();
    PointMatrix mean = reference;
    const double coords = static_cast<double>(mean.size());
    for (int it = 1; it <= max_iter; ++it) {
        for (auto& s : shapes) {
            s = s * optimal_rotation(s, mean).transpose();
        }
        PointMatrix next = PointMatrix::Zero(mean.rows(), 3);
        for (const auto& s : shapes) {
            next += s;
        }
        next /= static_cast<double>(shapes.size());
        next /= centroid_size(next);
        result.mean_change = std::sqrt((next - mean).squaredNorm() / coords);
        mean = next;
        result.iterations = it;
        if (result.mean_change < tol) {
            result.converged = true;
            break;
        }
    }
    if (!result.converged) {
        log_warning("generalized_procrustes: no convergence after " + std::to_string(max_iter) +
                    " iterations, mean change " + std::to_string(result.mean_change));
    }

    // Express the result in the frame of the first input so that re-running
    // on aligned shapes is a fixed point.
    const Eigen::Matrix3d frame = optimal_rotation(mean, reference);
    mean = mean * frame.transpose();
    for (auto& s : shapes) {
        s = s * frame.transpose();
    }

    result.residual = 0.0;
    for (const auto& s : shapes) {
        result.residual += (s - mean).squaredNorm();
    }
    result.residual /= static_cast<double>(shapes.size());

    result.meshes.reserve(meshes.size());
    for (std::size_t i = 0; i < meshes.size(); ++i) {
        TriangleMesh out = meshes[i];
        out.vertices = to_points(shapes[i]);
        result.meshes.push_back(std::move(out));
    }
    return result;
}

} // namespace mesh
} // namespace facematch

#pragma once

#include "facematch/core/error.hpp"
#include "facematch/core/log.hpp"
#include "facematch/mesh/triangle_mesh.hpp"
#include "facematch/resample/conformal_map.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace facematch {
namespace resample {

/// How the area factor of a source vertex is scaled.
enum class AreaSigmaMode {
    /// Gaussian width is the standard deviation of the interior vertex areas.
    interior_std,
};

struct ForceFieldConfig
{
    double sigma0 = 0.5;
    double decay = 0.05;
    int iterations = 12;
    AreaSigmaMode area_sigma_mode = AreaSigmaMode::interior_std;
    double step = 1.0;
    int max_step_halvings = 30;

    double sigma_at(int iteration) const { return sigma0 * std::pow(1.0 - decay, iteration); }

    void validate() const
    {
        if (!(sigma0 > 0.0) || !(decay >= 0.0 && decay < 1.0) || iterations < 0 || !(step > 0.0) ||
            max_step_halvings < 0) {
            throw ValidationError("ForceFieldConfig: sigma0 > 0, 0 <= decay < 1, iterations >= 0 and step > 0 required");
        }
    }
};

/// Mean and population standard deviation of the interior (non-boundary) areas.
inline std::pair<double, double> interior_area_stats(const std::vector<double>& areas, const std::vector<bool>& boundary)
{
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < areas.size(); ++i) {
        if (!boundary[i]) {
            sum += areas[i];
            ++count;
        }
    }
    if (count == 0) {
        return {0.0, 0.0};
    }
    const double mean = sum / count;
    double var = 0.0;
    for (std::size_t i = 0; i < areas.size(); ++i) {
        if (!boundary[i]) {
            var += (areas[i] - mean) * (areas[i] - mean);
        }
    }
    return {mean, std::sqrt(var / count)};
}

/// Coefficient of variation of the interior vertex areas.
inline double area_cv(const std::vector<double>& areas, const std::vector<bool>& boundary)
{
    const auto [mean, sd] = interior_area_stats(areas, boundary);
    return mean > 0.0 ? sd / mean : 0.0;
}

inline constexpr double area_spread_floor = 1e-12;

/// Signed push/pull factor per vertex: positive for vertices whose area is
/// below the interior mean, zero for boundary vertices.
inline std::vector<double> area_factors(const std::vector<double>& areas, const std::vector<bool>& boundary)
{
    const auto [mean, sd] = interior_area_stats(areas, boundary);
    std::vector<double> s(areas.size(), 0.0);
    // Spreads at rounding level (a uniform grid) count as no spread at all.
    if (!(sd > area_spread_floor * mean)) {
        return s;
    }
    for (std::size_t i = 0; i < areas.size(); ++i) {
        if (boundary[i] || areas[i] == mean) {
            continue;
        }
        const double z = (areas[i] - mean) / sd;
        s[i] = (areas[i] < mean ? 1.0 : -1.0) * (1.0 - std::exp(-z * z));
    }
    return s;
}

/**
 * Per-vertex displacement field from area-driven pairwise forces.
 *
 * Source i acts on target j along the unit vector from P_i to P_j with
 * magnitude s_i * exp(-d_ij / sigma); the field at j is the mean over all n
 * sources. Coincident pairs contribute nothing.
 */
inline std::vector<Vec2> compute_vector_field(const UvEmbedding& uv,
                                              const std::vector<double>& areas,
                                              double sigma,
                                              const ForceFieldConfig& cfg = {})
{
    (void)cfg;
    if (!(sigma > 0.0)) {
        throw ValidationError("compute_vector_field: sigma must be positive");
    }
    const int n = uv.size();
    if (static_cast<int>(areas.size()) != n || static_cast<int>(uv.boundary.size()) != n) {
        throw ValidationError("compute_vector_field: area/boundary count does not match the embedding");
    }
    for (double a : areas) {
        if (!(a >= 0.0)) {
            throw ValidationError("compute_vector_field: areas must be non-negative");
        }
    }
    const auto s = area_factors(areas, uv.boundary);
    std::vector<Vec2> field(static_cast<std::size_t>(n), Vec2::Zero());
    for (int j = 0; j < n; ++j) {
        const Vec2 pj = uv.uv[static_cast<std::size_t>(j)];
        Vec2 sum = Vec2::Zero();
        for (int i = 0; i < n; ++i) {
            const double si = s[static_cast<std::size_t>(i)];
            if (i == j || si == 0.0) {
                continue;
            }
            const Vec2 d = pj - uv.uv[static_cast<std::size_t>(i)];
            const double dist = d.norm();
            if (dist == 0.0) {
                continue;
            }
            sum += (si * std::exp(-dist / sigma) / dist) * d;
        }
        field[static_cast<std::size_t>(j)] = sum / static_cast<double>(n);
    }
    return field;
}

struct RedistributionResult
{
    UvEmbedding embedding;
    std::vector<double> sigmas;
    /// Interior area CV before the first iteration and after each one.
    std::vector<double> area_cv;
    /// Step size used per iteration (0 when no trial step was acceptable).
    std::vector<double> steps;
};

namespace detail {

/// Sign of the embedding's total signed area (+1 counterclockwise).
inline double uv_orientation(const std::vector<Vec2>& uv, const std::vector<Face>& faces)
{
    double total = 0.0;
    for (const auto& f : faces) {
        total += mesh::signed_area(uv[f[0]], uv[f[1]], uv[f[2]]);
    }
    return total >= 0.0 ? 1.0 : -1.0;
}

inline bool has_flip(const std::vector<Vec2>& uv, const std::vector<Face>& faces, double orientation)
{
    for (const auto& f : faces) {
        if (!(orientation * mesh::signed_area(uv[f[0]], uv[f[1]], uv[f[2]]) > 0.0)) {
            return true;
        }
    }
    return false;
}

/// Restricts a displacement to the square side the vertex lies on.
inline Vec2 constrain_boundary(const Vec2& p, const Vec2& delta)
{
    Vec2 d = delta;
    if (p.x() == 0.0 || p.x() == 1.0) d.x() = 0.0;
    if (p.y() == 0.0 || p.y() == 1.0) d.y() = 0.0;
    return d;
}

} // namespace detail

/**
 * Iteratively moves UV points toward equal per-vertex areas.
 *
 * Boundary vertices slide along their side of the square and corners stay
 * fixed. If a step would flip a UV triangle or increase the area spread, the
 * step is halved until it does neither.
 */
inline RedistributionResult redistribute_points(const UvEmbedding& input, const TriangleMesh& m, const ForceFieldConfig& cfg = {})
{
    cfg.validate();
    if (input.size() != m.num_vertices()) {
        throw ValidationError("redistribute_points: embedding and mesh vertex counts differ");
    }
    RedistributionResult result;
    result.embedding = input;
    auto& uv = result.embedding.uv;
    const auto& boundary = result.embedding.boundary;
    std::vector<bool> fixed(uv.size(), false);
    for (int c : input.corners) {
        fixed[static_cast<std::size_t>(c)] = true;
    }
    const double orientation = detail::uv_orientation(uv, m.faces);
    if (detail::has_flip(uv, m.faces, orientation)) {
        throw ValidationError("redistribute_points: input embedding has flipped or degenerate triangles");
    }

    auto areas = mesh::vertex_areas(uv, m.faces);
    result.area_cv.push_back(area_cv(areas, boundary));
    for (int t = 0; t < cfg.iterations; ++t) {
        const double sigma = cfg.sigma_at(t);
        result.sigmas.push_back(sigma);
        const auto field = compute_vector_field(result.embedding, areas, sigma, cfg);

        double eta = cfg.step;
        std::vector<Vec2> trial = uv;
        bool accepted = false;
        for (int halving = 0; halving <= cfg.max_step_halvings; ++halving) {
            for (std::size_t j = 0; j < uv.size(); ++j) {
                if (fixed[j]) {
                    trial[j] = uv[j];
                    continue;
                }
                Vec2 delta = eta * field[j];
                if (boundary[j]) {
                    delta = detail::constrain_boundary(uv[j], delta);
                }
                trial[j] = (uv[j] + delta).cwiseMax(0.0).cwiseMin(1.0);
            }
            if (detail::has_flip(trial, m.faces, orientation)) {
                log_info("redistribute_points: iteration " + std::to_string(t + 1) +
                         " flipped a triangle, halving step to " + std::to_string(eta / 2.0));
            } else if (area_cv(mesh::vertex_areas(trial, m.faces), boundary) > result.area_cv.back()) {
                log_info("redistribute_points: iteration " + std::to_string(t + 1) +
                         " increased the area spread, halving step to " + std::to_string(eta / 2.0));
            } else {
                accepted = true;
                break;
            }
            eta /= 2.0;
        }
        if (accepted) {
            uv = trial;
            result.steps.push_back(eta);
        } else {
            log_warning("redistribute_points: iteration " + std::to_string(t + 1) +
                        " skipped, no trial step was acceptable");
            result.steps.push_back(0.0);
        }
        areas = mesh::vertex_areas(uv, m.faces);
        result.area_cv.push_back(area_cv(areas, boundary));
    }
    return result;
}

} // namespace resample
} // namespace facematch

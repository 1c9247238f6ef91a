#pragma once

#include "facematch/core/error.hpp"
#include "facematch/nn/checkpoint.hpp"
#include "facematch/resample/conformal_map.hpp"
#include "facematch/resample/force_field.hpp"
#include "facematch/resample/geometry_image.hpp"
#include "facematch/resample/hierarchy.hpp"
#include "facematch/spiral/spiral_table.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace facematch {
namespace resample {

inline constexpr int default_levels = 4;

struct ResampleConfig
{
    int grid_size = default_grid_size;
    int levels = default_levels;
    ForceFieldConfig force;
};

/**
 * Template-side resampling state: computed once on the canonical template and
 * then applied to every subject sharing its topology.
 */
struct TemplateResampling
{
    ResampleConfig config;
    std::string topology_id;
    std::vector<Face> template_faces;
    std::array<int, 4> corners{};
    int nose_vertex = 0;
    UvEmbedding embedding;
    MeshHierarchy hierarchy;
    RasterMap raster;

    int num_output_vertices() const { return hierarchy.level(hierarchy.finest()).num_vertices(); }
};

inline TemplateResampling prepare_template(const TriangleMesh& tmpl,
                                           const std::array<int, 4>& corners,
                                           int nose_vertex,
                                           const ResampleConfig& cfg = {},
                                           RedistributionResult* diagnostics = nullptr)
{
    if (nose_vertex < 0 || nose_vertex >= tmpl.num_vertices()) {
        throw ValidationError("prepare_template: nose vertex out of range");
    }
    TemplateResampling t;
    t.config = cfg;
    t.topology_id = tmpl.topology_id.empty() ? mesh::topology_digest(tmpl.faces) : tmpl.topology_id;
    t.template_faces = tmpl.faces;
    t.corners = corners;
    t.nose_vertex = nose_vertex;
    const auto conformal = conformal_map_to_square(tmpl, corners);
    auto redistributed = redistribute_points(conformal.embedding, tmpl, cfg.force);
    t.embedding = redistributed.embedding;
    if (t.embedding.boundary[static_cast<std::size_t>(nose_vertex)]) {
        throw ValidationError("prepare_template: nose vertex lies on the template boundary");
    }
    t.hierarchy = build_hierarchy(t.embedding.uv[static_cast<std::size_t>(nose_vertex)], cfg.levels);
    t.raster = build_raster_map(t.embedding, t.template_faces, cfg.grid_size);
    if (diagnostics != nullptr) {
        *diagnostics = std::move(redistributed);
    }
    return t;
}

inline void require_template_topology(const TemplateResampling& t, const TriangleMesh& subject)
{
    if (subject.num_vertices() != t.embedding.size() || subject.faces != t.template_faces) {
        throw ValidationError("subject topology does not match the resampling template");
    }
}

inline GeometryImage subject_geometry_image(const TemplateResampling& t, const TriangleMesh& subject)
{
    require_template_topology(t, subject);
    return apply_raster_map(t.raster, t.template_faces, subject.vertices);
}

/// Geometry image followed by reconstruction at the finest hierarchy level.
inline Reconstruction resample_subject(const TemplateResampling& t, const TriangleMesh& subject)
{
    return reconstruct_shape(subject_geometry_image(t, subject), t.hierarchy, t.hierarchy.finest());
}

/// Resamples every shape of a dataset sharing the template topology.
inline std::vector<std::vector<Vec3>> resample_shapes(const TemplateResampling& t,
                                                      const TriangleMesh& tmpl,
                                                      const std::vector<std::vector<Vec3>>& shapes)
{
    std::vector<std::vector<Vec3>> out;
    out.reserve(shapes.size());
    TriangleMesh subject = tmpl;
    for (const auto& s : shapes) {
        subject.vertices = s;
        out.push_back(resample_subject(t, subject).mesh.vertices);
    }
    return out;
}

// Persistence. The hierarchy and the redistributed template UVs are stored as
// JSON; the raster map is rebuilt on load.

inline nn::Json hierarchy_to_json(const MeshHierarchy& h)
{
    nn::Json levels = nn::Json::array();
    for (const auto& l : h.levels) {
        nn::Json uv = nn::Json::array();
        for (const auto& p : l.uv) {
            uv.push_back({p.x(), p.y()});
        }
        nn::Json parents = nn::Json::array();
        for (const auto& p : l.parents) {
            parents.push_back({p.a, p.b});
        }
        const auto table = spiral::build_spirals(l.num_vertices(), l.faces);
        nn::Json spirals = {{"length", table.length}, {"pad_index", table.pad_index}, {"indices", table.indices}};
        levels.push_back({{"uv", uv}, {"faces", l.faces}, {"parents", parents}, {"spirals", spirals}});
    }
    return levels;
}

inline MeshHierarchy hierarchy_from_json(const nn::Json& j)
{
    MeshHierarchy h;
    for (const auto& jl : j) {
        HierarchyLevel l;
        for (const auto& p : jl.at("uv")) {
            l.uv.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        }
        l.faces = jl.at("faces").get<std::vector<Face>>();
        for (const auto& p : jl.at("parents")) {
            l.parents.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
        }
        const auto& js = jl.at("spirals");
        const auto rebuilt = spiral::build_spirals(l.num_vertices(), l.faces);
        if (js.at("length").get<int>() != rebuilt.length || js.at("indices").get<std::vector<int>>() != rebuilt.indices) {
            throw ValidationError("hierarchy level " + std::to_string(h.levels.size()) +
                                  ": stored spiral table does not match the level topology");
        }
        h.levels.push_back(std::move(l));
    }
    if (h.levels.empty()) {
        throw ValidationError("hierarchy has no levels");
    }
    for (int k = 1; k <= h.finest(); ++k) {
        const auto& l = h.levels[static_cast<std::size_t>(k)];
        if (static_cast<int>(l.parents.size()) != l.num_vertices()) {
            throw ValidationError("hierarchy level " + std::to_string(k) + " has an incomplete parent map");
        }
    }
    return h;
}

inline nn::Json resampling_to_json(const TemplateResampling& t, std::string_view config_digest, std::uint64_t seed)
{
    auto j = nn::checkpoint_envelope("resampling", std::string(config_digest), seed);
    j["grid_size"] = t.config.grid_size;
    j["levels"] = t.config.levels;
    j["force_field"] = {{"sigma0", t.config.force.sigma0},
                        {"decay", t.config.force.decay},
                        {"iterations", t.config.force.iterations},
                        {"step", t.config.force.step}};
    j["topology_id"] = t.topology_id;
    j["corners"] = t.corners;
    j["nose_vertex"] = t.nose_vertex;
    j["template_faces"] = t.template_faces;
    nn::Json uv = nn::Json::array();
    for (const auto& p : t.embedding.uv) {
        uv.push_back({p.x(), p.y()});
    }
    j["template_uv"] = uv;
    j["template_boundary"] = t.embedding.boundary;
    j["hierarchy"] = hierarchy_to_json(t.hierarchy);
    return j;
}

inline TemplateResampling resampling_from_json(const nn::Json& j)
{
    nn::require_kind(j, "resampling");
    TemplateResampling t;
    t.config.grid_size = j.at("grid_size").get<int>();
    t.config.levels = j.at("levels").get<int>();
    const auto& ff = j.at("force_field");
    t.config.force.sigma0 = ff.at("sigma0").get<double>();
    t.config.force.decay = ff.at("decay").get<double>();
    t.config.force.iterations = ff.at("iterations").get<int>();
    t.config.force.step = ff.at("step").get<double>();
    t.topology_id = j.at("topology_id").get<std::string>();
    t.corners = j.at("corners").get<std::array<int, 4>>();
    t.nose_vertex = j.at("nose_vertex").get<int>();
    t.template_faces = j.at("template_faces").get<std::vector<Face>>();
    for (const auto& p : j.at("template_uv")) {
        t.embedding.uv.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    t.embedding.boundary = j.at("template_boundary").get<std::vector<bool>>();
    t.embedding.corners = t.corners;
    if (t.embedding.boundary.size() != t.embedding.uv.size()) {
        throw ValidationError("resampling: boundary flags do not match the UV count");
    }
    t.hierarchy = hierarchy_from_json(j.at("hierarchy"));
    if (t.hierarchy.finest() != t.config.levels) {
        throw ValidationError("resampling: hierarchy depth does not match the recorded level count");
    }
    t.raster = build_raster_map(t.embedding, t.template_faces, t.config.grid_size);
    return t;
}

inline void write_resampling(const std::filesystem::path& path, const TemplateResampling& t, std::string_view config_digest,
                             std::uint64_t seed)
{
    nn::write_json(path, resampling_to_json(t, config_digest, seed));
}

inline TemplateResampling read_resampling(const std::filesystem::path& path)
{
    return resampling_from_json(nn::read_json(path));
}

} // namespace resample
} // namespace facematch

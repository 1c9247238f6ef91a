#pragma once

#include "facematch/core/error.hpp"
#include "facematch/core/text_io.hpp"
#include "facematch/gml/property_record.hpp"
#include "facematch/mesh/io.hpp"
#include "facematch/nn/checkpoint.hpp"
#include "facematch/synth/generator.hpp"
#include "facematch/synth/template_face.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace facematch {
namespace synth {

/// Meshes and records aligned by position; all meshes share the template topology.
struct Dataset
{
    FaceTemplate tmpl;
    std::vector<std::string> ids;
    std::vector<std::vector<Vec3>> shapes;
    std::vector<PropertyRecord> records;
    /// Ground-truth sidecar; null when the dataset did not come from the generator.
    nn::Json effects;

    int size() const noexcept { return static_cast<int>(ids.size()); }
    TriangleMesh subject_mesh(int k) const
    {
        TriangleMesh m = tmpl.mesh;
        m.vertices = shapes.at(static_cast<std::size_t>(k));
        return m;
    }
};

inline nn::Json synth_config_to_json(const SynthConfig& c)
{
    return nn::Json{{"n_subjects", c.n_subjects},
                    {"seed", c.seed},
                    {"sex_effect", c.sex_effect},
                    {"age_effect", c.age_effect},
                    {"bmi_effect", c.bmi_effect},
                    {"gb_effect", c.gb_effect},
                    {"gb_minor_effect", c.gb_minor_effect},
                    {"noise", c.noise},
                    {"latent_dim", c.latent_dim},
                    {"female_ratio", c.female_ratio},
                    {"age_min", c.age_min},
                    {"age_max", c.age_max},
                    {"age_mean", c.age_mean},
                    {"age_shape", c.age_shape},
                    {"age_pivot", c.age_pivot},
                    {"age_scale", c.age_scale},
                    {"age_code", "tanh((age - age_pivot) / age_scale)"},
                    {"bmi_min", c.bmi_min},
                    {"bmi_max", c.bmi_max},
                    {"bmi_mean", c.bmi_mean},
                    {"bmi_log_sigma", c.bmi_log_sigma},
                    {"gb_rho", c.gb_rho}};
}

inline nn::Json field_to_json(const Field& f)
{
    nn::Json a = nn::Json::array();
    for (const auto& v : f) {
        a.push_back(v.x());
        a.push_back(v.y());
        a.push_back(v.z());
    }
    return a;
}

inline Field field_from_json(const nn::Json& j)
{
    const auto flat = j.get<std::vector<double>>();
    if (flat.size() % 3 != 0) {
        throw ValidationError("effect field length is not a multiple of 3");
    }
    Field f;
    for (std::size_t i = 0; i < flat.size(); i += 3) {
        f.emplace_back(flat[i], flat[i + 1], flat[i + 2]);
    }
    return f;
}

inline nn::Json effects_to_json(const SynthConfig& cfg, const SynthModel& m, const std::string& config_digest)
{
    nn::Json j = nn::checkpoint_envelope("effects", config_digest, cfg.seed);
    j["config"] = synth_config_to_json(cfg);
    nn::Json dirs;
    dirs["sex"] = field_to_json(m.sex);
    dirs["age"] = field_to_json(m.age);
    dirs["bmi"] = field_to_json(m.bmi);
    for (int c = 0; c < gb_dims; ++c) {
        dirs["gb_" + std::to_string(c + 1)] = field_to_json(m.gb[static_cast<std::size_t>(c)]);
    }
    j["directions"] = dirs;
    return j;
}

inline Dataset make_dataset(const GeneratedData& g, const SynthConfig& cfg, const std::string& config_digest = {})
{
    Dataset d;
    d.tmpl = g.tmpl;
    d.shapes = g.shapes;
    d.records = g.records;
    for (const auto& r : g.records) {
        d.ids.push_back(r.id);
    }
    d.effects = effects_to_json(cfg, g.model, config_digest);
    return d;
}

inline void write_landmarks(const std::filesystem::path& path, const FaceTemplate& t, const std::string& config_digest)
{
    nn::Json j = nn::checkpoint_envelope("landmarks", config_digest, 0);
    j["corners"] = t.corners;
    j["nose_vertex"] = t.nose_vertex;
    nn::write_json(path, j);
}

inline FaceTemplate read_template(const std::filesystem::path& obj, const std::filesystem::path& landmarks)
{
    FaceTemplate t;
    t.mesh = mesh::read_obj(obj);
    const auto j = nn::read_json(landmarks);
    nn::require_kind(j, "landmarks");
    t.corners = j.at("corners").get<std::array<int, 4>>();
    t.nose_vertex = j.at("nose_vertex").get<int>();
    for (int v : t.corners) {
        if (v < 0 || v >= t.mesh.num_vertices()) {
            throw ValidationError(landmarks.string() + ": corner index out of range");
        }
    }
    if (t.nose_vertex < 0 || t.nose_vertex >= t.mesh.num_vertices()) {
        throw ValidationError(landmarks.string() + ": nose vertex out of range");
    }
    return t;
}

/**
 * Directory layout: template.obj, landmarks.json, manifest.csv (`id,vertex_file`),
 * meshes/<id>.obj (vertex lines only), properties.csv and, for generated
 * data, effects.json.
 */
inline void save_dataset(const std::filesystem::path& dir, const Dataset& d, const std::string& config_digest = {})
{
    if (d.shapes.size() != d.ids.size() || d.records.size() != d.ids.size()) {
        throw ValidationError("save_dataset: ids, shapes and records are not aligned");
    }
    std::filesystem::create_directories(dir / "meshes");
    mesh::write_obj(dir / "template.obj", d.tmpl.mesh, config_digest);
    write_landmarks(dir / "landmarks.json", d.tmpl, config_digest);
    auto manifest = open_output(dir / "manifest.csv");
    manifest << artifact_header("manifest", config_digest) << '\n' << "id,vertex_file\n";
    for (std::size_t k = 0; k < d.ids.size(); ++k) {
        const std::string rel = "meshes/" + d.ids[k] + ".obj";
        manifest << d.ids[k] << ',' << rel << '\n';
        mesh::write_vertices(dir / rel, d.shapes[k], config_digest);
    }
    gml::write_properties(dir / "properties.csv", d.records, config_digest);
    if (!d.effects.is_null()) {
        nn::write_json(dir / "effects.json", d.effects);
    }
}

inline Dataset load_dataset(const std::filesystem::path& dir)
{
    Dataset d;
    d.tmpl = read_template(dir / "template.obj", dir / "landmarks.json");
    const auto records = gml::read_properties(dir / "properties.csv");
    std::map<std::string, std::size_t> by_id;
    for (std::size_t k = 0; k < records.size(); ++k) {
        by_id.emplace(records[k].id, k);
    }
    const auto manifest_path = dir / "manifest.csv";
    auto in = open_input(manifest_path);
    LineReader reader(in, manifest_path.string());
    std::string line;
    if (!reader.next(line) || line != "id,vertex_file") {
        reader.fail("header must be id,vertex_file");
    }
    std::map<std::string, int> seen;
    while (reader.next(line)) {
        const auto cols = split(line, ',');
        if (cols.size() != 2) {
            reader.fail("expected 2 columns");
        }
        const std::string id(trim(cols[0]));
        const auto it = by_id.find(id);
        if (it == by_id.end()) {
            reader.fail("id " + id + " has no properties row");
        }
        if (!seen.emplace(id, 0).second) {
            reader.fail("duplicate id " + id);
        }
        auto shape = mesh::read_vertices(dir / std::string(trim(cols[1])));
        if (static_cast<int>(shape.size()) != d.tmpl.mesh.num_vertices()) {
            reader.fail(id + ": " + std::to_string(shape.size()) + " vertices, template has " +
                        std::to_string(d.tmpl.mesh.num_vertices()));
        }
        d.ids.push_back(id);
        d.shapes.push_back(std::move(shape));
        d.records.push_back(records[it->second]);
    }
    if (d.ids.size() != records.size()) {
        for (const auto& r : records) {
            if (seen.find(r.id) == seen.end()) {
                throw ValidationError(dir.string() + ": properties id " + r.id + " is missing from the manifest");
            }
        }
    }
    if (d.ids.empty()) {
        throw ValidationError(dir.string() + ": empty dataset");
    }
    if (std::filesystem::exists(dir / "effects.json")) {
        d.effects = nn::read_json(dir / "effects.json");
    }
    return d;
}

} // namespace synth
} // namespace facematch

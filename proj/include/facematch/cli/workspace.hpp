#pragma once

#include "facematch/cli/run_config.hpp"
#include "facematch/core/log.hpp"
#include "facematch/mesh/io.hpp"
#include "facematch/nn/checkpoint.hpp"
#include "facematch/resample/pipeline.hpp"
#include "facematch/spiral/encoder.hpp"
#include "facematch/synth/dataset.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace facematch {
namespace cli {

namespace fs = std::filesystem;

/// Subjects on the finest hierarchy level plus the template-side resampling.
struct ResampledData
{
    resample::TemplateResampling resampling;
    std::vector<std::string> ids;
    std::vector<std::vector<mesh::Vec3>> shapes;
    std::vector<gml::PropertyRecord> records;

    spiral::EncoderTopology topology() const { return spiral::make_encoder_topology(resampling.hierarchy); }
};

inline bool is_resampled_dir(const fs::path& dir) { return fs::exists(dir / "resampling.json") && fs::exists(dir / "manifest.csv"); }

inline bool is_dataset_dir(const fs::path& dir) { return fs::exists(dir / "landmarks.json") && fs::exists(dir / "manifest.csv"); }

/**
 * Layout: resampling.json, level.obj (finest hierarchy level),
 * manifest.csv (`id,vertex_file`), shapes/<id>.obj and properties.csv.
 */
inline void save_resampled(const fs::path& dir, const ResampledData& d, const std::string& digest, std::uint64_t seed)
{
    if (d.ids.size() != d.shapes.size() || d.ids.size() != d.records.size()) {
        throw ValidationError("save_resampled: ids, shapes and records are not aligned");
    }
    fs::create_directories(dir / "shapes");
    resample::write_resampling(dir / "resampling.json", d.resampling, digest, seed);
    mesh::write_obj(dir / "level.obj", resample::level_mesh(d.resampling.hierarchy, d.resampling.hierarchy.finest()), digest);
    auto manifest = open_output(dir / "manifest.csv");
    manifest << artifact_header("manifest", digest) << '\n' << "id,vertex_file\n";
    for (std::size_t k = 0; k < d.ids.size(); ++k) {
        const std::string rel = "shapes/" + d.ids[k] + ".obj";
        manifest << d.ids[k] << ',' << rel << '\n';
        mesh::write_vertices(dir / rel, d.shapes[k], digest);
    }
    gml::write_properties(dir / "properties.csv", d.records, digest);
}

inline ResampledData load_resampled(const fs::path& dir)
{
    ResampledData d;
    d.resampling = resample::read_resampling(dir / "resampling.json");
    const int nv = d.resampling.num_output_vertices();
    const auto records = gml::read_properties(dir / "properties.csv");
    std::map<std::string, std::size_t> by_id;
    for (std::size_t k = 0; k < records.size(); ++k) {
        by_id.emplace(records[k].id, k);
    }
    const auto path = dir / "manifest.csv";
    auto in = open_input(path);
    LineReader reader(in, path.string());
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
        if (static_cast<int>(shape.size()) != nv) {
            reader.fail("subject " + id + " has " + std::to_string(shape.size()) + " vertices, hierarchy expects " + std::to_string(nv));
        }
        d.ids.push_back(id);
        d.shapes.push_back(std::move(shape));
        d.records.push_back(records[it->second]);
    }
    if (d.ids.empty()) {
        reader.fail("manifest lists no subjects");
    }
    return d;
}

/// Resamples every subject of a raw dataset with a prepared template.
inline ResampledData resample_dataset(const synth::Dataset& data, resample::TemplateResampling t)
{
    ResampledData d;
    d.shapes = resample::resample_shapes(t, data.tmpl.mesh, data.shapes);
    d.resampling = std::move(t);
    d.ids = data.ids;
    d.records = data.records;
    return d;
}

/**
 * Loads a resampled directory as is, or a raw dataset directory that is
 * resampled on the fly with `hierarchy` (a resampling.json) when given and
 * with a freshly prepared template otherwise.
 */
inline ResampledData load_subjects(const fs::path& dir, const std::optional<fs::path>& hierarchy, const RunConfig& cfg)
{
    if (is_resampled_dir(dir)) {
        auto d = load_resampled(dir);
        if (hierarchy) {
            const auto t = resample::read_resampling(*hierarchy);
            if (t.hierarchy.level(t.hierarchy.finest()).num_vertices() != d.resampling.num_output_vertices() ||
                t.topology_id != d.resampling.topology_id) {
                throw ValidationError(hierarchy->string() + ": does not match the resampling stored in " + dir.string());
            }
        }
        return d;
    }
    if (!is_dataset_dir(dir)) {
        throw ValidationError(dir.string() + ": not a dataset or resampled directory");
    }
    const auto data = synth::load_dataset(dir);
    if (hierarchy) {
        return resample_dataset(data, resample::read_resampling(*hierarchy));
    }
    log_info("resampling " + std::to_string(data.size()) + " subjects of " + dir.string());
    return resample_dataset(data, resample::prepare_template(data.tmpl.mesh, data.tmpl.corners, data.tmpl.nose_vertex, cfg.resample));
}

/// Records aligned to the ids of an embedding or feature table.
inline std::vector<gml::PropertyRecord> align_records(const std::vector<std::string>& ids, const std::vector<gml::PropertyRecord>& records,
                                                      const std::string& source)
{
    std::map<std::string, const gml::PropertyRecord*> by_id;
    for (const auto& r : records) {
        by_id.emplace(r.id, &r);
    }
    std::vector<gml::PropertyRecord> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw ValidationError(source + ": no properties for id " + id);
        }
        out.push_back(*it->second);
    }
    return out;
}

/// run.json: what produced the directory, with the seed and config digest.
inline void write_run_record(const fs::path& dir, const std::string& subcommand, std::uint64_t seed, const RunConfig& cfg,
                             const std::vector<std::string>& args)
{
    fs::create_directories(dir);
    nn::Json j = nn::checkpoint_envelope("run", config_digest(cfg), seed);
    j["subcommand"] = subcommand;
    j["arguments"] = args;
    j["config"] = serialize_config(cfg);
    nn::write_json(dir / "run.json", j);
}

} // namespace cli
} // namespace facematch

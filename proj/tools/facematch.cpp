#include "facematch/baseline/pipeline.hpp"
#include "facematch/cli/run_config.hpp"
#include "facematch/cli/workspace.hpp"
#include "facematch/eval/experiment.hpp"
#include "facematch/eval/report.hpp"
#include "facematch/fusion/claims_io.hpp"
#include "facematch/gml/encode.hpp"
#include "facematch/synth/dataset.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <list>
#include <optional>

using namespace facematch;
using cli::RunConfig;
namespace fs = std::filesystem;

namespace {

struct Common
{
    std::string config_file;
    std::vector<std::string> sets;
    std::uint64_t seed = 1;
    std::string out;
    /// Flag value per config key, applied after --config and --set.
    std::list<std::pair<std::string, std::string>> flags;
};

struct Command
{
    CLI::App* app = nullptr;
    Common common;
    std::function<int(Command&, const RunConfig&)> run;
    std::vector<std::string> args;
};

void add_common(Command& c, std::uint64_t default_seed, bool out_required)
{
    c.common.seed = default_seed;
    c.app->add_option("--config", c.common.config_file, "config file (key = value lines)")->check(CLI::ExistingFile);
    c.app->add_option("--set", c.common.sets, "override a config key, key=value (repeatable)");
    c.app->add_option("--seed", c.common.seed, "random seed")->capture_default_str();
    auto* out = c.app->add_option("--out", c.common.out, "output directory");
    if (out_required) {
        out->required();
    }
}

/// A flag that overrides one config key; its help shows the config default.
void add_key_flag(Command& c, const std::string& flag, const std::string& key)
{
    const auto* k = cli::find_config_key(key);
    auto& slot = c.common.flags.emplace_back(key, std::string());
    c.app->add_option(flag, slot.second, k->help + " (config key " + key + ")")->default_str(k->get(RunConfig{}));
}

RunConfig resolve_config(const Common& c)
{
    RunConfig cfg = c.config_file.empty() ? RunConfig{} : cli::load_config(c.config_file);
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("--set expects key=value, got '" + s + "'");
        }
        cli::set_config_value(cfg, std::string(trim(std::string_view(s).substr(0, eq))), std::string(trim(std::string_view(s).substr(eq + 1))));
    }
    for (const auto& [key, value] : c.flags) {
        if (!value.empty()) {
            cli::set_config_value(cfg, key, value);
        }
    }
    cfg.validate();
    return cfg;
}

std::optional<fs::path> optional_path(const std::string& s) { return s.empty() ? std::nullopt : std::optional<fs::path>(s); }

void print_topology(std::ostream& os, const mesh::ValidationReport& r)
{
    os << "vertices " << r.num_vertices << "\nfaces " << r.num_faces << "\nedges " << r.num_edges << "\neuler_characteristic "
       << r.euler_characteristic << "\nboundary_loops " << r.boundary_loops << "\nnon_manifold_edges " << r.non_manifold_edges.size()
       << "\nwinding_violations " << r.winding_violations.size() << "\nout_of_range_faces " << r.out_of_range_faces.size()
       << "\ndegenerate_faces " << r.degenerate_faces.size() << "\nvalid " << (r.valid() ? "yes" : "no") << '\n';
}

std::array<int, 4> parse_corners(const std::string& text)
{
    const auto parts = split(text, ',');
    if (parts.size() != 4) {
        throw ValidationError("--corners expects four comma-separated vertex indices");
    }
    std::array<int, 4> c{};
    for (std::size_t k = 0; k < 4; ++k) {
        long long v = 0;
        if (!parse_int(parts[k], v) || v < 0) {
            throw ValidationError("--corners: bad vertex index '" + parts[k] + "'");
        }
        c[k] = static_cast<int>(v);
    }
    return c;
}

gml::GmlModel load_gml(const fs::path& path, const spiral::EncoderTopology& topo) { return gml::gml_from_json(nn::read_json(path), topo); }

gml::EmbeddingTable load_features(const std::string& path) { return gml::read_embeddings(path); }

// Subcommands.

int cmd_synth(Command& c, const RunConfig& cfg, const std::string& template_path)
{
    const auto digest = cli::config_digest(cfg);
    auto sc = cfg.synth;
    sc.seed = c.common.seed;
    const auto tmpl = template_path.empty() ? synth::make_face_template(cfg.template_shape) : synth::detect_landmarks(mesh::read_obj(template_path));
    const auto g = synth::generate(sc, tmpl);
    synth::save_dataset(c.common.out, synth::make_dataset(g, sc, digest), digest);
    cli::write_run_record(c.common.out, "synth", c.common.seed, cfg, c.args);
    std::cout << "wrote " << g.records.size() << " subjects to " << c.common.out << '\n';
    return 0;
}

int cmd_resample(Command& c, const RunConfig& cfg, const std::string& data, const std::string& template_path, const std::string& corners,
                 int nose)
{
    const auto digest = cli::config_digest(cfg);
    if (data.empty() == template_path.empty()) {
        throw ValidationError("resample: give exactly one of --data or --template");
    }
    if (!data.empty()) {
        const auto dataset = synth::load_dataset(data);
        auto tmpl = dataset.tmpl;
        if (!corners.empty()) tmpl.corners = parse_corners(corners);
        if (nose >= 0) tmpl.nose_vertex = nose;
        auto d = cli::resample_dataset(dataset, resample::prepare_template(tmpl.mesh, tmpl.corners, tmpl.nose_vertex, cfg.resample));
        cli::save_resampled(c.common.out, d, digest, c.common.seed);
        std::cout << "resampled " << d.ids.size() << " subjects to " << d.resampling.num_output_vertices() << " vertices\n";
    } else {
        auto tmpl = synth::detect_landmarks(mesh::read_obj(template_path));
        if (!corners.empty()) tmpl.corners = parse_corners(corners);
        if (nose >= 0) tmpl.nose_vertex = nose;
        const auto t = resample::prepare_template(tmpl.mesh, tmpl.corners, tmpl.nose_vertex, cfg.resample);
        fs::create_directories(c.common.out);
        resample::write_resampling(fs::path(c.common.out) / "resampling.json", t, digest, c.common.seed);
        mesh::write_obj(fs::path(c.common.out) / "level.obj", resample::level_mesh(t.hierarchy, t.hierarchy.finest()), digest);
        std::cout << "hierarchy with " << t.num_output_vertices() << " vertices on level " << t.hierarchy.finest() << '\n';
    }
    cli::write_run_record(c.common.out, "resample", c.common.seed, cfg, c.args);
    return 0;
}

int cmd_train_gml(Command& c, const RunConfig& cfg, const std::string& property, const std::string& data, const std::string& hierarchy)
{
    const auto digest = cli::config_digest(cfg);
    const auto d = cli::load_subjects(data, optional_path(hierarchy), cfg);
    const auto topo = d.topology();
    std::vector<gml::Property> props;
    if (property == "all") {
        props.assign(gml::all_properties().begin(), gml::all_properties().end());
    } else {
        props.push_back(gml::parse_property(property));
    }
    fs::create_directories(c.common.out);
    for (auto p : props) {
        auto gc = cfg.experiment.gml;
        gc.property = p;
        gc.seed = nn::derive_seed(c.common.seed, 20 + static_cast<std::uint64_t>(p));
        auto r = gml::train_gml(d.shapes, d.records, topo, gc);
        auto j = gml::gml_to_json(r.model, r.epochs, digest);
        nn::write_json(fs::path(c.common.out) / ("gml_" + std::string(gml::to_string(p)) + ".json"), j);
        std::cout << gml::to_string(p) << ": held-out satisfaction " << format_double(r.epochs.empty() ? 0.0 : r.epochs.back().heldout_satisfaction)
                  << '\n';
    }
    cli::write_run_record(c.common.out, "train-gml", c.common.seed, cfg, c.args);
    return 0;
}

int cmd_encode(Command& c, const RunConfig& cfg, const std::string& models, const std::string& data, const std::string& hierarchy)
{
    const auto digest = cli::config_digest(cfg);
    const auto d = cli::load_subjects(data, optional_path(hierarchy), cfg);
    const auto topo = d.topology();
    std::vector<gml::GmlModel> m;
    for (auto p : gml::all_properties()) {
        m.push_back(load_gml(fs::path(models) / ("gml_" + std::string(gml::to_string(p)) + ".json"), topo));
    }
    gml::EmbeddingTable t{d.ids, gml::encode_dataset({&m[0], &m[1], &m[2], &m[3]}, topo, d.shapes)};
    gml::write_embeddings(fs::path(c.common.out) / "embeddings.csv", t, digest);
    cli::write_run_record(c.common.out, "encode", c.common.seed, cfg, c.args);
    std::cout << "encoded " << t.ids.size() << " subjects\n";
    return 0;
}

int cmd_train_fusion(Command& c, const RunConfig& cfg, const std::string& embeddings, const std::string& properties, const std::string& traits)
{
    const auto digest = cli::config_digest(cfg);
    const auto t = load_features(embeddings);
    const auto records = cli::align_records(t.ids, gml::read_properties(fs::path(properties)), properties);
    auto fc = cfg.experiment.fusion;
    fc.seed = c.common.seed;
    auto r = fusion::train_fusion(t.values, records, fusion::parse_traits(traits), fc);
    nn::write_json(fs::path(c.common.out) / "fusion.json", fusion::fusion_to_json(r.model, r.epochs, digest));
    cli::write_run_record(c.common.out, "train-fusion", c.common.seed, cfg, c.args);
    std::cout << "final loss " << format_double(r.epochs.back().loss) << " accuracy " << format_double(r.epochs.back().accuracy) << '\n';
    return 0;
}

int cmd_train_baseline(Command& c, const RunConfig& cfg, const std::string& data, const std::string& hierarchy, const std::string& embeddings,
                       const std::string& properties, const std::string& traits)
{
    const auto digest = cli::config_digest(cfg);
    auto bc = cfg.experiment.baseline;
    bc.seed = c.common.seed;
    gml::EmbeddingTable features;
    std::vector<gml::PropertyRecord> records;
    std::optional<baseline::PcaModel> pca;
    if (!data.empty()) {
        const auto d = cli::load_subjects(data, optional_path(hierarchy), cfg);
        const auto x = baseline::flatten_shapes(d.shapes);
        pca = baseline::pca_fit(x, bc.pca_dims);
        features = {d.ids, baseline::pca_transform(*pca, x)};
        records = d.records;
        gml::write_embeddings(fs::path(c.common.out) / "features.csv", features, digest);
    } else if (!embeddings.empty() && !properties.empty()) {
        features = load_features(embeddings);
        records = cli::align_records(features.ids, gml::read_properties(fs::path(properties)), properties);
    } else {
        throw ValidationError("train-baseline: give --data, or --embeddings with --properties");
    }
    auto m = baseline::train_baseline(features.values, records, fusion::parse_traits(traits), bc);
    m.pca = pca;
    nn::write_json(fs::path(c.common.out) / "baseline.json", baseline::baseline_to_json(m, digest));
    cli::write_run_record(c.common.out, "train-baseline", c.common.seed, cfg, c.args);
    std::cout << "trained baseline on " << records.size() << " subjects\n";
    return 0;
}

int cmd_claims(Command& c, const RunConfig& cfg, const std::string& properties, const std::string& traits, int k)
{
    const auto digest = cli::config_digest(cfg);
    const auto records = gml::read_properties(fs::path(properties));
    std::vector<int> all(records.size());
    std::iota(all.begin(), all.end(), 0);
    const auto tc = eval::make_test_claims(all, records, fusion::parse_traits(traits), cfg.experiment.imposters, k, c.common.seed);
    std::vector<fusion::Claim> claims;
    for (const auto& p : tc.pairs) {
        const auto& s = records[static_cast<std::size_t>(p.subject)];
        const auto& r = records[static_cast<std::size_t>(p.claim)];
        claims.push_back({s.id, r.id, p.label, r});
    }
    fusion::write_claims(fs::path(c.common.out) / "claims.csv", claims, digest);
    cli::write_run_record(c.common.out, "claims", c.common.seed, cfg, c.args);
    std::cout << "wrote " << claims.size() << " claims\n";
    return 0;
}

int cmd_score(Command& c, const RunConfig& cfg, const std::string& model, const std::string& embeddings, const std::string& data,
              const std::string& hierarchy, const std::string& claims_path)
{
    const auto digest = cli::config_digest(cfg);
    const auto j = nn::read_json(model);
    const std::string kind = j.value("kind", std::string());
    gml::EmbeddingTable features;
    std::optional<baseline::BaselineModel> bm;
    if (kind == "baseline") {
        bm = baseline::baseline_from_json(j);
    } else if (kind != "fusion") {
        throw ValidationError(model + ": expected a fusion or baseline checkpoint");
    }
    if (!embeddings.empty()) {
        features = load_features(embeddings);
    } else if (!data.empty() && bm && bm->pca) {
        const auto d = cli::load_subjects(data, optional_path(hierarchy), cfg);
        features = {d.ids, baseline::pca_transform(*bm->pca, baseline::flatten_shapes(d.shapes))};
    } else {
        throw ValidationError("score: give --embeddings, or --data with a PCA baseline model");
    }
    std::map<std::string, int> row;
    for (std::size_t k = 0; k < features.ids.size(); ++k) {
        row.emplace(features.ids[k], static_cast<int>(k));
    }
    const auto claims = fusion::read_claims(claims_path);
    std::vector<gml::PropertyRecord> candidates;
    std::vector<fusion::ClaimPair> pairs;
    for (std::size_t k = 0; k < claims.size(); ++k) {
        const auto it = row.find(claims[k].id);
        if (it == row.end()) {
            throw ValidationError(claims_path + ": no features for subject " + claims[k].id);
        }
        candidates.push_back(claims[k].properties);
        pairs.push_back({it->second, static_cast<int>(k), std::max(claims[k].label, 0)});
    }
    const auto s = bm ? baseline::baseline_scores(*bm, features.values, candidates, pairs)
                      : fusion::match_scores(fusion::fusion_from_json(j), features.values, candidates, pairs);
    std::vector<fusion::ScoreRow> rows;
    for (std::size_t k = 0; k < claims.size(); ++k) {
        rows.push_back({claims[k].id, claims[k].claim_id, s[static_cast<Eigen::Index>(k)], claims[k].label});
    }
    fusion::write_scores(fs::path(c.common.out) / "scores.csv", rows, digest);
    cli::write_run_record(c.common.out, "score", c.common.seed, cfg, c.args);
    std::vector<double> gen;
    std::vector<double> imp;
    for (const auto& r : rows) {
        if (r.label == 1) gen.push_back(r.score);
        if (r.label == 0) imp.push_back(r.score);
    }
    std::cout << "scored " << rows.size() << " claims";
    if (!gen.empty() && !imp.empty()) {
        const auto roc = eval::roc(gen, imp);
        std::cout << ", auc " << eval::fixed(roc.auc, 4) << " eer " << eval::fixed(roc.eer, 4);
    }
    std::cout << '\n';
    return 0;
}

int cmd_experiment(Command& c, const RunConfig& cfg, const std::string& data, const std::string& hierarchy, int jobs,
                   const std::vector<std::string>& architectures, const std::vector<std::string>& traits)
{
    const auto digest = cli::config_digest(cfg);
    const auto d = cli::load_subjects(data, optional_path(hierarchy), cfg);
    const auto topo = d.topology();
    auto ec = cfg.experiment;
    ec.seed = c.common.seed;
    ec.jobs = jobs;
    if (!architectures.empty()) {
        ec.architectures.clear();
        for (const auto& a : architectures) ec.architectures.push_back(eval::parse_architecture(a));
    }
    if (!traits.empty()) {
        ec.trait_sets.clear();
        for (const auto& t : traits) ec.trait_sets.push_back(fusion::parse_traits(t));
    }
    const auto report = eval::run_experiment_matrix({&d.shapes, &d.records, &topo}, ec);
    eval::write_report(c.common.out, report, digest);
    eval::write_gb_correlation_csv(fs::path(c.common.out) / "gb_correlation.csv", eval::gb_correlation_matrix(d.records), digest);
    cli::write_run_record(c.common.out, "experiment", c.common.seed, cfg, c.args);
    std::cout << eval::render_table_markdown(report);
    return 0;
}

int cmd_roc_plot(Command& c, const RunConfig& cfg, const std::string& input)
{
    std::vector<eval::PlotPanel> panels;
    for (const auto& t : fusion::experiment_trait_sets()) {
        eval::PlotPanel panel{t.name(), {}};
        for (auto a : eval::all_architectures()) {
            const auto path = fs::path(input) / eval::roc_file_name(a, t, "pooled");
            if (!fs::exists(path)) continue;
            eval::PlotCurve curve;
            curve.label = eval::display_name(a);
            curve.color = eval::architecture_color(a);
            curve.dashed = eval::architecture_dashed(a);
            curve.points = eval::read_roc_csv(path);
            for (std::size_t k = 1; k < curve.points.fpr.size(); ++k) {
                curve.auc += 0.5 * (curve.points.fpr[k] - curve.points.fpr[k - 1]) * (curve.points.tpr[k] + curve.points.tpr[k - 1]);
            }
            panel.curves.push_back(std::move(curve));
        }
        if (!panel.curves.empty()) panels.push_back(std::move(panel));
    }
    if (panels.empty()) {
        throw ValidationError(input + ": no roc_<architecture>_<traits>_pooled.csv files");
    }
    fs::create_directories(c.common.out);
    auto out = open_output(fs::path(c.common.out) / "roc.svg");
    out << eval::render_roc_svg(panels, cli::config_digest(cfg));
    cli::write_run_record(c.common.out, "roc-plot", c.common.seed, cfg, c.args);
    std::cout << "plotted " << panels.size() << " panels\n";
    return 0;
}

int cmd_validate(Command& c, const RunConfig& cfg, const std::string& template_path, const std::string& data, bool prepare)
{
    std::ostringstream report;
    bool ok = true;
    report << "config_digest " << cli::config_digest(cfg) << '\n';
    if (!template_path.empty()) {
        const auto m = mesh::read_obj(template_path);
        const auto r = mesh::validate_topology(m);
        print_topology(report, r);
        ok = ok && r.valid();
        if (r.valid()) {
            const auto t = synth::detect_landmarks(m);
            report << "corners " << t.corners[0] << ',' << t.corners[1] << ',' << t.corners[2] << ',' << t.corners[3] << "\nnose_vertex "
                   << t.nose_vertex << '\n';
            if (prepare) {
                const auto p = resample::prepare_template(m, t.corners, t.nose_vertex, cfg.resample);
                for (int l = 0; l <= p.hierarchy.finest(); ++l) {
                    const auto lr = mesh::validate_topology(resample::level_mesh(p.hierarchy, l));
                    report << "level " << l << " vertices " << lr.num_vertices << " faces " << lr.num_faces << " euler " << lr.euler_characteristic
                           << '\n';
                }
            }
        }
    }
    if (!data.empty()) {
        if (cli::is_resampled_dir(data)) {
            const auto d = cli::load_resampled(data);
            report << "resampled_subjects " << d.ids.size() << "\nvertices_per_subject " << d.resampling.num_output_vertices() << '\n';
        } else {
            const auto d = synth::load_dataset(data);
            const auto r = mesh::validate_topology(d.tmpl.mesh);
            report << "subjects " << d.size() << "\ntemplate_vertices " << r.num_vertices << "\ntemplate_valid " << (r.valid() ? "yes" : "no") << '\n';
            ok = ok && r.valid();
        }
    }
    std::cout << report.str();
    if (!c.common.out.empty()) {
        auto out = open_output(fs::path(c.common.out) / "validate.txt");
        out << artifact_header("validate", cli::config_digest(cfg)) << '\n' << report.str();
        cli::write_run_record(c.common.out, "validate", c.common.seed, cfg, c.args);
    }
    if (!ok) {
        std::cerr << "error: validation failed\n";
        return 1;
    }
    return 0;
}

int cmd_config(Command& c, const RunConfig& cfg, bool list)
{
    if (list) {
        for (const auto& k : cli::config_keys()) {
            std::cout << k.name << " = " << k.get(cfg) << "  # " << k.help << '\n';
        }
        return 0;
    }
    const auto text = cli::serialize_config(cfg);
    if (c.common.out.empty()) {
        std::cout << text;
    } else {
        fs::create_directories(c.common.out);
        auto out = open_output(fs::path(c.common.out) / "config.txt");
        out << text;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"facematch: face-to-properties biometric matching on triangle meshes"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "print progress messages");
    std::vector<std::unique_ptr<Command>> commands;
    auto make = [&](const std::string& name, const std::string& help, std::uint64_t seed, bool out_required) -> Command& {
        auto c = std::make_unique<Command>();
        c->app = app.add_subcommand(name, help);
        add_common(*c, seed, out_required);
        commands.push_back(std::move(c));
        return *commands.back();
    };

    std::string template_path, data, hierarchy, corners, property = "all", models, embeddings, properties, traits = "all", claims, model, input;
    int nose = -1;
    int jobs = 1;
    int claims_k = 10;
    bool prepare = false;
    bool list = false;
    std::vector<std::string> architectures;
    std::vector<std::string> trait_sets;

    auto& synth_cmd = make("synth", "generate a synthetic face dataset", 7, true);
    add_key_flag(synth_cmd, "--n", "synth.n_subjects");
    synth_cmd.app->add_option("--template", template_path, "template OBJ (default: built-in face grid)")->check(CLI::ExistingFile);
    synth_cmd.run = [&](Command& c, const RunConfig& cfg) { return cmd_synth(c, cfg, template_path); };

    auto& resample_cmd = make("resample", "build the resampling hierarchy and resample subjects", 1, true);
    resample_cmd.app->add_option("--data", data, "dataset directory to resample");
    resample_cmd.app->add_option("--template", template_path, "template OBJ (hierarchy only)")->check(CLI::ExistingFile);
    resample_cmd.app->add_option("--corners", corners, "four boundary corner vertices a,b,c,d (default: detected)");
    resample_cmd.app->add_option("--nose-vertex", nose, "nose tip vertex (default: detected)");
    add_key_flag(resample_cmd, "--grid", "resample.grid_size");
    add_key_flag(resample_cmd, "--levels", "resample.levels");
    resample_cmd.run = [&](Command& c, const RunConfig& cfg) { return cmd_resample(c, cfg, data, template_path, corners, nose); };

    auto& gml_cmd = make("train-gml", "train spiral-encoder embeddings with triplet loss", 1, true);
    gml_cmd.app->add_option("--property", property, "sex, age, bmi, gb or all")->capture_default_str();
    gml_cmd.app->add_option("--data", data, "dataset or resampled directory")->required();
    gml_cmd.app->add_option("--hierarchy", hierarchy, "resampling.json for raw datasets")->check(CLI::ExistingFile);
    add_key_flag(gml_cmd, "--epochs", "gml.epochs");
    gml_cmd.run = [&](Command& c, const RunConfig& cfg) { return cmd_train_gml(c, cfg, property, data, hierarchy); };

    auto& encode_cmd = make("encode", "write 20-dimensional embeddings for every subject", 1, true);
    encode_cmd.app->add_option("--models", models, "directory holding gml_<property>.json")->required()->check(CLI::ExistingDirectory);
    encode_cmd.app->add_option("--data", data, "dataset or resampled directory")->required();
    encode_cmd.app->add_option("--hierarchy", hierarchy, "resampling.json for raw datasets")->check(CLI::ExistingFile);
    encode_cmd.run = [&](Command& c, const RunConfig& cfg) { return cmd_encode(c, cfg, models, data, hierarchy); };

    auto& fusion_cmd = make("train-fusion", "train the fusion network on embeddings and properties", 1, true);
    fusion_cmd.app->add_option("--embeddings", embeddings, "embeddings CSV")->required()->check(CLI::ExistingFile);
    fusion_cmd.app->add_option("--properties", properties, "properties CSV")->required()->check(CLI::ExistingFile);
    fusion_cmd.app->add_option("--traits", traits, "sex,age,bmi,gb subset or all")->capture_default_str();
    add_key_flag(fusion_cmd, "--epochs", "fusion.epochs");
    fusion_cmd.run = [&](Command& c, const RunConfig& cfg) { return cmd_train_fusion(c, cfg, embeddings, properties, traits); };

    auto& baseline_cmd = make("train-baseline", "train the PCA, linear classifier and naive Bayes baseline", 1, true);
    baseline_cmd.app->add_option("--data", data, "dataset or resampled directory (PCA features)");
    baseline_cmd.app->add_option("--hierarchy", hierarchy, "resampling.json for raw datasets")->check(CLI::ExistingFile);
    baseline_cmd.app->add_option("--embeddings", embeddings, "feature CSV used instead of PCA")->check(CLI::ExistingFile);
    baseline_cmd.app->add_option("--properties", properties, "properties CSV for --embeddings")->check(CLI::ExistingFile);
    baseline_cmd.app->add_option("--traits", traits, "sex,age,bmi,gb subset or all")->capture_default_str();
    add_key_flag(baseline_cmd, "--pca-dims", "baseline.pca_dims");
    baseline_cmd.run = [&](Command& c, const RunConfig& cfg) { return cmd_train_baseline(c, cfg, data, hierarchy, embeddings, properties, traits); };

    auto& claims_cmd = make("claims", "draw genuine and imposter claims for every subject", 1, true);
    claims_cmd.app->add_option("--properties", properties, "properties CSV")->required()->check(CLI::ExistingFile);
    claims_cmd.app->add_option("--traits", traits, "traits deciding imposters")->capture_default_str();
    claims_cmd.app->add_option("--imposters", claims_k, "imposter claims per subject")->capture_default_str();
    claims_cmd.run = [&](Command& c, const RunConfig& cfg) { return cmd_claims(c, cfg, properties, traits, claims_k); };

    auto& score_cmd = make("score", "score claims with a fusion or baseline model", 1, true);
    score_cmd.app->add_option("--model", model, "fusion.json or baseline.json")->required()->check(CLI::ExistingFile);
    score_cmd.app->add_option("--embeddings", embeddings, "embeddings or feature CSV")->check(CLI::ExistingFile);
    score_cmd.app->add_option("--data", data, "dataset or resampled directory (PCA baseline)");
    score_cmd.app->add_option("--hierarchy", hierarchy, "resampling.json for raw datasets")->check(CLI::ExistingFile);
    score_cmd.app->add_option("--claims", claims, "claims CSV")->required()->check(CLI::ExistingFile);
    score_cmd.run = [&](Command& c, const RunConfig& cfg) { return cmd_score(c, cfg, model, embeddings, data, hierarchy, claims); };

    auto& exp_cmd = make("experiment", "run the cross-validated architecture by trait-set matrix", 1, true);
    exp_cmd.app->add_option("--data", data, "dataset or resampled directory")->required();
    exp_cmd.app->add_option("--hierarchy", hierarchy, "resampling.json for raw datasets")->check(CLI::ExistingFile);
    exp_cmd.app->add_option("--jobs", jobs, "parallel fold workers")->capture_default_str()->check(CLI::PositiveNumber);
    exp_cmd.app->add_option("--architectures", architectures, "subset of pca_nb pca_fusion gml_nb gml_fusion (default: all)");
    exp_cmd.app->add_option("--traits", trait_sets, "trait sets such as sex age+bmi all (default: the seven report rows)");
    add_key_flag(exp_cmd, "--folds", "experiment.folds");
    add_key_flag(exp_cmd, "--imposters", "experiment.imposters_per_subject");
    exp_cmd.run = [&](Command& c, const RunConfig& cfg) { return cmd_experiment(c, cfg, data, hierarchy, jobs, architectures, trait_sets); };

    auto& plot_cmd = make("roc-plot", "draw pooled ROC curves of an experiment directory as SVG", 1, true);
    plot_cmd.app->add_option("--input", input, "experiment output directory")->required()->check(CLI::ExistingDirectory);
    plot_cmd.run = [&](Command& c, const RunConfig& cfg) { return cmd_roc_plot(c, cfg, input); };

    auto& validate_cmd = make("validate", "check a template mesh, a dataset or a config file", 1, false);
    validate_cmd.app->add_option("--template", template_path, "template OBJ")->check(CLI::ExistingFile);
    validate_cmd.app->add_option("--data", data, "dataset or resampled directory");
    validate_cmd.app->add_flag("--prepare", prepare, "also build the resampling hierarchy of --template");
    validate_cmd.run = [&](Command& c, const RunConfig& cfg) { return cmd_validate(c, cfg, template_path, data, prepare); };

    auto& config_cmd = make("config", "print the resolved configuration", 1, false);
    config_cmd.app->add_flag("--list", list, "list every key with its help text");
    config_cmd.run = [&](Command& c, const RunConfig& cfg) { return cmd_config(c, cfg, list); };

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (verbose) {
        set_log_sink([](LogLevel level, std::string_view msg) {
            std::cerr << (level == LogLevel::warning ? "warning: " : "") << msg << '\n';
        });
    }
    for (auto& c : commands) {
        if (!c->app->parsed()) continue;
        c->args.assign(argv + 1, argv + argc);
        try {
            return c->run(*c, resolve_config(c->common));
        } catch (const ValidationError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        } catch (const std::exception& e) {
            std::cerr << "fatal: " << e.what() << '\n';
            return 2;
        }
    }
    return 1;
}

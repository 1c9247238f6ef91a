#pragma once

#include "facematch/core/digest.hpp"
#include "facematch/core/error.hpp"
#include "facematch/core/text_io.hpp"
#include "facematch/eval/experiment.hpp"
#include "facematch/resample/pipeline.hpp"
#include "facematch/synth/generator.hpp"
#include "facematch/synth/template_face.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace facematch {
namespace cli {

inline constexpr int config_version = 1;

/// Every tunable default of the workflow. Seeds are not part of the config;
/// they come from --seed and are recorded next to the digest.
struct RunConfig
{
    synth::SynthConfig synth;
    synth::TemplateShape template_shape;
    resample::ResampleConfig resample;
    eval::ExperimentConfig experiment;

    RunConfig() { sync(); }

    /// Copies the shared imposter thresholds into the stage configs.
    void sync()
    {
        experiment.fusion.imposters = experiment.imposters;
        experiment.baseline.imposters = experiment.imposters;
    }

    void validate() const
    {
        synth.validate();
        resample.force.validate();
        if (resample.grid_size < 8 || resample.levels < 1 || resample.levels > 6) {
            throw ValidationError("config: resample.grid_size >= 8 and 1 <= resample.levels <= 6 required");
        }
        if (template_shape.cells < 4) {
            throw ValidationError("config: template.cells must be at least 4");
        }
        experiment.validate();
    }
};

namespace detail {

inline std::string join_ints(const std::vector<int>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

inline std::vector<int> parse_ints(const std::string& text)
{
    std::vector<int> out;
    for (const auto& part : split(text, ',')) {
        long long v = 0;
        if (!parse_int(part, v) || v < 1) {
            throw ValidationError("expected a comma-separated list of positive integers, got '" + text + "'");
        }
        out.push_back(static_cast<int>(v));
    }
    return out;
}

inline double to_double(const std::string& text)
{
    double v = 0.0;
    if (!parse_double(text, v)) {
        throw ValidationError("expected a number, got '" + text + "'");
    }
    return v;
}

inline int to_int(const std::string& text)
{
    long long v = 0;
    if (!parse_int(text, v)) {
        throw ValidationError("expected an integer, got '" + text + "'");
    }
    return static_cast<int>(v);
}

} // namespace detail

struct ConfigKey
{
    std::string name;
    std::string help;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

/// The full key registry in canonical (sorted) order.
inline const std::vector<ConfigKey>& config_keys()
{
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> k;
        auto real = [&](std::string name, std::string help, auto member) {
            k.push_back({std::move(name), std::move(help), [member](const RunConfig& c) { return format_double(member(c)); },
                         [member](RunConfig& c, const std::string& v) { member(c) = detail::to_double(v); }});
        };
        auto integer = [&](std::string name, std::string help, auto member) {
            k.push_back({std::move(name), std::move(help), [member](const RunConfig& c) { return std::to_string(member(c)); },
                         [member](RunConfig& c, const std::string& v) { member(c) = detail::to_int(v); }});
        };
        auto ints = [&](std::string name, std::string help, auto member) {
            k.push_back({std::move(name), std::move(help), [member](const RunConfig& c) { return detail::join_ints(member(c)); },
                         [member](RunConfig& c, const std::string& v) { member(c) = detail::parse_ints(v); }});
        };
        auto activation = [&](std::string name, std::string help, auto member) {
            k.push_back({std::move(name), std::move(help), [member](const RunConfig& c) { return std::string(nn::to_string(member(c))); },
                         [member](RunConfig& c, const std::string& v) { member(c) = nn::parse_activation(v); }});
        };

        real("baseline.c", "linear SVM/SVR regularization constant C", [](auto& c) -> auto& { return c.experiment.baseline.solver.c; });
        real("baseline.classifier_fraction", "share of the fusion partition used for the per-trait classifiers",
             [](auto& c) -> auto& { return c.experiment.baseline.classifier_fraction; });
        real("baseline.eps_tube", "SVR epsilon tube", [](auto& c) -> auto& { return c.experiment.baseline.solver.eps_tube; });
        integer("baseline.fuser_rounds", "genuine/imposter draws per subject when fitting the NB fuser",
                [](auto& c) -> auto& { return c.experiment.baseline.fuser_rounds; });
        integer("baseline.pca_dims", "number of PCA components", [](auto& c) -> auto& { return c.experiment.baseline.pca_dims; });
        integer("baseline.solver_epochs", "passes of the stochastic subgradient solver", [](auto& c) -> auto& { return c.experiment.baseline.solver.epochs; });
        real("baseline.solver_tolerance", "relative objective change that triggers a non-convergence warning",
             [](auto& c) -> auto& { return c.experiment.baseline.solver.tolerance; });
        real("baseline.t_age", "age score offset T", [](auto& c) -> auto& { return c.experiment.baseline.t_age; });
        real("baseline.t_bmi", "bmi score offset T", [](auto& c) -> auto& { return c.experiment.baseline.t_bmi; });
        integer("experiment.folds", "cross-validation folds", [](auto& c) -> auto& { return c.experiment.folds; });
        integer("experiment.imposters_per_subject", "imposter claims per test subject (K)",
                [](auto& c) -> auto& { return c.experiment.imposters_per_subject; });
        activation("fusion.activation", "hidden activation of the fusion network", [](auto& c) -> auto& { return c.experiment.fusion.activation; });
        integer("fusion.batch_size", "fusion mini-batch size", [](auto& c) -> auto& { return c.experiment.fusion.batch_size; });
        integer("fusion.epochs", "fusion training epochs", [](auto& c) -> auto& { return c.experiment.fusion.epochs; });
        integer("fusion.gb_bits", "gb sign bits in the claim vector (4 or 25)", [](auto& c) -> auto& { return c.experiment.fusion.gb_bits; });
        ints("fusion.hidden", "hidden layer widths", [](auto& c) -> auto& { return c.experiment.fusion.hidden; });
        real("fusion.learning_rate", "fusion Adam learning rate", [](auto& c) -> auto& { return c.experiment.fusion.learning_rate; });
        activation("gml.activation", "spiral encoder activation", [](auto& c) -> auto& { return c.experiment.gml.activation; });
        integer("gml.batch_size", "subjects per triplet-mining batch", [](auto& c) -> auto& { return c.experiment.gml.batch_size; });
        ints("gml.channels", "spiral convolution widths, one per pooling stage", [](auto& c) -> auto& { return c.experiment.gml.channels; });
        integer("gml.epochs", "triplet training epochs per property", [](auto& c) -> auto& { return c.experiment.gml.epochs; });
        real("gml.gb_epsilon", "floor on gb component accuracy when weighting components",
             [](auto& c) -> auto& { return c.experiment.gml.gb_epsilon; });
        real("gml.holdout", "fraction of embedding-training subjects held out for satisfaction",
             [](auto& c) -> auto& { return c.experiment.gml.holdout; });
        real("gml.learning_rate", "encoder Adam learning rate", [](auto& c) -> auto& { return c.experiment.gml.learning_rate; });
        real("gml.margin", "triplet margin", [](auto& c) -> auto& { return c.experiment.gml.margin; });
        real("gml.t_age", "age threshold for same-class triplets", [](auto& c) -> auto& { return c.experiment.gml.thresholds.age; });
        real("gml.t_bmi", "bmi threshold for same-class triplets", [](auto& c) -> auto& { return c.experiment.gml.thresholds.bmi; });
        integer("gml.triplets_per_subject", "triplets mined per batch member", [](auto& c) -> auto& { return c.experiment.gml.triplets_per_subject; });
        integer("imposter.gb_components", "leading gb components compared by sign", [](auto& c) -> auto& { return c.experiment.imposters.gb_components; });
        real("imposter.t_age", "age difference that makes a claim an imposter", [](auto& c) -> auto& { return c.experiment.imposters.t_age; });
        real("imposter.t_bmi", "bmi difference that makes a claim an imposter", [](auto& c) -> auto& { return c.experiment.imposters.t_bmi; });
        real("resample.decay", "per-iteration decay of the redistribution width", [](auto& c) -> auto& { return c.resample.force.decay; });
        integer("resample.grid_size", "geometry image resolution", [](auto& c) -> auto& { return c.resample.grid_size; });
        integer("resample.iterations", "point redistribution iterations", [](auto& c) -> auto& { return c.resample.force.iterations; });
        integer("resample.levels", "subdivision levels of the output hierarchy", [](auto& c) -> auto& { return c.resample.levels; });
        real("resample.sigma0", "initial redistribution width", [](auto& c) -> auto& { return c.resample.force.sigma0; });
        real("synth.age_effect", "shape displacement per unit age code (mm)", [](auto& c) -> auto& { return c.synth.age_effect; });
        real("synth.age_max", "maximum age", [](auto& c) -> auto& { return c.synth.age_max; });
        real("synth.age_mean", "target mean age", [](auto& c) -> auto& { return c.synth.age_mean; });
        real("synth.age_min", "minimum age", [](auto& c) -> auto& { return c.synth.age_min; });
        real("synth.age_pivot", "age at the centre of the saturating age curve", [](auto& c) -> auto& { return c.synth.age_pivot; });
        real("synth.age_scale", "width of the saturating age curve (years)", [](auto& c) -> auto& { return c.synth.age_scale; });
        real("synth.age_shape", "gamma shape of the age distribution", [](auto& c) -> auto& { return c.synth.age_shape; });
        real("synth.bmi_effect", "shape displacement per standardized bmi (mm)", [](auto& c) -> auto& { return c.synth.bmi_effect; });
        real("synth.bmi_log_sigma", "log-scale spread of bmi", [](auto& c) -> auto& { return c.synth.bmi_log_sigma; });
        real("synth.bmi_max", "maximum bmi", [](auto& c) -> auto& { return c.synth.bmi_max; });
        real("synth.bmi_mean", "target mean bmi", [](auto& c) -> auto& { return c.synth.bmi_mean; });
        real("synth.bmi_min", "minimum bmi", [](auto& c) -> auto& { return c.synth.bmi_min; });
        real("synth.female_ratio", "fraction of female subjects", [](auto& c) -> auto& { return c.synth.female_ratio; });
        real("synth.gb_effect", "displacement per unit of gb components 1-4 (mm)", [](auto& c) -> auto& { return c.synth.gb_effect; });
        real("synth.gb_minor_effect", "displacement per unit of gb components 5-25 (mm)", [](auto& c) -> auto& { return c.synth.gb_minor_effect; });
        real("synth.gb_rho", "correlation decay between gb components", [](auto& c) -> auto& { return c.synth.gb_rho; });
        integer("synth.latent_dim", "dimension of the identity noise basis", [](auto& c) -> auto& { return c.synth.latent_dim; });
        integer("synth.n_subjects", "number of subjects", [](auto& c) -> auto& { return c.synth.n_subjects; });
        real("synth.noise", "identity noise RMS (mm)", [](auto& c) -> auto& { return c.synth.noise; });
        real("synth.sex_effect", "shape displacement per unit sex code (mm)", [](auto& c) -> auto& { return c.synth.sex_effect; });
        integer("template.cells", "grid cells per side of the built-in template", [](auto& c) -> auto& { return c.template_shape.cells; });
        real("template.density_warp", "vertex density pull toward the nose", [](auto& c) -> auto& { return c.template_shape.density_warp; });
        std::sort(k.begin(), k.end(), [](const ConfigKey& a, const ConfigKey& b) { return a.name < b.name; });
        return k;
    }();
    return keys;
}

inline const ConfigKey* find_config_key(const std::string& name)
{
    for (const auto& k : config_keys()) {
        if (k.name == name) {
            return &k;
        }
    }
    return nullptr;
}

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value)
{
    const auto* k = find_config_key(key);
    if (k == nullptr) {
        throw ValidationError("unknown config key '" + key + "'");
    }
    k->set(c, value);
    c.sync();
}

/// `version = 1` followed by every key in sorted order.
inline std::string serialize_config(const RunConfig& c)
{
    std::ostringstream s;
    s << "version = " << config_version << '\n';
    for (const auto& k : config_keys()) {
        s << k.name << " = " << k.get(c) << '\n';
    }
    return s.str();
}

inline std::string config_digest(const RunConfig& c) { return digest_hex(serialize_config(c)); }

/// Parses `key = value` lines; `#` starts a comment line. Unknown keys,
/// duplicates and a missing or wrong version line are rejected.
inline RunConfig parse_config(std::istream& in, const std::string& source)
{
    RunConfig c;
    LineReader reader(in, source);
    std::string line;
    bool version_seen = false;
    std::map<std::string, int> seen;
    while (reader.next(line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            reader.fail("expected key = value");
        }
        const std::string key(trim(std::string_view(line).substr(0, eq)));
        const std::string value(trim(std::string_view(line).substr(eq + 1)));
        if (key == "version") {
            if (value != std::to_string(config_version)) {
                reader.fail("unsupported config version '" + value + "'");
            }
            version_seen = true;
            continue;
        }
        if (seen.count(key) > 0) {
            reader.fail("duplicate key '" + key + "'");
        }
        seen[key] = static_cast<int>(reader.line_number());
        try {
            set_config_value(c, key, value);
        } catch (const ValidationError& e) {
            reader.fail(std::string(key) + ": " + e.what());
        }
    }
    if (!version_seen) {
        throw ParseError(source, 0, "missing 'version = " + std::to_string(config_version) + "' line");
    }
    c.validate();
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return parse_config(in, path.string());
}

} // namespace cli
} // namespace facematch

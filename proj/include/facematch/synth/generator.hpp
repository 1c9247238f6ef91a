#pragma once

#include "facematch/core/error.hpp"
#include "facematch/gml/property_record.hpp"
#include "facematch/nn/init.hpp"
#include "facematch/synth/template_face.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

namespace facematch {
namespace synth {

using gml::gb_dims;
using gml::PropertyRecord;

/**
 * Generator settings. Effect sizes are millimeters of RMS displacement per
 * unit of the trait code: sex is coded -1/+1, age as tanh((age - age_pivot) /
 * age_scale), BMI as a z-score against the nominal BMI distribution, and each
 * gb component by its raw (unit variance) value.
 */
struct SynthConfig
{
    int n_subjects = 500;
    std::uint64_t seed = 7;

    double sex_effect = 0.5;
    double age_effect = 2.0;
    double bmi_effect = 1.5;
    /// Effect of each of the first four gb components.
    double gb_effect = 1.5;
    /// Effect of components 5..25.
    double gb_minor_effect = 0.3;

    double noise = 4.0;
    int latent_dim = 16;

    double female_ratio = 0.68;
    double age_min = 5.0;
    double age_max = 80.0;
    double age_mean = 27.39;
    double age_shape = 2.0;
    double age_pivot = 25.0;
    double age_scale = 10.0;
    double bmi_min = 12.0;
    double bmi_max = 62.0;
    double bmi_mean = 25.03;
    double bmi_log_sigma = 0.2;
    /// Correlation between gb components i and j is gb_rho^|i - j|.
    double gb_rho = 0.4;

    void validate() const
    {
        if (n_subjects < 30) {
            throw ValidationError("synth: n_subjects must be at least 30");
        }
        for (double e : {sex_effect, age_effect, bmi_effect, gb_effect, gb_minor_effect, noise}) {
            if (!(e >= 0.0) || !std::isfinite(e)) {
                throw ValidationError("synth: effect sizes and noise must be non-negative");
            }
        }
        if (latent_dim < 1) {
            throw ValidationError("synth: latent_dim must be positive");
        }
        if (!(female_ratio >= 0.0 && female_ratio <= 1.0)) {
            throw ValidationError("synth: female_ratio must lie in [0, 1]");
        }
        if (!(age_min > 0.0 && age_mean > age_min && age_max > age_mean && age_shape > 0.0 && age_scale > 0.0)) {
            throw ValidationError("synth: inconsistent age distribution");
        }
        if (!(bmi_min > 0.0 && bmi_mean > bmi_min && bmi_max > bmi_mean && bmi_log_sigma > 0.0)) {
            throw ValidationError("synth: inconsistent bmi distribution");
        }
        if (!(gb_rho > -1.0 && gb_rho < 1.0)) {
            throw ValidationError("synth: gb_rho must lie in (-1, 1)");
        }
    }

    double bmi_sd() const { return bmi_mean * std::sqrt(std::exp(bmi_log_sigma * bmi_log_sigma) - 1.0); }
    double gb_component_effect(int c) const { return c < 4 ? gb_effect : gb_minor_effect; }
};

using Field = std::vector<Vec3>;

/// Named ground-truth displacement fields plus the latent noise basis.
struct SynthModel
{
    Field sex;
    Field age;
    Field bmi;
    std::vector<Field> gb;
    std::vector<Field> noise_basis;
};

inline double field_dot(const Field& a, const Field& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i].dot(b[i]);
    }
    return s;
}

/// Root mean square of per-vertex displacement lengths.
inline double field_rms(const Field& f)
{
    return f.empty() ? 0.0 : std::sqrt(field_dot(f, f) / static_cast<double>(f.size()));
}

/// Sum of random Gaussian bumps over the template's xy extent, scaled to unit RMS.
inline Field smooth_field(const TriangleMesh& tmpl, std::mt19937_64& rng, int bumps = 6)
{
    Eigen::Vector2d lo(std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
    Eigen::Vector2d hi = -lo;
    for (const auto& v : tmpl.vertices) {
        lo = lo.cwiseMin(v.head<2>());
        hi = hi.cwiseMax(v.head<2>());
    }
    const Eigen::Vector2d mid = 0.5 * (lo + hi);
    const Eigen::Vector2d half = (0.5 * (hi - lo)).cwiseMax(1e-12);
    std::uniform_real_distribution<double> center(-0.8, 0.8);
    std::uniform_real_distribution<double> width(0.2, 0.5);
    std::normal_distribution<double> amp;
    struct Bump
    {
        Eigen::Vector2d c;
        double s;
        Vec3 a;
    };
    std::vector<Bump> bs;
    for (int k = 0; k < bumps; ++k) {
        Bump b;
        b.c = Eigen::Vector2d(center(rng), center(rng));
        b.s = width(rng);
        b.a = Vec3(amp(rng), amp(rng), amp(rng));
        bs.push_back(b);
    }
    Field f(tmpl.vertices.size(), Vec3::Zero());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Eigen::Vector2d p = (tmpl.vertices[i].head<2>() - mid).cwiseQuotient(half);
        for (const auto& b : bs) {
            f[i] += b.a * std::exp(-(p - b.c).squaredNorm() / (2.0 * b.s * b.s));
        }
    }
    const double rms = field_rms(f);
    if (!(rms > 0.0)) {
        throw NumericalError("smooth_field: degenerate template extent");
    }
    for (auto& v : f) {
        v /= rms;
    }
    return f;
}

inline SynthModel make_synth_model(const SynthConfig& cfg, const TriangleMesh& tmpl)
{
    std::mt19937_64 rng(nn::derive_seed(cfg.seed, 0x5eedf1e1dULL));
    SynthModel m;
    m.sex = smooth_field(tmpl, rng);
    m.age = smooth_field(tmpl, rng);
    m.bmi = smooth_field(tmpl, rng);
    for (int c = 0; c < gb_dims; ++c) {
        m.gb.push_back(smooth_field(tmpl, rng));
    }
    for (int k = 0; k < cfg.latent_dim; ++k) {
        m.noise_basis.push_back(smooth_field(tmpl, rng));
    }
    return m;
}

inline double sex_code(int sex) { return sex == 1 ? 1.0 : -1.0; }

inline double age_code(const SynthConfig& cfg, double age) { return std::tanh((age - cfg.age_pivot) / cfg.age_scale); }

inline double bmi_code(const SynthConfig& cfg, double bmi) { return (bmi - cfg.bmi_mean) / cfg.bmi_sd(); }

/// Lower Cholesky factor of the gb correlation matrix.
inline Eigen::MatrixXd gb_cholesky(double rho)
{
    Eigen::MatrixXd c(gb_dims, gb_dims);
    for (int i = 0; i < gb_dims; ++i) {
        for (int j = 0; j < gb_dims; ++j) {
            c(i, j) = std::pow(rho, std::abs(i - j));
        }
    }
    return Eigen::LLT<Eigen::MatrixXd>(c).matrixL();
}

inline std::string subject_id(int index)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%04d", index + 1);
    return buf;
}

inline PropertyRecord sample_record(const SynthConfig& cfg, const Eigen::MatrixXd& gb_chol, int index, std::mt19937_64& rng)
{
    PropertyRecord r;
    r.id = subject_id(index);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    r.sex = unit(rng) < cfg.female_ratio ? 0 : 1;
    std::gamma_distribution<double> age_tail(cfg.age_shape, (cfg.age_mean - cfg.age_min) / cfg.age_shape);
    r.age = std::min(cfg.age_max, cfg.age_min + age_tail(rng));
    const double mu = std::log(cfg.bmi_mean) - 0.5 * cfg.bmi_log_sigma * cfg.bmi_log_sigma;
    std::lognormal_distribution<double> bmi(mu, cfg.bmi_log_sigma);
    r.bmi = std::clamp(bmi(rng), cfg.bmi_min, cfg.bmi_max);
    std::normal_distribution<double> g;
    Eigen::VectorXd z(gb_dims);
    for (int c = 0; c < gb_dims; ++c) {
        z[c] = g(rng);
    }
    const Eigen::VectorXd gb = gb_chol * z;
    for (int c = 0; c < gb_dims; ++c) {
        r.gb[static_cast<std::size_t>(c)] = gb[c];
    }
    return r;
}

/// Displacement of a subject with the given traits, before noise.
inline Field trait_displacement(const SynthConfig& cfg, const SynthModel& m, const PropertyRecord& r)
{
    Field d(m.sex.size(), Vec3::Zero());
    const double s = cfg.sex_effect * sex_code(r.sex);
    const double a = cfg.age_effect * age_code(cfg, r.age);
    const double b = cfg.bmi_effect * bmi_code(cfg, r.bmi);
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] += s * m.sex[i] + a * m.age[i] + b * m.bmi[i];
    }
    for (int c = 0; c < gb_dims; ++c) {
        const double w = cfg.gb_component_effect(c) * r.gb[static_cast<std::size_t>(c)];
        if (w != 0.0) {
            const auto& f = m.gb[static_cast<std::size_t>(c)];
            for (std::size_t i = 0; i < d.size(); ++i) {
                d[i] += w * f[i];
            }
        }
    }
    return d;
}

struct GeneratedData
{
    FaceTemplate tmpl;
    SynthModel model;
    std::vector<std::vector<Vec3>> shapes;
    std::vector<PropertyRecord> records;
    /// Latent noise coefficients per subject (latent_dim each).
    std::vector<std::vector<double>> noise_coefficients;
};

/**
 * Subject shape = template + trait displacement + sum_k z_k * noise_basis_k,
 * z_k ~ N(0, noise^2 / latent_dim), so the expected RMS noise displacement is
 * `noise` mm. Subject k draws from its own derived seed.
 */
inline GeneratedData generate(const SynthConfig& cfg, const FaceTemplate& tmpl)
{
    cfg.validate();
    GeneratedData out;
    out.tmpl = tmpl;
    out.model = make_synth_model(cfg, tmpl.mesh);
    const auto chol = gb_cholesky(cfg.gb_rho);
    const double coeff_sd = cfg.noise / std::sqrt(static_cast<double>(cfg.latent_dim));
    for (int k = 0; k < cfg.n_subjects; ++k) {
        std::mt19937_64 rng(nn::derive_seed(cfg.seed, static_cast<std::uint64_t>(k)));
        auto r = sample_record(cfg, chol, k, rng);
        Field d = trait_displacement(cfg, out.model, r);
        std::normal_distribution<double> g(0.0, coeff_sd);
        std::vector<double> z(static_cast<std::size_t>(cfg.latent_dim));
        for (int l = 0; l < cfg.latent_dim; ++l) {
            z[static_cast<std::size_t>(l)] = g(rng);
            const auto& f = out.model.noise_basis[static_cast<std::size_t>(l)];
            for (std::size_t i = 0; i < d.size(); ++i) {
                d[i] += z[static_cast<std::size_t>(l)] * f[i];
            }
        }
        std::vector<Vec3> shape = tmpl.mesh.vertices;
        for (std::size_t i = 0; i < shape.size(); ++i) {
            shape[i] += d[i];
        }
        out.shapes.push_back(std::move(shape));
        out.records.push_back(std::move(r));
        out.noise_coefficients.push_back(std::move(z));
    }
    return out;
}

} // namespace synth
} // namespace facematch

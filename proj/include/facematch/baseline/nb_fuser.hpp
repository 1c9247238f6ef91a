#pragma once

#include "facematch/core/error.hpp"
#include "facematch/core/log.hpp"
#include "facematch/nn/checkpoint.hpp"
#include "facematch/nn/tensor.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace facematch {
namespace baseline {

/// Per-score Gaussian class-conditional densities for genuine and imposter
/// claims, combined as log posterior odds under independence.
struct NbFuser
{
    std::vector<double> genuine_mean;
    std::vector<double> genuine_var;
    std::vector<double> imposter_mean;
    std::vector<double> imposter_var;
    double log_prior_odds = 0.0;
    double variance_floor = 1e-6;

    std::size_t width() const noexcept { return genuine_mean.size(); }
};

inline double log_normal_pdf(double x, double mean, double var)
{
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

/// Maximum-likelihood means and variances per class; variances below the
/// floor are raised to it.
inline NbFuser nb_fuser_fit(const nn::Tensor2<double>& scores, const std::vector<int>& labels, double variance_floor = 1e-6)
{
    if (static_cast<Eigen::Index>(labels.size()) != scores.rows() || scores.cols() < 1) {
        throw ValidationError("nb_fuser_fit: scores and labels are not aligned");
    }
    if (!(variance_floor > 0.0)) {
        throw ValidationError("nb_fuser_fit: variance floor must be positive");
    }
    NbFuser f;
    f.variance_floor = variance_floor;
    const auto w = static_cast<std::size_t>(scores.cols());
    f.genuine_mean.assign(w, 0.0);
    f.genuine_var.assign(w, 0.0);
    f.imposter_mean.assign(w, 0.0);
    f.imposter_var.assign(w, 0.0);
    int ng = 0;
    int ni = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw ValidationError("nb_fuser_fit: labels must be 0 or 1");
        }
        auto& mean = labels[i] == 1 ? f.genuine_mean : f.imposter_mean;
        (labels[i] == 1 ? ng : ni) += 1;
        for (std::size_t c = 0; c < w; ++c) {
            mean[c] += scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
        }
    }
    if (ng == 0 || ni == 0) {
        throw ValidationError("nb_fuser_fit: need genuine and imposter samples");
    }
    for (std::size_t c = 0; c < w; ++c) {
        f.genuine_mean[c] /= ng;
        f.imposter_mean[c] /= ni;
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool g = labels[i] == 1;
        for (std::size_t c = 0; c < w; ++c) {
            const double d = scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) - (g ? f.genuine_mean[c] : f.imposter_mean[c]);
            (g ? f.genuine_var : f.imposter_var)[c] += d * d;
        }
    }
    int floored = 0;
    for (std::size_t c = 0; c < w; ++c) {
        f.genuine_var[c] /= ng;
        f.imposter_var[c] /= ni;
        for (double* v : {&f.genuine_var[c], &f.imposter_var[c]}) {
            if (*v < variance_floor) {
                *v = variance_floor;
                ++floored;
            }
        }
    }
    if (floored > 0) {
        log_info("nb_fuser_fit: " + std::to_string(floored) + " variances raised to the floor");
    }
    f.log_prior_odds = std::log(static_cast<double>(ng) / static_cast<double>(ni));
    return f;
}

inline double nb_fuse(const NbFuser& f, const Eigen::Ref<const Eigen::RowVectorXd>& s)
{
    if (static_cast<std::size_t>(s.size()) != f.width()) {
        throw ValidationError("nb_fuse: expected " + std::to_string(f.width()) + " scores, got " + std::to_string(s.size()));
    }
    double out = f.log_prior_odds;
    for (std::size_t c = 0; c < f.width(); ++c) {
        const double x = s[static_cast<Eigen::Index>(c)];
        out += log_normal_pdf(x, f.genuine_mean[c], f.genuine_var[c]) - log_normal_pdf(x, f.imposter_mean[c], f.imposter_var[c]);
    }
    return out;
}

inline nn::Json nb_fuser_to_json(const NbFuser& f)
{
    return nn::Json{{"genuine_mean", f.genuine_mean}, {"genuine_var", f.genuine_var},   {"imposter_mean", f.imposter_mean},
                    {"imposter_var", f.imposter_var}, {"log_prior_odds", f.log_prior_odds}, {"variance_floor", f.variance_floor}};
}

inline NbFuser nb_fuser_from_json(const nn::Json& j)
{
    NbFuser f;
    f.genuine_mean = j.at("genuine_mean").get<std::vector<double>>();
    f.genuine_var = j.at("genuine_var").get<std::vector<double>>();
    f.imposter_mean = j.at("imposter_mean").get<std::vector<double>>();
    f.imposter_var = j.at("imposter_var").get<std::vector<double>>();
    f.log_prior_odds = j.at("log_prior_odds").get<double>();
    f.variance_floor = j.at("variance_floor").get<double>();
    const auto w = f.width();
    if (f.genuine_var.size() != w || f.imposter_mean.size() != w || f.imposter_var.size() != w) {
        throw ValidationError("nb fuser: inconsistent widths");
    }
    return f;
}

} // namespace baseline
} // namespace facematch

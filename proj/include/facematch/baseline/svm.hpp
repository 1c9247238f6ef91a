#pragma once

#include "facematch/core/error.hpp"
#include "facematch/core/log.hpp"
#include "facematch/core/text_io.hpp"
#include "facematch/nn/checkpoint.hpp"
#include "facematch/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace facematch {
namespace baseline {

using nn::Tensor2;
using nn::Vector;

struct LinearClassifier
{
    Eigen::VectorXd w;
    double b = 0.0;
    std::string trait;
    /// Regularized objective at the returned solution.
    double objective = 0.0;

    double margin_scale() const { return w.norm(); }
    double decision(const Eigen::Ref<const Eigen::VectorXd>& x) const { return w.dot(x) + b; }
};

struct SolverConfig
{
    double c = 1.0;
    double eps_tube = 1.0;
    int epochs = 300;
    /// Relative objective improvement over the last tenth of the epochs above
    /// which a non-convergence warning is logged.
    double tolerance = 1e-2;
    std::uint64_t seed = 1;

    void validate() const
    {
        if (!(c > 0.0) || !(eps_tube >= 0.0) || epochs < 1 || !(tolerance > 0.0)) {
            throw ValidationError("svm solver: C, epochs and tolerance must be positive, eps_tube non-negative");
        }
    }
};

enum class LinearLoss { hinge, eps_insensitive };

/// 0.5 |w|^2 + C * sum of per-sample losses.
inline double linear_objective(const Tensor2<double>& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double b, LinearLoss loss,
                               double c, double eps)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double f = x.row(i).dot(w) + b;
        s += loss == LinearLoss::hinge ? std::max(0.0, 1.0 - y[i] * f) : std::max(0.0, std::abs(f - y[i]) - eps);
    }
    return 0.5 * w.squaredNorm() + c * s;
}

namespace detail {

/**
 * Projected stochastic subgradient on the objective divided by n*C, i.e.
 * lambda/2 |w|^2 + mean loss with lambda = 1 / (n C), step 1 / (lambda t) and
 * projection of w onto the ball of radius 1 / sqrt(lambda); b takes plain
 * steps of 1 / sqrt(t). Features (and
 * regression targets) are centered first, which leaves the optimum unchanged
 * because b is unregularized. Returns the best of the last iterate and the
 * running average, checked once per epoch.
 */
inline LinearClassifier subgradient_solve(const Tensor2<double>& x, const Eigen::VectorXd& y, LinearLoss loss, const SolverConfig& cfg)
{
    cfg.validate();
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    const Eigen::RowVectorXd xm = x.colwise().mean();
    const Tensor2<double> xc = x.rowwise() - xm;
    const double ym = loss == LinearLoss::eps_insensitive ? y.mean() : 0.0;
    const Eigen::VectorXd yc = y.array() - ym;
    const double lambda = 1.0 / (static_cast<double>(n) * cfg.c);
    const double radius = 1.0 / std::sqrt(lambda);

    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    double b = 0.0;
    Eigen::VectorXd w_avg = Eigen::VectorXd::Zero(d);
    double b_avg = 0.0;
    std::int64_t avg_count = 0;
    Eigen::VectorXd best_w = w;
    double best_b = b;
    double best = linear_objective(xc, yc, w, b, loss, cfg.c, cfg.eps_tube);
    std::vector<double> history;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(cfg.seed);
    std::int64_t t = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (Eigen::Index i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const double f = xc.row(i).dot(w) + b;
            double g = 0.0;
            if (loss == LinearLoss::hinge) {
                g = yc[i] * f < 1.0 ? -yc[i] : 0.0;
            } else {
                const double r = f - yc[i];
                g = r > cfg.eps_tube ? 1.0 : (r < -cfg.eps_tube ? -1.0 : 0.0);
            }
            w *= 1.0 - eta * lambda;
            if (g != 0.0) {
                w -= eta * g * xc.row(i).transpose();
                b -= g / std::sqrt(static_cast<double>(t));
            }
            const double norm = w.norm();
            if (norm > radius) {
                w *= radius / norm;
            }
            if (epoch >= cfg.epochs / 2) {
                ++avg_count;
                w_avg += (w - w_avg) / static_cast<double>(avg_count);
                b_avg += (b - b_avg) / static_cast<double>(avg_count);
            }
        }
        for (int which = 0; which < (avg_count > 0 ? 2 : 1); ++which) {
            const Eigen::VectorXd& cw = which == 0 ? w : w_avg;
            const double cb = which == 0 ? b : b_avg;
            const double obj = linear_objective(xc, yc, cw, cb, loss, cfg.c, cfg.eps_tube);
            if (obj < best) {
                best = obj;
                best_w = cw;
                best_b = cb;
            }
        }
        history.push_back(best);
    }
    const std::size_t window = std::max<std::size_t>(1, history.size() / 10);
    if (history.size() > window) {
        const double before = history[history.size() - 1 - window];
        const double gap = (before - best) / std::max(std::abs(best), 1e-12);
        if (gap > cfg.tolerance) {
            log_warning("linear solver did not converge: objective " + format_g9(best) + ", relative change over the last " +
                        std::to_string(window) + " epochs " + format_g9(gap));
        }
    }
    LinearClassifier m;
    m.w = best_w;
    m.b = best_b + ym - best_w.dot(xm.transpose());
    m.objective = best;
    return m;
}

} // namespace detail

/// Soft-margin linear SVM; labels are 0/1 (1 = positive class).
inline LinearClassifier svm_train(const Tensor2<double>& x, const std::vector<int>& labels, const SolverConfig& cfg = {})
{
    if (static_cast<Eigen::Index>(labels.size()) != x.rows() || x.rows() < 2) {
        throw ValidationError("svm_train: labels and samples are not aligned");
    }
    Eigen::VectorXd y(x.rows());
    int pos = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw ValidationError("svm_train: labels must be 0 or 1");
        }
        pos += labels[i];
        y[static_cast<Eigen::Index>(i)] = labels[i] == 1 ? 1.0 : -1.0;
    }
    if (pos == 0 || pos == static_cast<int>(labels.size())) {
        throw ValidationError("svm_train: both classes need at least one sample");
    }
    return detail::subgradient_solve(x, y, LinearLoss::hinge, cfg);
}

/// Epsilon-insensitive linear support vector regression.
inline LinearClassifier svr_train(const Tensor2<double>& x, const std::vector<double>& targets, const SolverConfig& cfg = {})
{
    if (static_cast<Eigen::Index>(targets.size()) != x.rows() || x.rows() < 2) {
        throw ValidationError("svr_train: targets and samples are not aligned");
    }
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));
    return detail::subgradient_solve(x, y, LinearLoss::eps_insensitive, cfg);
}

/// Signed distance to the decision boundary, positive toward the claimed class.
/// A zero weight vector carries no information and scores 0.
inline double classifier_score(const LinearClassifier& m, const Eigen::Ref<const Eigen::VectorXd>& x, int claimed_class)
{
    const double norm = m.margin_scale();
    if (!(norm > 0.0)) {
        return 0.0;
    }
    const double d = m.decision(x) / norm;
    return claimed_class == 1 ? d : -d;
}

/// T - |predicted - claimed|; positive when the claim is consistent.
inline double regression_score(const LinearClassifier& m, const Eigen::Ref<const Eigen::VectorXd>& x, double claimed, double t)
{
    return t - std::abs(m.decision(x) - claimed);
}

inline nn::Json classifier_to_json(const LinearClassifier& m)
{
    return nn::Json{{"trait", m.trait}, {"w", std::vector<double>(m.w.data(), m.w.data() + m.w.size())}, {"b", m.b}, {"objective", m.objective}};
}

inline LinearClassifier classifier_from_json(const nn::Json& j)
{
    LinearClassifier m;
    m.trait = j.at("trait").get<std::string>();
    const auto w = j.at("w").get<std::vector<double>>();
    m.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    m.b = j.at("b").get<double>();
    m.objective = j.at("objective").get<double>();
    return m;
}

} // namespace baseline
} // namespace facematch

#pragma once

#include "facematch/core/error.hpp"
#include "facematch/nn/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace facematch {
namespace nn {

struct TripletLossConfig
{
    /// Hinge margin on squared Euclidean distances.
    double margin = 0.2;
};

template <typename T>
struct TripletLossResult
{
    double loss = 0.0;
    /// Number of triplets with a positive hinge term.
    int active = 0;
    Tensor2<T> grad_anchor;
    Tensor2<T> grad_positive;
    Tensor2<T> grad_negative;
};

/**
 * Mean over rows of max(|a - p|^2 - |a - n|^2 + margin, 0).
 * Clamped triplets (hinge <= 0) contribute neither loss nor gradient.
 */
template <typename T>
TripletLossResult<T> triplet_loss(const Tensor2<T>& a, const Tensor2<T>& p, const Tensor2<T>& n,
                                  const TripletLossConfig& cfg = {})
{
    require_shape(a.rows() == p.rows() && a.rows() == n.rows() && a.cols() == p.cols() && a.cols() == n.cols(),
                  "triplet_loss", dims(a.rows(), a.cols()));
    if (!(cfg.margin > 0.0)) {
        throw ValidationError("triplet_loss: margin must be positive");
    }
    TripletLossResult<T> r;
    r.grad_anchor = Tensor2<T>::Zero(a.rows(), a.cols());
    r.grad_positive = Tensor2<T>::Zero(a.rows(), a.cols());
    r.grad_negative = Tensor2<T>::Zero(a.rows(), a.cols());
    const double batch = static_cast<double>(std::max<Eigen::Index>(a.rows(), 1));
    const T scale = static_cast<T>(2.0 / batch);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const double dp = static_cast<double>((a.row(i) - p.row(i)).squaredNorm());
        const double dn = static_cast<double>((a.row(i) - n.row(i)).squaredNorm());
        const double hinge = dp - dn + cfg.margin;
        if (hinge > 0.0) {
            r.loss += hinge;
            ++r.active;
            r.grad_anchor.row(i) = scale * (n.row(i) - p.row(i));
            r.grad_positive.row(i) = scale * (p.row(i) - a.row(i));
            r.grad_negative.row(i) = scale * (a.row(i) - n.row(i));
        }
    }
    r.loss /= batch;
    return r;
}

template <typename T>
struct BceResult
{
    double loss = 0.0;
    Vector<T> grad_logits;
};

/// Mean binary cross-entropy of sigmoid(logits) against 0/1 labels, in the
/// overflow-free form max(z, 0) - z*y + log(1 + exp(-|z|)).
template <typename T>
BceResult<T> bce_loss(const Vector<T>& logits, const Vector<T>& labels)
{
    require_shape(logits.size() == labels.size(), "bce_loss",
                  std::to_string(logits.size()) + " logits vs " + std::to_string(labels.size()) + " labels");
    BceResult<T> r;
    r.grad_logits.resize(logits.size());
    const double batch = static_cast<double>(std::max<Eigen::Index>(logits.size(), 1));
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        const double z = static_cast<double>(logits[i]);
        const double y = static_cast<double>(labels[i]);
        r.loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
        const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        r.grad_logits[i] = static_cast<T>((s - y) / batch);
    }
    r.loss /= batch;
    return r;
}

inline double sigmoid(double z)
{
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

} // namespace nn
} // namespace facematch

#pragma once

#include "facematch/core/error.hpp"
#include "facematch/mesh/triangle_mesh.hpp"
#include "facematch/nn/checkpoint.hpp"
#include "facematch/nn/tensor.hpp"

#include <Eigen/SVD>

#include <string>
#include <vector>

namespace facematch {
namespace baseline {

using nn::RowVector;
using nn::Tensor2;

struct PcaModel
{
    RowVector<double> mean;
    /// D x K, orthonormal columns ordered by decreasing variance.
    Eigen::MatrixXd components;
    /// Fraction of total variance captured by each component.
    Eigen::VectorXd explained_ratio;
    /// Sample variance along each component.
    Eigen::VectorXd variances;

    int dims() const noexcept { return static_cast<int>(components.cols()); }
};

/// One flattened row (x0 y0 z0 x1 ...) per shape.
inline Tensor2<double> flatten_shapes(const std::vector<std::vector<mesh::Vec3>>& shapes)
{
    if (shapes.empty()) {
        throw ValidationError("flatten_shapes: no shapes");
    }
    const auto n = shapes.front().size();
    Tensor2<double> x(static_cast<Eigen::Index>(shapes.size()), static_cast<Eigen::Index>(3 * n));
    for (std::size_t k = 0; k < shapes.size(); ++k) {
        if (shapes[k].size() != n) {
            throw ValidationError("flatten_shapes: shapes do not share a topology");
        }
        for (std::size_t i = 0; i < n; ++i) {
            x.block(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(3 * i), 1, 3) = shapes[k][i].transpose();
        }
    }
    return x;
}

/// Top-K principal axes of the rows of x via a thin SVD of the centered data.
/// Each axis is signed so that its largest-magnitude entry is positive.
inline PcaModel pca_fit(const Tensor2<double>& x, int k)
{
    if (x.rows() < 2) {
        throw ValidationError("pca_fit: need at least two samples");
    }
    if (k < 1 || k > x.rows() - 1 || k > x.cols()) {
        throw ValidationError("pca_fit: K = " + std::to_string(k) + " exceeds min(samples - 1, dimension) = " +
                              std::to_string(std::min<Eigen::Index>(x.rows() - 1, x.cols())));
    }
    PcaModel m;
    m.mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - m.mean;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();
    const double total = sv.squaredNorm();
    if (!(total > 0.0)) {
        throw ValidationError("pca_fit: data has zero variance");
    }
    m.components = svd.matrixV().leftCols(k);
    for (int c = 0; c < k; ++c) {
        Eigen::Index arg = 0;
        m.components.col(c).cwiseAbs().maxCoeff(&arg);
        if (m.components(arg, c) < 0.0) {
            m.components.col(c) *= -1.0;
        }
    }
    m.explained_ratio = sv.head(k).array().square() / total;
    m.variances = sv.head(k).array().square() / static_cast<double>(x.rows() - 1);
    return m;
}

inline Tensor2<double> pca_transform(const PcaModel& m, const Tensor2<double>& x)
{
    nn::require_shape(x.cols() == m.mean.size(), "pca_transform", "input " + nn::dims(x.rows(), x.cols()));
    return (x.rowwise() - m.mean) * m.components;
}

inline Tensor2<double> pca_reconstruct(const PcaModel& m, const Tensor2<double>& coords)
{
    Tensor2<double> out = coords * m.components.transpose();
    out.rowwise() += m.mean;
    return out;
}

inline nn::Json pca_to_json(const PcaModel& m)
{
    return nn::Json{{"mean", nn::tensor_to_json("mean", m.mean)},
                    {"components", nn::tensor_to_json("components", m.components)},
                    {"explained_ratio", std::vector<double>(m.explained_ratio.data(), m.explained_ratio.data() + m.explained_ratio.size())},
                    {"variances", std::vector<double>(m.variances.data(), m.variances.data() + m.variances.size())}};
}

inline PcaModel pca_from_json(const nn::Json& j)
{
    PcaModel m;
    m.mean = nn::tensor_from_json<double>(j.at("mean"), "mean");
    m.components = nn::tensor_from_json<double>(j.at("components"), "components");
    const auto r = j.at("explained_ratio").get<std::vector<double>>();
    const auto v = j.at("variances").get<std::vector<double>>();
    m.explained_ratio = Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
    m.variances = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    if (m.components.rows() != m.mean.size() || m.explained_ratio.size() != m.components.cols()) {
        throw ValidationError("pca model: inconsistent shapes");
    }
    return m;
}

} // namespace baseline
} // namespace facematch

#pragma once

#include "facematch/nn/dense.hpp"
#include "facematch/nn/init.hpp"
#include "facematch/nn/tensor.hpp"
#include "facematch/spiral/spiral_table.hpp"

#include <cstdint>
#include <random>

namespace facematch {
namespace spiral {

using nn::RowVector;
using nn::Tensor2;

/// Spiral filter weights: one Cin x Cout block per spiral position, stacked
/// so that kernel row s * Cin + cin holds position s, input channel cin.
template <typename T>
struct SpiralConvParams
{
    Tensor2<T> kernel;
    RowVector<T> bias;
    int length = 0;
    int in_channels = 0;

    int out_channels() const noexcept { return static_cast<int>(kernel.cols()); }
    T& weight(int s, int cin, int cout) { return kernel(s * in_channels + cin, cout); }
    const T& weight(int s, int cin, int cout) const { return kernel(s * in_channels + cin, cout); }
};

template <typename T>
SpiralConvParams<T> make_spiral_conv(int length, int in_channels, int out_channels, std::uint64_t seed)
{
    SpiralConvParams<T> p;
    p.length = length;
    p.in_channels = in_channels;
    p.kernel.resize(static_cast<Eigen::Index>(length) * in_channels, out_channels);
    p.bias = RowVector<T>::Zero(out_channels);
    std::mt19937_64 rng(seed);
    nn::glorot_uniform(p.kernel, static_cast<Eigen::Index>(length) * in_channels, out_channels, rng);
    return p;
}

namespace detail {

template <typename T>
Eigen::Index batch_count(const Tensor2<T>& features, const SpiralIndexTable& table, const char* op)
{
    nn::require_shape(table.num_vertices > 0 && features.rows() % table.num_vertices == 0, op,
                      "feature rows " + std::to_string(features.rows()) + " are not a multiple of " +
                          std::to_string(table.num_vertices) + " vertices");
    return features.rows() / table.num_vertices;
}

} // namespace detail

/// Stacks each vertex's spiral neighborhood into one row: (B*N) x (S*Cin).
/// Features hold B samples of N vertices each; pad entries stay zero.
template <typename T>
Tensor2<T> gather_spirals(const Tensor2<T>& features, const SpiralIndexTable& table)
{
    const Eigen::Index batch = detail::batch_count(features, table, "gather_spirals");
    const Eigen::Index n = table.num_vertices;
    const Eigen::Index c = features.cols();
    Tensor2<T> out = Tensor2<T>::Zero(features.rows(), table.length * c);
    for (Eigen::Index b = 0; b < batch; ++b) {
        for (int v = 0; v < table.num_vertices; ++v) {
            for (int s = 0; s < table.length; ++s) {
                const int j = table.at(v, s);
                if (j == table.pad_index) {
                    break;
                }
                out.block(b * n + v, s * c, 1, c) = features.row(b * n + j);
            }
        }
    }
    return out;
}

/// out_i = sum over spiral positions s of features[spiral_i[s]] * kernel_s, plus bias.
template <typename T>
Tensor2<T> spiral_conv_forward(const Tensor2<T>& features, const SpiralIndexTable& table, const SpiralConvParams<T>& p)
{
    nn::require_shape(p.length == table.length && p.in_channels == features.cols() && p.bias.size() == p.out_channels(),
                      "spiral_conv_forward",
                      "features " + nn::dims(features.rows(), features.cols()) + ", kernel " +
                          nn::dims(p.kernel.rows(), p.kernel.cols()) + ", spiral length " + std::to_string(table.length));
    Tensor2<T> out = gather_spirals(features, table) * p.kernel;
    out.rowwise() += p.bias;
    return out;
}

template <typename T>
struct SpiralConvGrads
{
    Tensor2<T> grad_features;
    Tensor2<T> grad_kernel;
    RowVector<T> grad_bias;
};

template <typename T>
SpiralConvGrads<T> spiral_conv_backward(const Tensor2<T>& grad_out,
                                        const Tensor2<T>& features,
                                        const SpiralIndexTable& table,
                                        const SpiralConvParams<T>& p)
{
    nn::require_shape(grad_out.rows() == features.rows() && grad_out.cols() == p.out_channels() &&
                          p.in_channels == features.cols() && p.length == table.length,
                      "spiral_conv_backward",
                      "grad " + nn::dims(grad_out.rows(), grad_out.cols()) + ", features " +
                          nn::dims(features.rows(), features.cols()));
    const Eigen::Index batch = detail::batch_count(features, table, "spiral_conv_backward");
    const Eigen::Index n = table.num_vertices;
    const Eigen::Index c = features.cols();
    SpiralConvGrads<T> g;
    g.grad_kernel = gather_spirals(features, table).transpose() * grad_out;
    g.grad_bias = grad_out.colwise().sum();
    const Tensor2<T> grad_gathered = grad_out * p.kernel.transpose();
    g.grad_features = Tensor2<T>::Zero(features.rows(), c);
    for (Eigen::Index b = 0; b < batch; ++b) {
        for (int v = 0; v < table.num_vertices; ++v) {
            for (int s = 0; s < table.length; ++s) {
                const int j = table.at(v, s);
                if (j == table.pad_index) {
                    break;
                }
                g.grad_features.row(b * n + j) += grad_gathered.block(b * n + v, s * c, 1, c);
            }
        }
    }
    return g;
}

} // namespace spiral
} // namespace facematch

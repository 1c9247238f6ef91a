#pragma once

#include "facematch/nn/init.hpp"
#include "facematch/nn/tensor.hpp"

#include <cstdint>
#include <random>

namespace facematch {
namespace nn {

/// Fully connected layer parameters: out = x * weights + bias, weights is Din x Dout.
template <typename T>
struct LayerParams
{
    Tensor2<T> weights;
    RowVector<T> bias;
    std::uint64_t init_seed = 0;

    Eigen::Index in_dim() const noexcept { return weights.rows(); }
    Eigen::Index out_dim() const noexcept { return weights.cols(); }
};

template <typename T>
LayerParams<T> make_dense(Eigen::Index in_dim, Eigen::Index out_dim, std::uint64_t seed)
{
    LayerParams<T> p;
    p.weights.resize(in_dim, out_dim);
    p.bias = RowVector<T>::Zero(out_dim);
    p.init_seed = seed;
    std::mt19937_64 rng(seed);
    glorot_uniform(p.weights, in_dim, out_dim, rng);
    return p;
}

template <typename T>
Tensor2<T> fc_forward(const Tensor2<T>& x, const LayerParams<T>& p)
{
    require_shape(x.cols() == p.in_dim() && p.bias.size() == p.out_dim(), "fc_forward",
                  "input " + dims(x.rows(), x.cols()) + ", weights " + dims(p.weights.rows(), p.weights.cols()));
    Tensor2<T> out = x * p.weights;
    out.rowwise() += p.bias;
    return out;
}

template <typename T>
struct FcGrads
{
    Tensor2<T> grad_x;
    Tensor2<T> grad_weights;
    RowVector<T> grad_bias;
};

template <typename T>
FcGrads<T> fc_backward(const Tensor2<T>& grad_out, const Tensor2<T>& x, const LayerParams<T>& p)
{
    require_shape(grad_out.rows() == x.rows() && grad_out.cols() == p.out_dim() && x.cols() == p.in_dim(),
                  "fc_backward", "grad " + dims(grad_out.rows(), grad_out.cols()) + ", input " + dims(x.rows(), x.cols()));
    FcGrads<T> g;
    g.grad_x = grad_out * p.weights.transpose();
    g.grad_weights = x.transpose() * grad_out;
    g.grad_bias = grad_out.colwise().sum();
    return g;
}

} // namespace nn
} // namespace facematch

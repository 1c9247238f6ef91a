#pragma once

#include "facematch/core/error.hpp"
#include "facematch/nn/tensor.hpp"

#include <cmath>
#include <string>

namespace facematch {
namespace nn {

enum class Activation { identity, relu, elu };

inline Activation parse_activation(const std::string& name)
{
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "elu") return Activation::elu;
    throw ValidationError("unknown activation '" + name + "'");
}

inline const char* to_string(Activation a)
{
    switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::elu: return "elu";
    }
    return "?";
}

template <typename T>
Tensor2<T> activation_forward(const Tensor2<T>& x, Activation a)
{
    switch (a) {
    case Activation::identity: return x;
    case Activation::relu: return x.cwiseMax(T(0));
    case Activation::elu:
        return x.unaryExpr([](T v) { return v > T(0) ? v : std::expm1(v); });
    }
    return x;
}

/// Gradient w.r.t. the pre-activation input, given the cached input x.
template <typename T>
Tensor2<T> activation_backward(const Tensor2<T>& grad_out, const Tensor2<T>& x, Activation a)
{
    require_shape(grad_out.rows() == x.rows() && grad_out.cols() == x.cols(), "activation_backward",
                  dims(grad_out.rows(), grad_out.cols()) + " vs " + dims(x.rows(), x.cols()));
    switch (a) {
    case Activation::identity: return grad_out;
    case Activation::relu:
        return grad_out.cwiseProduct(x.unaryExpr([](T v) { return v > T(0) ? T(1) : T(0); }));
    case Activation::elu:
        return grad_out.cwiseProduct(x.unaryExpr([](T v) { return v > T(0) ? T(1) : std::exp(v); }));
    }
    return grad_out;
}

} // namespace nn
} // namespace facematch

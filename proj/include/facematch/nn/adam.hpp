#pragma once

#include "facematch/core/error.hpp"
#include "facematch/nn/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace facematch {
namespace nn {

struct AdamConfig
{
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
using FlatArray = Eigen::Array<T, Eigen::Dynamic, 1>;

/// One bias-corrected Adam update of a flat parameter block; t is the
/// 1-based step count after this update.
template <typename T>
void adam_update(Eigen::Ref<FlatArray<T>> param, const Eigen::Ref<const FlatArray<T>>& grad,
                 Eigen::Ref<FlatArray<T>> m, Eigen::Ref<FlatArray<T>> v, const AdamConfig& cfg, std::int64_t t)
{
    const T b1 = static_cast<T>(cfg.beta1);
    const T b2 = static_cast<T>(cfg.beta2);
    m = b1 * m + (T(1) - b1) * grad;
    v = b2 * v + (T(1) - b2) * grad.square();
    const T c1 = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
    const T c2 = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
    param -= static_cast<T>(cfg.lr) * (m / c1) / ((v / c2).sqrt() + static_cast<T>(cfg.eps));
}

/// A named parameter block together with its gradient accumulator of the
/// same shape.
template <typename T>
struct ParamView
{
    std::string name;
    T* value = nullptr;
    T* grad = nullptr;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;

    ParamView(std::string n, Tensor2<T>* v, Tensor2<T>* g) : name(std::move(n)), value(v->data()), grad(g->data()), rows(v->rows()), cols(v->cols())
    {
        require_same(g->rows(), g->cols());
    }
    ParamView(std::string n, RowVector<T>* v, RowVector<T>* g) : name(std::move(n)), value(v->data()), grad(g->data()), rows(1), cols(v->size())
    {
        require_same(1, g->size());
    }

    Eigen::Index size() const noexcept { return rows * cols; }
    Eigen::Map<Tensor2<T>> value_map() const { return {value, rows, cols}; }
    Eigen::Map<Tensor2<T>> grad_map() const { return {grad, rows, cols}; }

private:
    void require_same(Eigen::Index r, Eigen::Index c) const
    {
        if (r != rows || c != cols) {
            throw ValidationError("parameter " + name + ": gradient shape " + dims(r, c) + " differs from value " + dims(rows, cols));
        }
    }
};

template <typename T>
struct AdamState
{
    std::vector<FlatArray<T>> first_moment;
    std::vector<FlatArray<T>> second_moment;
    std::int64_t step = 0;
};

/// Applies one Adam step to every view, lazily sizing the moment buffers.
template <typename T>
void adam_step(const std::vector<ParamView<T>>& params, AdamState<T>& state, const AdamConfig& cfg)
{
    if (state.first_moment.empty()) {
        for (const auto& p : params) {
            state.first_moment.push_back(FlatArray<T>::Zero(p.size()));
            state.second_moment.push_back(FlatArray<T>::Zero(p.size()));
        }
    }
    if (state.first_moment.size() != params.size()) {
        throw ValidationError("adam_step: optimizer state does not match the parameter list");
    }
    ++state.step;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        if (state.first_moment[i].size() != p.size()) {
            throw ValidationError("adam_step: shape mismatch for " + p.name);
        }
        Eigen::Map<FlatArray<T>> value(p.value, p.size());
        Eigen::Map<const FlatArray<T>> grad(p.grad, p.size());
        adam_update<T>(value, grad, state.first_moment[i], state.second_moment[i], cfg, state.step);
    }
}

} // namespace nn
} // namespace facematch

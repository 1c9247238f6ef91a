#pragma once

#include "facematch/nn/adam.hpp"
#include "facematch/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace facematch {
namespace nn {

struct GradCheckResult
{
    double max_relative_error = 0.0;
    std::string worst_variable;
    Eigen::Index worst_index = -1;
    int entries_checked = 0;
};

namespace detail {

template <typename LossFn>
void check_entries(const std::string& name, double* data, Eigen::Index size, const double* analytic, LossFn& loss,
                   double h, GradCheckResult& r)
{
    for (Eigen::Index i = 0; i < size; ++i) {
        const double saved = data[i];
        data[i] = saved + h;
        const double up = loss();
        data[i] = saved - h;
        const double down = loss();
        data[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double a = analytic[i];
        const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
        ++r.entries_checked;
        if (err > r.max_relative_error) {
            r.max_relative_error = err;
            r.worst_variable = name;
            r.worst_index = i;
        }
    }
}

} // namespace detail

/**
 * Compares analytic gradients against central differences.
 *
 * `variables` are the tensors to perturb (parameters and inputs alike);
 * `loss()` evaluates the scalar objective at their current values and
 * `gradients()` returns the analytic gradient of that objective for each
 * variable, in the same order. The error per entry is
 * |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
 */
template <typename LossFn, typename GradFn>
GradCheckResult grad_check(const std::vector<std::pair<std::string, Tensor2<double>*>>& variables, LossFn&& loss,
                           GradFn&& gradients, double h = 1e-6)
{
    const std::vector<Tensor2<double>> analytic = gradients();
    GradCheckResult r;
    for (std::size_t k = 0; k < variables.size(); ++k) {
        detail::check_entries(variables[k].first, variables[k].second->data(), variables[k].second->size(),
                              analytic[k].data(), loss, h, r);
    }
    return r;
}

/// Same check over optimizer views; `gradients()` must fill every view's grad buffer.
template <typename LossFn, typename GradFn>
GradCheckResult grad_check(const std::vector<ParamView<double>>& views, LossFn&& loss, GradFn&& gradients, double h = 1e-6)
{
    gradients();
    std::vector<Tensor2<double>> analytic;
    for (const auto& v : views) {
        analytic.emplace_back(v.grad_map());
    }
    GradCheckResult r;
    for (std::size_t k = 0; k < views.size(); ++k) {
        detail::check_entries(views[k].name, views[k].value, views[k].size(), analytic[k].data(), loss, h, r);
    }
    return r;
}

} // namespace nn
} // namespace facematch

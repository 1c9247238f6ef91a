#pragma once

#include "facematch/core/error.hpp"

#include <Eigen/Core>

#include <string>

namespace facematch {
namespace nn {

/// Dense row-major matrix; rows are samples (or vertices), columns features.
template <typename T>
using Tensor2 = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m)
{
    return m.allFinite();
}

inline void require_shape(bool ok, const char* op, const std::string& detail)
{
    if (!ok) {
        throw ValidationError(std::string(op) + ": shape mismatch (" + detail + ")");
    }
}

inline std::string dims(Eigen::Index r, Eigen::Index c)
{
    return std::to_string(r) + "x" + std::to_string(c);
}

} // namespace nn
} // namespace facematch

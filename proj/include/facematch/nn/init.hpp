#pragma once

#include "facematch/nn/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace facematch {
namespace nn {

/// Independent child seed for stream `k` of a base seed (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k) noexcept
{
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (k + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Glorot-uniform fill: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <typename T>
void glorot_uniform(Tensor2<T>& w, Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& rng)
{
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        w.data()[i] = static_cast<T>(dist(rng));
    }
}

} // namespace nn
} // namespace facematch

#pragma once

#include "facematch/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace facematch {
namespace eval {

/// Indices into the dataset's subject list.
struct Fold
{
    std::vector<int> test;
    std::vector<int> train1;
    std::vector<int> train2;
};

struct FoldPlan
{
    std::uint64_t seed = 0;
    std::vector<Fold> folds;
};

inline constexpr int min_fold_subjects = 30;

/**
 * One seeded shuffle of all subjects; fold f tests on the f-th contiguous
 * slice and splits the remaining subjects (in shuffled order) 60/40 into the
 * embedding-training and fusion-training partitions.
 */
inline FoldPlan make_fold_plan(int n, std::uint64_t seed, int folds = 10, double train1_fraction = 0.6)
{
    if (n < min_fold_subjects) {
        throw ValidationError("make_fold_plan: need at least " + std::to_string(min_fold_subjects) + " subjects, got " + std::to_string(n));
    }
    if (folds < 2 || folds > n || !(train1_fraction > 0.0 && train1_fraction < 1.0)) {
        throw ValidationError("make_fold_plan: invalid fold count or split fraction");
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    FoldPlan plan;
    plan.seed = seed;
    for (int f = 0; f < folds; ++f) {
        const auto lo = static_cast<std::size_t>(static_cast<long long>(f) * n / folds);
        const auto hi = static_cast<std::size_t>(static_cast<long long>(f + 1) * n / folds);
        Fold fold;
        std::vector<int> rest;
        for (std::size_t k = 0; k < order.size(); ++k) {
            (k >= lo && k < hi ? fold.test : rest).push_back(order[k]);
        }
        const auto cut = static_cast<std::size_t>(std::lround(train1_fraction * static_cast<double>(rest.size())));
        fold.train1.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(cut));
        fold.train2.assign(rest.begin() + static_cast<std::ptrdiff_t>(cut), rest.end());
        for (auto* v : {&fold.test, &fold.train1, &fold.train2}) {
            std::sort(v->begin(), v->end());
        }
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

} // namespace eval
} // namespace facematch

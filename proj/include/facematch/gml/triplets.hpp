#pragma once

#include "facematch/core/error.hpp"
#include "facematch/gml/property_record.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace facematch {
namespace gml {

/// Label distances below which continuous traits count as the same class.
struct Thresholds
{
    double age = 10.0;
    double bmi = 2.0;

    void validate() const
    {
        if (!(age > 0.0) || !(bmi > 0.0)) {
            throw ValidationError("thresholds must be positive");
        }
    }
};

/// Positions into the record list the triplet was mined from.
struct TripletSpec
{
    int anchor = 0;
    int positive = 0;
    int negative = 0;
    Property property = Property::sex;
    /// gb component the rule was evaluated on; -1 for other properties.
    int component = -1;

    friend bool operator==(const TripletSpec&, const TripletSpec&) = default;
};

/// True when x shares the anchor's class for the property (within T for age
/// and BMI, same gb sign on `component` for gb).
inline bool same_class(const PropertyRecord& anchor, const PropertyRecord& x, Property p, int component, const Thresholds& t)
{
    switch (p) {
    case Property::sex: return anchor.sex == x.sex;
    case Property::age: return std::abs(anchor.age - x.age) <= t.age;
    case Property::bmi: return std::abs(anchor.bmi - x.bmi) <= t.bmi;
    case Property::gb: return anchor.gb_sign(component) == x.gb_sign(component);
    }
    return false;
}

struct MiningResult
{
    std::vector<TripletSpec> triplets;
    /// Anchor draws rejected because their positive or negative set was empty.
    int skipped_anchors = 0;
};

/**
 * Random mining: anchors uniform over `records`, positive uniform over the
 * anchor's same-class set (excluding the anchor), negative uniform over its
 * complement. Gives up after 4 * count + 64 rejected anchors.
 */
inline MiningResult mine_triplets(const std::vector<PropertyRecord>& records,
                                  Property property,
                                  const Thresholds& thresholds,
                                  int count,
                                  std::uint64_t seed,
                                  int component = -1)
{
    if (count < 1) {
        throw ValidationError("mine_triplets: count must be at least 1");
    }
    thresholds.validate();
    if (property == Property::gb && (component < 0 || component >= gb_dims)) {
        throw ValidationError("mine_triplets: gb mining needs a component in [0, 25)");
    }
    if (property != Property::gb) {
        component = -1;
    }
    MiningResult r;
    if (records.size() < 3) {
        r.skipped_anchors = count;
        return r;
    }
    const int n = static_cast<int>(records.size());
    std::vector<std::vector<int>> pos(static_cast<std::size_t>(n));
    std::vector<std::vector<int>> neg(static_cast<std::size_t>(n));
    std::vector<bool> built(static_cast<std::size_t>(n), false);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick_anchor(0, n - 1);
    const int max_rejects = 4 * count + 64;
    while (static_cast<int>(r.triplets.size()) < count && r.skipped_anchors < max_rejects) {
        const int a = pick_anchor(rng);
        const auto ua = static_cast<std::size_t>(a);
        if (!built[ua]) {
            for (int x = 0; x < n; ++x) {
                if (x == a) {
                    continue;
                }
                (same_class(records[ua], records[static_cast<std::size_t>(x)], property, component, thresholds) ? pos[ua] : neg[ua])
                    .push_back(x);
            }
            built[ua] = true;
        }
        if (pos[ua].empty() || neg[ua].empty()) {
            ++r.skipped_anchors;
            continue;
        }
        std::uniform_int_distribution<std::size_t> pp(0, pos[ua].size() - 1);
        std::uniform_int_distribution<std::size_t> pn(0, neg[ua].size() - 1);
        TripletSpec t;
        t.anchor = a;
        t.positive = pos[ua][pp(rng)];
        t.negative = neg[ua][pn(rng)];
        t.property = property;
        t.component = component;
        r.triplets.push_back(t);
    }
    return r;
}

/// Sampling weights proportional to 1 / max(accuracy, epsilon) over the
/// active components; inactive components get weight zero.
struct GbComponentWeights
{
    std::array<double, gb_dims> accuracies{};
    std::array<bool, gb_dims> active{};
    double epsilon = 0.05;

    static GbComponentWeights uniform(double epsilon = 0.05)
    {
        GbComponentWeights w;
        w.accuracies.fill(1.0);
        w.active.fill(true);
        w.epsilon = epsilon;
        return w;
    }

    static GbComponentWeights from_accuracies(const std::array<double, gb_dims>& acc, double epsilon = 0.05)
    {
        GbComponentWeights w = uniform(epsilon);
        w.accuracies = acc;
        return w;
    }

    std::array<double, gb_dims> weights() const
    {
        if (!(epsilon > 0.0)) {
            throw ValidationError("gb weights: epsilon must be positive");
        }
        std::array<double, gb_dims> w{};
        double total = 0.0;
        for (int c = 0; c < gb_dims; ++c) {
            const auto uc = static_cast<std::size_t>(c);
            if (active[uc]) {
                w[uc] = 1.0 / std::max(accuracies[uc], epsilon);
                total += w[uc];
            }
        }
        if (!(total > 0.0)) {
            throw ValidationError("gb weights: no active component");
        }
        for (auto& x : w) {
            x /= total;
        }
        return w;
    }
};

template <typename Rng>
int select_gb_component(const GbComponentWeights& weights, Rng& rng)
{
    const auto w = weights.weights();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double draw = u(rng);
    double acc = 0.0;
    int last = -1;
    for (int c = 0; c < gb_dims; ++c) {
        const double wc = w[static_cast<std::size_t>(c)];
        if (wc <= 0.0) {
            continue;
        }
        acc += wc;
        last = c;
        if (draw < acc) {
            return c;
        }
    }
    return last;
}

} // namespace gml
} // namespace facematch

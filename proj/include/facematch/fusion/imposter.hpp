#pragma once

#include "facematch/core/error.hpp"
#include "facematch/gml/property_record.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace facematch {
namespace fusion {

using gml::PropertyRecord;

/// Subset of traits active in one experiment run.
struct TraitSet
{
    bool sex = false;
    bool age = false;
    bool bmi = false;
    bool gb = false;

    static TraitSet all() { return {true, true, true, true}; }

    bool empty() const noexcept { return !(sex || age || bmi || gb); }
    bool contains(const TraitSet& o) const noexcept
    {
        return (sex || !o.sex) && (age || !o.age) && (bmi || !o.bmi) && (gb || !o.gb);
    }

    /// "sex", "sex+age", ..., or "all" when every trait is active.
    std::string name() const
    {
        if (sex && age && bmi && gb) {
            return "all";
        }
        std::string s;
        auto add = [&s](bool on, const char* n) {
            if (on) {
                s += s.empty() ? "" : "+";
                s += n;
            }
        };
        add(sex, "sex");
        add(age, "age");
        add(bmi, "bmi");
        add(gb, "gb");
        return s;
    }

    friend bool operator==(const TraitSet&, const TraitSet&) = default;
};

/// Parses "all" or a list of sex/age/bmi/gb joined by ',' or '+'.
inline TraitSet parse_traits(const std::string& text)
{
    if (text == "all") {
        return TraitSet::all();
    }
    TraitSet t;
    std::string token;
    auto flush = [&]() {
        if (token == "sex") t.sex = true;
        else if (token == "age") t.age = true;
        else if (token == "bmi") t.bmi = true;
        else if (token == "gb") t.gb = true;
        else throw ValidationError("unknown trait '" + token + "' (expected sex, age, bmi, gb or all)");
        token.clear();
    };
    for (char c : text) {
        if (c == ',' || c == '+') {
            flush();
        } else {
            token += c;
        }
    }
    flush();
    return t;
}

/// The seven trait sets of the experiment matrix, in report order.
inline std::vector<TraitSet> experiment_trait_sets()
{
    return {{true, false, false, false}, {false, true, false, false}, {false, false, true, false}, {false, false, false, true},
            {true, true, false, false},  {true, true, true, false},   TraitSet::all()};
}

struct ImposterSetConfig
{
    double t_age = 10.0;
    double t_bmi = 2.0;
    /// Leading gb components whose sign flip makes an imposter.
    int gb_components = 4;

    void validate() const
    {
        if (!(t_age > 0.0) || !(t_bmi > 0.0)) {
            throw ValidationError("imposter thresholds must be positive");
        }
        if (gb_components < 1 || gb_components > gml::gb_dims) {
            throw ValidationError("imposter gb_components must lie in [1, 25]");
        }
    }
};

/// Membership of x in the union of per-trait imposter sets of k.
inline bool is_imposter(const PropertyRecord& k, const PropertyRecord& x, const ImposterSetConfig& cfg, const TraitSet& traits)
{
    if (traits.sex && x.sex != k.sex) {
        return true;
    }
    if (traits.age && std::abs(x.age - k.age) > cfg.t_age) {
        return true;
    }
    if (traits.bmi && std::abs(x.bmi - k.bmi) > cfg.t_bmi) {
        return true;
    }
    if (traits.gb) {
        for (int c = 0; c < cfg.gb_components; ++c) {
            if (x.gb_sign(c) != k.gb_sign(c)) {
                return true;
            }
        }
    }
    return false;
}

/// Positions of the candidates that are imposters for k; candidates sharing
/// k's id are skipped.
inline std::vector<int> imposter_set(const PropertyRecord& k,
                                     const std::vector<PropertyRecord>& candidates,
                                     const ImposterSetConfig& cfg,
                                     const TraitSet& traits)
{
    cfg.validate();
    std::vector<int> out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].id != k.id && is_imposter(k, candidates[i], cfg, traits)) {
            out.push_back(static_cast<int>(i));
        }
    }
    return out;
}

} // namespace fusion
} // namespace facematch

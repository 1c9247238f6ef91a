#pragma once

#include "facematch/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace facematch {
namespace eval {

/// Operating points ordered by decreasing threshold. Point 0 is the empty
/// acceptance set (threshold +inf, FPR = TPR = 0); a pair is accepted when
/// its score is >= the threshold.
struct RocSummary
{
    std::vector<double> thresholds;
    std::vector<double> tpr;
    std::vector<double> fpr;
    /// Pairwise (Mann-Whitney) AUC with ties counted one half.
    double auc = 0.0;
    /// Trapezoid area under the operating points.
    double auc_trapezoid = 0.0;
    /// FPR at the interpolated point where FPR = 1 - TPR.
    double eer = 0.0;
    /// TPR at the same point.
    double eer_tpr = 1.0;
    /// Threshold interpolated between the two bracketing operating points.
    double eer_threshold = 0.0;
    std::size_t genuine_count = 0;
    std::size_t imposter_count = 0;
};

/// Mann-Whitney U / (G * I) via midranks of the pooled sample.
inline double mann_whitney_auc(const std::vector<double>& genuine, const std::vector<double>& imposter)
{
    if (genuine.empty() || imposter.empty()) {
        throw ValidationError("mann_whitney_auc: both score lists must be non-empty");
    }
    struct Item
    {
        double s;
        bool g;
    };
    std::vector<Item> all;
    all.reserve(genuine.size() + imposter.size());
    for (double s : genuine) all.push_back({s, true});
    for (double s : imposter) all.push_back({s, false});
    std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.s < b.s; });
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].s == all[i].s) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (all[k].g) rank_sum += midrank;
        }
        i = j;
    }
    const double g = static_cast<double>(genuine.size());
    const double u = rank_sum - g * (g + 1.0) / 2.0;
    return u / (g * static_cast<double>(imposter.size()));
}

inline RocSummary roc(const std::vector<double>& genuine, const std::vector<double>& imposter)
{
    if (genuine.empty() || imposter.empty()) {
        throw ValidationError("roc: genuine and imposter score lists must be non-empty");
    }
    for (const auto* v : {&genuine, &imposter}) {
        for (double s : *v) {
            if (!std::isfinite(s)) {
                throw ValidationError("roc: scores must be finite");
            }
        }
    }
    std::vector<double> g = genuine;
    std::vector<double> im = imposter;
    std::sort(g.begin(), g.end(), std::greater<>());
    std::sort(im.begin(), im.end(), std::greater<>());
    std::vector<double> thresholds(g);
    thresholds.insert(thresholds.end(), im.begin(), im.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    RocSummary r;
    r.genuine_count = g.size();
    r.imposter_count = im.size();
    const double ng = static_cast<double>(g.size());
    const double ni = static_cast<double>(im.size());
    r.thresholds.push_back(std::numeric_limits<double>::infinity());
    r.tpr.push_back(0.0);
    r.fpr.push_back(0.0);
    std::size_t gi = 0;
    std::size_t ii = 0;
    for (double t : thresholds) {
        while (gi < g.size() && g[gi] >= t) ++gi;
        while (ii < im.size() && im[ii] >= t) ++ii;
        r.thresholds.push_back(t);
        r.tpr.push_back(static_cast<double>(gi) / ng);
        r.fpr.push_back(static_cast<double>(ii) / ni);
    }
    for (std::size_t k = 1; k < r.tpr.size(); ++k) {
        r.auc_trapezoid += 0.5 * (r.fpr[k] - r.fpr[k - 1]) * (r.tpr[k] + r.tpr[k - 1]);
    }
    r.auc = mann_whitney_auc(genuine, imposter);

    // d = FPR - (1 - TPR) rises from -1 to +1 along the curve.
    for (std::size_t k = 1; k < r.tpr.size(); ++k) {
        const double d0 = r.fpr[k - 1] - (1.0 - r.tpr[k - 1]);
        const double d1 = r.fpr[k] - (1.0 - r.tpr[k]);
        if (d1 >= 0.0) {
            const double a = d1 == d0 ? 0.0 : -d0 / (d1 - d0);
            r.eer = r.fpr[k - 1] + a * (r.fpr[k] - r.fpr[k - 1]);
            r.eer_tpr = r.tpr[k - 1] + a * (r.tpr[k] - r.tpr[k - 1]);
            const double t0 = std::isinf(r.thresholds[k - 1]) ? r.thresholds[k] : r.thresholds[k - 1];
            r.eer_threshold = t0 + a * (r.thresholds[k] - t0);
            break;
        }
    }
    return r;
}

} // namespace eval
} // namespace facematch

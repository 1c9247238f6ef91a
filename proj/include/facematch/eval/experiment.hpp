#pragma once

#include "facematch/baseline/pipeline.hpp"
#include "facematch/core/error.hpp"
#include "facematch/core/log.hpp"
#include "facematch/eval/folds.hpp"
#include "facematch/eval/roc.hpp"
#include "facematch/fusion/fusion_net.hpp"
#include "facematch/fusion/imposter.hpp"
#include "facematch/gml/encode.hpp"
#include "facematch/gml/train.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace facematch {
namespace eval {

using fusion::ClaimPair;
using fusion::TraitSet;
using gml::PropertyRecord;
using nn::Tensor2;
using nn::Vector;

enum class Architecture { pca_nb, pca_fusion, gml_nb, gml_fusion };

inline const std::array<Architecture, 4>& all_architectures()
{
    static const std::array<Architecture, 4> a{Architecture::pca_nb, Architecture::pca_fusion, Architecture::gml_nb, Architecture::gml_fusion};
    return a;
}

/// File-name form, e.g. gml_fusion.
inline std::string to_string(Architecture a)
{
    switch (a) {
    case Architecture::pca_nb: return "pca_nb";
    case Architecture::pca_fusion: return "pca_fusion";
    case Architecture::gml_nb: return "gml_nb";
    case Architecture::gml_fusion: return "gml_fusion";
    }
    return "?";
}

/// Table form, e.g. GML+Fusion.
inline std::string display_name(Architecture a)
{
    switch (a) {
    case Architecture::pca_nb: return "PCA+NB";
    case Architecture::pca_fusion: return "PCA+Fusion";
    case Architecture::gml_nb: return "GML+NB";
    case Architecture::gml_fusion: return "GML+Fusion";
    }
    return "?";
}

inline Architecture parse_architecture(const std::string& s)
{
    for (auto a : all_architectures()) {
        if (s == to_string(a) || s == display_name(a)) {
            return a;
        }
    }
    throw ValidationError("unknown architecture '" + s + "' (expected pca_nb, pca_fusion, gml_nb or gml_fusion)");
}

inline bool uses_gml(Architecture a) { return a == Architecture::gml_nb || a == Architecture::gml_fusion; }
inline bool uses_fusion_net(Architecture a) { return a == Architecture::pca_fusion || a == Architecture::gml_fusion; }

// Test-time claims.

struct TestClaims
{
    std::vector<ClaimPair> pairs;
    int empty_imposter_sets = 0;
};

/**
 * For each test subject: its own claim (genuine) and up to k imposter claims
 * drawn without replacement from the imposter set over all records.
 */
inline TestClaims make_test_claims(const std::vector<int>& test,
                                   const std::vector<PropertyRecord>& records,
                                   const TraitSet& traits,
                                   const fusion::ImposterSetConfig& cfg,
                                   int k,
                                   std::uint64_t seed)
{
    if (k < 1) {
        throw ValidationError("make_test_claims: imposters per subject must be positive");
    }
    TestClaims out;
    std::mt19937_64 rng(seed);
    for (int s : test) {
        out.pairs.push_back({s, s, 1});
        auto imp = fusion::imposter_set(records.at(static_cast<std::size_t>(s)), records, cfg, traits);
        if (imp.empty()) {
            ++out.empty_imposter_sets;
            continue;
        }
        const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), imp.size());
        for (std::size_t j = 0; j < take; ++j) {
            std::uniform_int_distribution<std::size_t> pick(j, imp.size() - 1);
            std::swap(imp[j], imp[pick(rng)]);
            out.pairs.push_back({s, imp[j], 0});
        }
    }
    return out;
}

using PairScorer = std::function<Vector<double>(const std::vector<ClaimPair>&)>;

struct EvaluationResult
{
    RocSummary roc;
    std::vector<double> genuine;
    std::vector<double> imposter;
    int empty_imposter_sets = 0;
};

inline EvaluationResult evaluate_pipeline(const std::vector<int>& test,
                                          const std::vector<PropertyRecord>& records,
                                          const TraitSet& traits,
                                          const fusion::ImposterSetConfig& cfg,
                                          int k,
                                          std::uint64_t seed,
                                          const PairScorer& scorer)
{
    const auto claims = make_test_claims(test, records, traits, cfg, k, seed);
    const Vector<double> s = scorer(claims.pairs);
    if (s.size() != static_cast<Eigen::Index>(claims.pairs.size())) {
        throw ValidationError("evaluate_pipeline: scorer returned the wrong number of scores");
    }
    EvaluationResult r;
    r.empty_imposter_sets = claims.empty_imposter_sets;
    for (std::size_t i = 0; i < claims.pairs.size(); ++i) {
        (claims.pairs[i].label == 1 ? r.genuine : r.imposter).push_back(s[static_cast<Eigen::Index>(i)]);
    }
    if (r.empty_imposter_sets > 0) {
        log_info("evaluate_pipeline: " + std::to_string(r.empty_imposter_sets) + " test subjects without imposters");
    }
    r.roc = roc(r.genuine, r.imposter);
    return r;
}

// Experiment matrix.

struct ExperimentConfig
{
    int folds = 10;
    int imposters_per_subject = 10;
    std::uint64_t seed = 1;
    gml::GmlConfig gml;
    fusion::FusionConfig fusion;
    baseline::BaselineConfig baseline;
    fusion::ImposterSetConfig imposters;
    std::vector<Architecture> architectures{all_architectures().begin(), all_architectures().end()};
    std::vector<TraitSet> trait_sets = fusion::experiment_trait_sets();
    int jobs = 1;

    void validate() const
    {
        if (folds < 2 || imposters_per_subject < 1 || jobs < 1) {
            throw ValidationError("experiment: folds >= 2, imposters and jobs must be positive");
        }
        if (architectures.empty() || trait_sets.empty()) {
            throw ValidationError("experiment: no architectures or trait sets selected");
        }
        gml.validate();
        fusion.validate();
        baseline.validate();
        imposters.validate();
    }
};

/// Resampled shapes and their property records, aligned by index.
struct ExperimentInput
{
    const std::vector<std::vector<mesh::Vec3>>* shapes = nullptr;
    const std::vector<PropertyRecord>* records = nullptr;
    const spiral::EncoderTopology* topo = nullptr;
};

struct FoldResult
{
    /// Indexed [architecture][trait set] in config order.
    std::vector<std::vector<EvaluationResult>> runs;
    /// Final held-out triplet satisfaction per property (GML runs only).
    std::vector<double> gml_heldout;
};

struct ReportRow
{
    Architecture architecture = Architecture::pca_nb;
    TraitSet traits;
    std::vector<double> fold_auc;
    std::vector<double> fold_eer;
    double auc_mean = 0.0;
    double auc_std = 0.0;
    double eer_mean = 0.0;
    double eer_std = 0.0;
    /// Scores pooled over folds.
    RocSummary pooled;
    std::vector<RocSummary> fold_roc;
    int empty_imposter_sets = 0;
};

struct ExperimentReport
{
    std::vector<ReportRow> rows;
    std::vector<std::vector<double>> gml_heldout;
    FoldPlan plan;

    const ReportRow& row(Architecture a, const TraitSet& t) const
    {
        for (const auto& r : rows) {
            if (r.architecture == a && r.traits == t) {
                return r;
            }
        }
        throw ValidationError("report has no row " + display_name(a) + " / " + t.name());
    }
};

inline std::pair<double, double> mean_and_sample_std(const std::vector<double>& v)
{
    if (v.empty()) {
        return {0.0, 0.0};
    }
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

/// Elements of `v` at the positions in `idx`.
template <typename T>
std::vector<T> select(const std::vector<T>& v, const std::vector<int>& idx)
{
    return baseline::take(v, idx);
}

inline FoldResult run_fold(const ExperimentInput& in, const ExperimentConfig& cfg, const Fold& fold, int f)
{
    const auto& shapes = *in.shapes;
    const auto& records = *in.records;
    const auto fold_seed = nn::derive_seed(cfg.seed, 10000 + static_cast<std::uint64_t>(f));
    const std::string tag = "fold " + std::to_string(f + 1) + "/" + std::to_string(cfg.folds);
    bool need_pca = false;
    bool need_gml = false;
    for (auto a : cfg.architectures) {
        (uses_gml(a) ? need_gml : need_pca) = true;
    }
    FoldResult out;
    const auto train1_records = select(records, fold.train1);
    const auto train2_records = select(records, fold.train2);

    std::optional<Tensor2<double>> pca_features;
    if (need_pca) {
        const Tensor2<double> flat = baseline::flatten_shapes(shapes);
        const auto pca = baseline::pca_fit(baseline::take_rows(flat, fold.train1), cfg.baseline.pca_dims);
        pca_features = baseline::pca_transform(pca, flat);
        log_info(tag + ": pca explained variance " + format_g9(pca.explained_ratio.sum()));
    }
    std::optional<Tensor2<double>> gml_features;
    if (need_gml) {
        const auto train_shapes = select(shapes, fold.train1);
        std::vector<gml::GmlModel> models;
        for (auto p : gml::all_properties()) {
            gml::GmlConfig g = cfg.gml;
            g.property = p;
            g.seed = nn::derive_seed(fold_seed, 20 + static_cast<std::uint64_t>(p));
            auto trained = gml::train_gml(train_shapes, train1_records, *in.topo, g);
            const double h = trained.epochs.empty() ? 0.0 : trained.epochs.back().heldout_satisfaction;
            out.gml_heldout.push_back(h);
            log_info(tag + ": gml " + gml::to_string(p) + " held-out satisfaction " + format_g9(h));
            models.push_back(std::move(trained.model));
        }
        gml_features = gml::encode_dataset({&models[0], &models[1], &models[2], &models[3]}, *in.topo, shapes);
    }

    std::optional<baseline::TraitClassifiers> pca_classifiers;
    std::optional<baseline::TraitClassifiers> gml_classifiers;
    std::vector<int> clf_idx;
    std::vector<int> fuser_idx;
    {
        const auto [a, b] = baseline::split_partition(static_cast<int>(fold.train2.size()), cfg.baseline.classifier_fraction,
                                                      nn::derive_seed(fold_seed, 2000));
        clf_idx = select(fold.train2, a);
        fuser_idx = select(fold.train2, b);
    }
    baseline::BaselineConfig bcfg = cfg.baseline;
    bcfg.imposters = cfg.imposters;
    bcfg.seed = nn::derive_seed(fold_seed, 30);
    fusion::FusionConfig fcfg = cfg.fusion;
    fcfg.imposters = cfg.imposters;

    out.runs.resize(cfg.architectures.size());
    for (std::size_t ai = 0; ai < cfg.architectures.size(); ++ai) {
        const auto arch = cfg.architectures[ai];
        const Tensor2<double>& features = uses_gml(arch) ? *gml_features : *pca_features;
        auto& classifiers = uses_gml(arch) ? gml_classifiers : pca_classifiers;
        if (!uses_fusion_net(arch) && !classifiers) {
            classifiers = baseline::train_trait_classifiers(baseline::take_rows(features, clf_idx), select(records, clf_idx), bcfg);
        }
        for (std::size_t ti = 0; ti < cfg.trait_sets.size(); ++ti) {
            const auto& traits = cfg.trait_sets[ti];
            const auto run_seed = nn::derive_seed(fold_seed, 100 + 10 * static_cast<std::uint64_t>(ti));
            PairScorer scorer;
            if (uses_fusion_net(arch)) {
                fusion::FusionConfig c = fcfg;
                c.seed = nn::derive_seed(run_seed, static_cast<std::uint64_t>(arch));
                auto trained = fusion::train_fusion(baseline::take_rows(features, fold.train2), train2_records, traits, c);
                scorer = [model = std::move(trained.model), &features, &records](const std::vector<ClaimPair>& pairs) {
                    return fusion::match_scores(model, features, records, pairs);
                };
            } else {
                baseline::BaselineModel m;
                m.config = bcfg;
                m.traits = traits;
                m.classifiers = *classifiers;
                m.fuser = baseline::fit_baseline_fuser(m.classifiers, baseline::take_rows(features, fuser_idx), select(records, fuser_idx), traits, bcfg);
                scorer = [model = std::move(m), &features, &records](const std::vector<ClaimPair>& pairs) {
                    return baseline::baseline_scores(model, features, records, pairs);
                };
            }
            out.runs[ai].push_back(
                evaluate_pipeline(fold.test, records, traits, cfg.imposters, cfg.imposters_per_subject, nn::derive_seed(run_seed, 7), scorer));
        }
    }
    log_info(tag + ": done");
    return out;
}

namespace detail {

[[noreturn]] inline void rethrow_with_context(std::exception_ptr e, const std::string& context)
{
    try {
        std::rethrow_exception(e);
    } catch (const ParseError&) {
        throw;
    } catch (const ValidationError& x) {
        throw ValidationError(context + ": " + x.what());
    } catch (const NumericalError& x) {
        throw NumericalError(context + ": " + x.what());
    } catch (const std::exception& x) {
        throw std::runtime_error(context + ": " + x.what());
    }
}

} // namespace detail

/// Runs every fold (in a pool of cfg.jobs workers) and merges in fold order.
inline ExperimentReport run_experiment_matrix(const ExperimentInput& in, const ExperimentConfig& cfg)
{
    cfg.validate();
    if (in.shapes == nullptr || in.records == nullptr || in.topo == nullptr || in.shapes->size() != in.records->size()) {
        throw ValidationError("run_experiment_matrix: shapes and records are not aligned");
    }
    ExperimentReport report;
    report.plan = make_fold_plan(static_cast<int>(in.records->size()), nn::derive_seed(cfg.seed, 1), cfg.folds);
    if (static_cast<int>(report.plan.folds.front().train1.size()) <= cfg.baseline.pca_dims) {
        throw ValidationError("run_experiment_matrix: embedding-training partition smaller than pca_dims + 1");
    }
    const int n = cfg.folds;
    std::vector<FoldResult> results(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int f = next++; f < n; f = next++) {
            try {
                results[static_cast<std::size_t>(f)] = run_fold(in, cfg, report.plan.folds[static_cast<std::size_t>(f)], f);
            } catch (...) {
                errors[static_cast<std::size_t>(f)] = std::current_exception();
            }
        }
    };
    const int jobs = std::min(cfg.jobs, n);
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (int f = 0; f < n; ++f) {
        if (errors[static_cast<std::size_t>(f)]) {
            detail::rethrow_with_context(errors[static_cast<std::size_t>(f)], "fold " + std::to_string(f + 1));
        }
    }
    for (std::size_t ai = 0; ai < cfg.architectures.size(); ++ai) {
        for (std::size_t ti = 0; ti < cfg.trait_sets.size(); ++ti) {
            ReportRow row;
            row.architecture = cfg.architectures[ai];
            row.traits = cfg.trait_sets[ti];
            std::vector<double> genuine;
            std::vector<double> imposter;
            for (const auto& fr : results) {
                const auto& e = fr.runs[ai][ti];
                row.fold_auc.push_back(e.roc.auc);
                row.fold_eer.push_back(e.roc.eer);
                row.fold_roc.push_back(e.roc);
                row.empty_imposter_sets += e.empty_imposter_sets;
                genuine.insert(genuine.end(), e.genuine.begin(), e.genuine.end());
                imposter.insert(imposter.end(), e.imposter.begin(), e.imposter.end());
            }
            std::tie(row.auc_mean, row.auc_std) = mean_and_sample_std(row.fold_auc);
            std::tie(row.eer_mean, row.eer_std) = mean_and_sample_std(row.fold_eer);
            row.pooled = roc(genuine, imposter);
            report.rows.push_back(std::move(row));
        }
    }
    for (const auto& fr : results) {
        report.gml_heldout.push_back(fr.gml_heldout);
    }
    return report;
}

/// Pearson correlations of the raw gb components; NaN where a component has
/// zero variance.
inline Eigen::MatrixXd gb_correlation_matrix(const std::vector<PropertyRecord>& records)
{
    if (records.size() < 3) {
        throw ValidationError("gb_correlation_matrix: need at least 3 records");
    }
    const int d = gml::gb_dims;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(records.size()), d);
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (int c = 0; c < d; ++c) {
            x(static_cast<Eigen::Index>(i), c) = records[i].gb[static_cast<std::size_t>(c)];
        }
    }
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered;
    Eigen::MatrixXd r(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            const double denom = std::sqrt(cov(i, i) * cov(j, j));
            r(i, j) = denom > 0.0 ? (i == j ? 1.0 : cov(i, j) / denom) : std::numeric_limits<double>::quiet_NaN();
            r(j, i) = r(i, j);
        }
    }
    return r;
}

} // namespace eval
} // namespace facematch

#pragma once

#include "facematch/baseline/nb_fuser.hpp"
#include "facematch/baseline/pca.hpp"
#include "facematch/baseline/svm.hpp"
#include "facematch/core/error.hpp"
#include "facematch/core/log.hpp"
#include "facematch/fusion/fusion_net.hpp"
#include "facematch/fusion/imposter.hpp"
#include "facematch/gml/property_record.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace facematch {
namespace baseline {

using fusion::ClaimPair;
using fusion::Standardizer;
using fusion::TraitSet;
using gml::PropertyRecord;

struct BaselineConfig
{
    int pca_dims = 20;
    SolverConfig solver;
    /// Score offsets for the regression traits.
    double t_age = 10.0;
    double t_bmi = 2.0;
    /// Share of the fusion partition used to fit the per-trait classifiers;
    /// the rest fits the score fuser.
    double classifier_fraction = 0.5;
    /// Genuine/imposter draws per fuser-training subject.
    int fuser_rounds = 5;
    fusion::ImposterSetConfig imposters;
    std::uint64_t seed = 1;

    void validate() const
    {
        solver.validate();
        imposters.validate();
        if (pca_dims < 1 || !(t_age > 0.0) || !(t_bmi > 0.0) || !(classifier_fraction > 0.0 && classifier_fraction < 1.0) || fuser_rounds < 1) {
            throw ValidationError("baseline: invalid configuration");
        }
    }
};

/// One classifier or regressor per trait on standardized features.
struct TraitClassifiers
{
    Standardizer scaler;
    LinearClassifier sex;
    LinearClassifier age;
    LinearClassifier bmi;
    std::vector<LinearClassifier> gb;
};

/// Zero weights: predicts one class everywhere and scores every claim 0.
inline LinearClassifier constant_classifier(Eigen::Index width, double bias)
{
    LinearClassifier m;
    m.w = Eigen::VectorXd::Zero(width);
    m.b = bias;
    return m;
}

inline TraitClassifiers train_trait_classifiers(const Tensor2<double>& features, const std::vector<PropertyRecord>& records, const BaselineConfig& cfg)
{
    cfg.validate();
    if (features.rows() != static_cast<Eigen::Index>(records.size())) {
        throw ValidationError("train_trait_classifiers: features and records are not aligned");
    }
    TraitClassifiers t;
    t.scaler = fusion::fit_standardizer(features);
    const Tensor2<double> z = t.scaler.apply(features);
    auto solver = [&](std::uint64_t k) {
        SolverConfig s = cfg.solver;
        s.seed = nn::derive_seed(cfg.seed, k);
        return s;
    };
    std::vector<int> sex;
    std::vector<double> age;
    std::vector<double> bmi;
    for (const auto& r : records) {
        sex.push_back(r.sex);
        age.push_back(r.age);
        bmi.push_back(r.bmi);
    }
    auto classify = [&](const std::vector<int>& labels, std::uint64_t k, const std::string& trait) {
        const int positives = static_cast<int>(std::count(labels.begin(), labels.end(), 1));
        LinearClassifier m;
        if (positives == 0 || positives == static_cast<int>(labels.size())) {
            log_warning("baseline: " + trait + " has a single class in the training partition; its score is constant");
            m = constant_classifier(z.cols(), positives == 0 ? -1.0 : 1.0);
        } else {
            m = svm_train(z, labels, solver(k));
        }
        m.trait = trait;
        return m;
    };
    t.sex = classify(sex, 1, "sex");
    t.age = svr_train(z, age, solver(2));
    t.age.trait = "age";
    t.bmi = svr_train(z, bmi, solver(3));
    t.bmi.trait = "bmi";
    for (int c = 0; c < gml::gb_dims; ++c) {
        std::vector<int> bits;
        for (const auto& r : records) {
            bits.push_back(r.gb_sign(c));
        }
        t.gb.push_back(classify(bits, 10 + static_cast<std::uint64_t>(c), "gb_" + std::to_string(c + 1)));
    }
    return t;
}

inline int trait_score_width(const TraitSet& traits)
{
    return (traits.sex ? 1 : 0) + (traits.age ? 1 : 0) + (traits.bmi ? 1 : 0) + (traits.gb ? gml::gb_dims : 0);
}

/// Scores of the active traits for one standardized feature row and one claim.
inline Eigen::RowVectorXd trait_scores(const TraitClassifiers& t, const Eigen::Ref<const Eigen::VectorXd>& z, const PropertyRecord& claim,
                                       const TraitSet& traits, const BaselineConfig& cfg)
{
    Eigen::RowVectorXd s(trait_score_width(traits));
    Eigen::Index k = 0;
    if (traits.sex) {
        s[k++] = classifier_score(t.sex, z, claim.sex);
    }
    if (traits.age) {
        s[k++] = regression_score(t.age, z, claim.age, cfg.t_age);
    }
    if (traits.bmi) {
        s[k++] = regression_score(t.bmi, z, claim.bmi, cfg.t_bmi);
    }
    if (traits.gb) {
        for (int c = 0; c < gml::gb_dims; ++c) {
            s[k++] = classifier_score(t.gb[static_cast<std::size_t>(c)], z, claim.gb_sign(c));
        }
    }
    return s;
}

inline Tensor2<double> pair_trait_scores(const TraitClassifiers& t, const Tensor2<double>& features, const std::vector<PropertyRecord>& candidates,
                                         const std::vector<ClaimPair>& pairs, const TraitSet& traits, const BaselineConfig& cfg)
{
    const Tensor2<double> z = t.scaler.apply(features);
    Tensor2<double> s(static_cast<Eigen::Index>(pairs.size()), trait_score_width(traits));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        s.row(static_cast<Eigen::Index>(i)) =
            trait_scores(t, z.row(pairs[i].subject).transpose(), candidates.at(static_cast<std::size_t>(pairs[i].claim)), traits, cfg);
    }
    return s;
}

struct BaselineModel
{
    BaselineConfig config;
    TraitSet traits;
    TraitClassifiers classifiers;
    NbFuser fuser;
    /// Present when the features are PCA coefficients of flattened shapes.
    std::optional<PcaModel> pca;
};

/// Fits the fuser on genuine and imposter pairs drawn among `records`.
inline NbFuser fit_baseline_fuser(const TraitClassifiers& t, const Tensor2<double>& features, const std::vector<PropertyRecord>& records,
                                  const TraitSet& traits, const BaselineConfig& cfg)
{
    std::vector<ClaimPair> pairs;
    for (int round = 0; round < cfg.fuser_rounds; ++round) {
        const auto pe = fusion::build_training_pairs(records, cfg.imposters, traits, nn::derive_seed(cfg.seed, 3000 + static_cast<std::uint64_t>(round)));
        pairs.insert(pairs.end(), pe.pairs.begin(), pe.pairs.end());
    }
    std::vector<int> labels;
    for (const auto& p : pairs) {
        labels.push_back(p.label);
    }
    return nb_fuser_fit(pair_trait_scores(t, features, records, pairs, traits, cfg), labels);
}

/// Seeded split of n indices into (classifier part, fuser part).
inline std::pair<std::vector<int>, std::vector<int>> split_partition(int n, double fraction, std::uint64_t seed)
{
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const int cut = std::clamp(static_cast<int>(std::lround(fraction * n)), 1, n - 1);
    std::vector<int> a(idx.begin(), idx.begin() + cut);
    std::vector<int> b(idx.begin() + cut, idx.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {a, b};
}

template <typename T>
std::vector<T> take(const std::vector<T>& v, const std::vector<int>& idx)
{
    std::vector<T> out;
    out.reserve(idx.size());
    for (int i : idx) {
        out.push_back(v.at(static_cast<std::size_t>(i)));
    }
    return out;
}

inline Tensor2<double> take_rows(const Tensor2<double>& x, const std::vector<int>& idx)
{
    Tensor2<double> out(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
    }
    return out;
}

/// Classifiers on one half of the partition, fuser on the other.
inline BaselineModel train_baseline(const Tensor2<double>& features, const std::vector<PropertyRecord>& records, const TraitSet& traits,
                                    const BaselineConfig& cfg)
{
    cfg.validate();
    if (traits.empty()) {
        throw ValidationError("train_baseline: empty trait set");
    }
    if (features.rows() != static_cast<Eigen::Index>(records.size()) || records.size() < 8) {
        throw ValidationError("train_baseline: need at least 8 aligned subjects");
    }
    const auto [ci, fi] = split_partition(static_cast<int>(records.size()), cfg.classifier_fraction, nn::derive_seed(cfg.seed, 2000));
    BaselineModel m;
    m.config = cfg;
    m.traits = traits;
    m.classifiers = train_trait_classifiers(take_rows(features, ci), take(records, ci), cfg);
    m.fuser = fit_baseline_fuser(m.classifiers, take_rows(features, fi), take(records, fi), traits, cfg);
    return m;
}

inline Vector<double> baseline_scores(const BaselineModel& m, const Tensor2<double>& features, const std::vector<PropertyRecord>& candidates,
                                      const std::vector<ClaimPair>& pairs)
{
    const auto s = pair_trait_scores(m.classifiers, features, candidates, pairs, m.traits, m.config);
    Vector<double> out(s.rows());
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        out[i] = nb_fuse(m.fuser, s.row(i));
    }
    return out;
}

inline nn::Json baseline_to_json(const BaselineModel& m, const std::string& config_digest)
{
    nn::Json j = nn::checkpoint_envelope("baseline", config_digest, m.config.seed);
    j["traits"] = m.traits.name();
    j["t_age"] = m.config.t_age;
    j["t_bmi"] = m.config.t_bmi;
    j["scaler"] = {{"mean", nn::tensor_to_json("mean", m.classifiers.scaler.mean)}, {"sd", nn::tensor_to_json("sd", m.classifiers.scaler.sd)}};
    nn::Json clf = nn::Json::array();
    clf.push_back(classifier_to_json(m.classifiers.sex));
    clf.push_back(classifier_to_json(m.classifiers.age));
    clf.push_back(classifier_to_json(m.classifiers.bmi));
    for (const auto& g : m.classifiers.gb) {
        clf.push_back(classifier_to_json(g));
    }
    j["classifiers"] = clf;
    j["fuser"] = nb_fuser_to_json(m.fuser);
    j["pca"] = m.pca ? pca_to_json(*m.pca) : nn::Json(nullptr);
    return j;
}

inline BaselineModel baseline_from_json(const nn::Json& j)
{
    nn::require_kind(j, "baseline");
    BaselineModel m;
    m.traits = fusion::parse_traits(j.at("traits").get<std::string>());
    m.config.seed = j.at("seed").get<std::uint64_t>();
    m.config.t_age = j.at("t_age").get<double>();
    m.config.t_bmi = j.at("t_bmi").get<double>();
    m.classifiers.scaler.mean = nn::tensor_from_json<double>(j.at("scaler").at("mean"), "mean");
    m.classifiers.scaler.sd = nn::tensor_from_json<double>(j.at("scaler").at("sd"), "sd");
    const auto& clf = j.at("classifiers");
    if (!clf.is_array() || clf.size() != static_cast<std::size_t>(3 + gml::gb_dims)) {
        throw ValidationError("baseline checkpoint: expected " + std::to_string(3 + gml::gb_dims) + " classifiers");
    }
    m.classifiers.sex = classifier_from_json(clf[0]);
    m.classifiers.age = classifier_from_json(clf[1]);
    m.classifiers.bmi = classifier_from_json(clf[2]);
    for (std::size_t c = 3; c < clf.size(); ++c) {
        m.classifiers.gb.push_back(classifier_from_json(clf[c]));
    }
    for (const auto* c : {&m.classifiers.sex, &m.classifiers.age, &m.classifiers.bmi}) {
        if (c->w.size() != m.classifiers.scaler.width()) {
            throw ValidationError("baseline checkpoint: classifier width does not match the scaler");
        }
    }
    m.fuser = nb_fuser_from_json(j.at("fuser"));
    if (static_cast<int>(m.fuser.width()) != trait_score_width(m.traits)) {
        throw ValidationError("baseline checkpoint: fuser width does not match the trait set");
    }
    if (!j.at("pca").is_null()) {
        m.pca = pca_from_json(j.at("pca"));
    }
    return m;
}

} // namespace baseline
} // namespace facematch

#pragma once

#include "facematch/core/error.hpp"
#include "facematch/core/log.hpp"
#include "facematch/fusion/imposter.hpp"
#include "facematch/nn/activation.hpp"
#include "facematch/nn/adam.hpp"
#include "facematch/nn/checkpoint.hpp"
#include "facematch/nn/dense.hpp"
#include "facematch/nn/init.hpp"
#include "facematch/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace facematch {
namespace fusion {

using nn::RowVector;
using nn::Tensor2;
using nn::Vector;

/// Column-wise z-scoring with statistics from a training partition.
struct Standardizer
{
    RowVector<double> mean;
    RowVector<double> sd;

    Eigen::Index width() const noexcept { return mean.size(); }

    Tensor2<double> apply(const Tensor2<double>& x) const
    {
        nn::require_shape(x.cols() == width(), "Standardizer", "input " + nn::dims(x.rows(), x.cols()));
        Tensor2<double> out = x.rowwise() - mean;
        return out.array().rowwise() / sd.array();
    }
};

inline Standardizer fit_standardizer(const Tensor2<double>& x)
{
    if (x.rows() < 2) {
        throw ValidationError("fit_standardizer: need at least two rows");
    }
    Standardizer s;
    s.mean = x.colwise().mean();
    s.sd = ((x.rowwise() - s.mean).array().square().colwise().sum() / static_cast<double>(x.rows() - 1)).sqrt().matrix();
    for (Eigen::Index c = 0; c < s.sd.size(); ++c) {
        if (!(s.sd[c] > 1e-12)) {
            s.sd[c] = 1.0;
        }
    }
    return s;
}

/**
 * Claim layout: sex (0/1), age z-score, bmi z-score, gb sign bits, each
 * present only when its trait is active. Age and BMI statistics come from the
 * fusion training partition.
 */
struct ClaimEncoder
{
    TraitSet traits;
    int gb_bits = gml::gb_dims;
    double age_mean = 0.0;
    double age_sd = 1.0;
    double bmi_mean = 0.0;
    double bmi_sd = 1.0;

    int width() const noexcept { return (traits.sex ? 1 : 0) + (traits.age ? 1 : 0) + (traits.bmi ? 1 : 0) + (traits.gb ? gb_bits : 0); }

    RowVector<double> encode(const PropertyRecord& r) const
    {
        RowVector<double> v(width());
        int k = 0;
        if (traits.sex) {
            v[k++] = r.sex;
        }
        if (traits.age) {
            v[k++] = (r.age - age_mean) / age_sd;
        }
        if (traits.bmi) {
            v[k++] = (r.bmi - bmi_mean) / bmi_sd;
        }
        if (traits.gb) {
            for (int c = 0; c < gb_bits; ++c) {
                v[k++] = r.gb_sign(c) ? 1.0 : 0.0;
            }
        }
        return v;
    }
};

inline ClaimEncoder fit_claim_encoder(const std::vector<PropertyRecord>& records, const TraitSet& traits, int gb_bits)
{
    if (traits.empty()) {
        throw ValidationError("claim encoder: no active trait");
    }
    if (gb_bits < 1 || gb_bits > gml::gb_dims) {
        throw ValidationError("claim encoder: gb_bits must lie in [1, 25]");
    }
    if (records.size() < 2) {
        throw ValidationError("claim encoder: need at least two records");
    }
    ClaimEncoder e;
    e.traits = traits;
    e.gb_bits = gb_bits;
    auto stats = [&](auto get, double& mean, double& sd) {
        double s = 0.0, ss = 0.0;
        for (const auto& r : records) s += get(r);
        mean = s / static_cast<double>(records.size());
        for (const auto& r : records) ss += (get(r) - mean) * (get(r) - mean);
        sd = std::sqrt(ss / static_cast<double>(records.size() - 1));
        if (!(sd > 1e-12)) sd = 1.0;
    };
    stats([](const PropertyRecord& r) { return r.age; }, e.age_mean, e.age_sd);
    stats([](const PropertyRecord& r) { return r.bmi; }, e.bmi_mean, e.bmi_sd);
    return e;
}

/// One (subject, claimed record) pair; positions index the embedding rows
/// and the candidate list respectively.
struct ClaimPair
{
    int subject = 0;
    int claim = 0;
    int label = 0;

    friend bool operator==(const ClaimPair&, const ClaimPair&) = default;
};

struct PairEpoch
{
    std::vector<ClaimPair> pairs;
    /// Subjects whose imposter set was empty (genuine pair only).
    int empty_imposter_sets = 0;
};

/**
 * One genuine pair per subject (its own record) and one imposter pair whose
 * claim is drawn uniformly from the subject's imposter set among `records`.
 */
inline PairEpoch build_training_pairs(const std::vector<PropertyRecord>& records,
                                      const ImposterSetConfig& cfg,
                                      const TraitSet& traits,
                                      std::uint64_t epoch_seed)
{
    PairEpoch e;
    std::mt19937_64 rng(epoch_seed);
    for (std::size_t k = 0; k < records.size(); ++k) {
        e.pairs.push_back({static_cast<int>(k), static_cast<int>(k), 1});
        const auto imp = imposter_set(records[k], records, cfg, traits);
        if (imp.empty()) {
            ++e.empty_imposter_sets;
            continue;
        }
        std::uniform_int_distribution<std::size_t> pick(0, imp.size() - 1);
        e.pairs.push_back({static_cast<int>(k), imp[pick(rng)], 0});
    }
    if (e.empty_imposter_sets > 0) {
        log_info("build_training_pairs: " + std::to_string(e.empty_imposter_sets) + " subjects without imposters");
    }
    return e;
}

/// Fully connected binary classifier: hidden layers with a smooth ramp, one logit out.
struct FusionNetwork
{
    std::vector<nn::LayerParams<double>> layers;
    nn::Activation activation = nn::Activation::elu;

    Eigen::Index input_width() const { return layers.front().in_dim(); }
};

inline FusionNetwork make_fusion_network(Eigen::Index input_width, const std::vector<int>& hidden, nn::Activation act, std::uint64_t seed)
{
    if (input_width < 1) {
        throw ValidationError("fusion network: empty input");
    }
    FusionNetwork net;
    net.activation = act;
    Eigen::Index in = input_width;
    std::uint64_t k = 0;
    for (int h : hidden) {
        if (h < 1) {
            throw ValidationError("fusion network: hidden widths must be positive");
        }
        net.layers.push_back(nn::make_dense<double>(in, h, nn::derive_seed(seed, k++)));
        in = h;
    }
    net.layers.push_back(nn::make_dense<double>(in, 1, nn::derive_seed(seed, k)));
    return net;
}

struct NetworkCache
{
    std::vector<Tensor2<double>> inputs;
    std::vector<Tensor2<double>> preactivations;
};

inline Vector<double> network_logits(const FusionNetwork& net, const Tensor2<double>& x, NetworkCache* cache = nullptr)
{
    nn::require_shape(x.cols() == net.input_width(), "fusion network", "input width " + std::to_string(x.cols()) +
                                                                            ", expected " + std::to_string(net.input_width()));
    if (cache != nullptr) {
        cache->inputs.clear();
        cache->preactivations.clear();
    }
    Tensor2<double> h = x;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        Tensor2<double> pre = nn::fc_forward(h, net.layers[l]);
        const bool last = l + 1 == net.layers.size();
        Tensor2<double> next = last ? pre : nn::activation_forward(pre, net.activation);
        if (cache != nullptr) {
            cache->inputs.push_back(std::move(h));
            cache->preactivations.push_back(std::move(pre));
        }
        h = std::move(next);
    }
    return h.col(0);
}

struct NetworkGrads
{
    std::vector<Tensor2<double>> weights;
    std::vector<RowVector<double>> biases;
};

inline NetworkGrads zero_grads(const FusionNetwork& net)
{
    NetworkGrads g;
    for (const auto& l : net.layers) {
        g.weights.push_back(Tensor2<double>::Zero(l.weights.rows(), l.weights.cols()));
        g.biases.push_back(RowVector<double>::Zero(l.bias.size()));
    }
    return g;
}

inline std::vector<nn::ParamView<double>> parameter_views(FusionNetwork& net, NetworkGrads& g)
{
    std::vector<nn::ParamView<double>> v;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        v.emplace_back("fc" + std::to_string(l) + ".weights", &net.layers[l].weights, &g.weights[l]);
        v.emplace_back("fc" + std::to_string(l) + ".bias", &net.layers[l].bias, &g.biases[l]);
    }
    return v;
}

/// Parameter gradients of sum(grad_logits .* logits).
inline void network_backward(const FusionNetwork& net, const NetworkCache& cache, const Vector<double>& grad_logits, NetworkGrads& g)
{
    Tensor2<double> grad = grad_logits;
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        if (l + 1 != net.layers.size()) {
            grad = nn::activation_backward(grad, cache.preactivations[l], net.activation);
        }
        auto fc = nn::fc_backward(grad, cache.inputs[l], net.layers[l]);
        g.weights[l] = fc.grad_weights;
        g.biases[l] = fc.grad_bias;
        grad = std::move(fc.grad_x);
    }
}

struct FusionConfig
{
    std::vector<int> hidden{64, 32};
    nn::Activation activation = nn::Activation::elu;
    int epochs = 400;
    int batch_size = 32;
    double learning_rate = 1e-3;
    int gb_bits = gml::gb_dims;
    ImposterSetConfig imposters;
    std::uint64_t seed = 1;

    void validate() const
    {
        if (epochs < 1 || batch_size < 1 || !(learning_rate > 0.0)) {
            throw ValidationError("fusion: epochs, batch_size and learning_rate must be positive");
        }
        imposters.validate();
    }
};

/// One pass of shuffled minibatch Adam over (x, y); returns the mean BCE.
inline double network_epoch(FusionNetwork& net, nn::AdamState<double>& state, const Tensor2<double>& x, const Vector<double>& y,
                            int batch_size, double learning_rate, std::mt19937_64& rng)
{
    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    nn::AdamConfig adam;
    adam.lr = learning_rate;
    auto grads = zero_grads(net);
    double total = 0.0;
    NetworkCache cache;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
        Tensor2<double> xb(static_cast<Eigen::Index>(end - start), x.cols());
        Vector<double> yb(static_cast<Eigen::Index>(end - start));
        for (std::size_t i = start; i < end; ++i) {
            xb.row(static_cast<Eigen::Index>(i - start)) = x.row(order[i]);
            yb[static_cast<Eigen::Index>(i - start)] = y[order[i]];
        }
        const Vector<double> logits = network_logits(net, xb, &cache);
        const auto bce = nn::bce_loss(logits, yb);
        if (!std::isfinite(bce.loss)) {
            throw NumericalError("fusion training: non-finite loss");
        }
        network_backward(net, cache, bce.grad_logits, grads);
        nn::adam_step(parameter_views(net, grads), state, adam);
        total += bce.loss * static_cast<double>(end - start);
    }
    return total / static_cast<double>(std::max<std::size_t>(order.size(), 1));
}

/// Trained Fusion-Net with everything needed to turn (embedding, claim) into a score.
struct FusionModel
{
    FusionConfig config;
    TraitSet traits;
    Standardizer embedding_scaler;
    ClaimEncoder claims;
    FusionNetwork network;

    Eigen::Index embedding_width() const { return embedding_scaler.width(); }
};

/// Network input rows for (embedding row, claimed record) pairs.
inline Tensor2<double> pair_inputs(const FusionModel& m, const Tensor2<double>& embeddings, const std::vector<PropertyRecord>& candidates,
                                   const std::vector<ClaimPair>& pairs)
{
    nn::require_shape(embeddings.cols() == m.embedding_width(), "fusion input",
                      "embedding width " + std::to_string(embeddings.cols()) + ", model expects " + std::to_string(m.embedding_width()));
    const Tensor2<double> z = m.embedding_scaler.apply(embeddings);
    const int cw = m.claims.width();
    Tensor2<double> x(static_cast<Eigen::Index>(pairs.size()), z.cols() + cw);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)).head(z.cols()) = z.row(pairs[i].subject);
        x.row(static_cast<Eigen::Index>(i)).tail(cw) = m.claims.encode(candidates.at(static_cast<std::size_t>(pairs[i].claim)));
    }
    return x;
}

struct FusionEpochMetrics
{
    int epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
    int pairs = 0;
};

struct FusionTrainingResult
{
    FusionModel model;
    std::vector<FusionEpochMetrics> epochs;
};

/**
 * Trains on the fusion partition: embeddings row k belongs to records[k].
 * Every epoch re-draws one imposter claim per subject.
 */
inline FusionTrainingResult train_fusion(const Tensor2<double>& embeddings,
                                         const std::vector<PropertyRecord>& records,
                                         const TraitSet& traits,
                                         const FusionConfig& cfg)
{
    cfg.validate();
    if (embeddings.rows() != static_cast<Eigen::Index>(records.size())) {
        throw ValidationError("train_fusion: embeddings and records are not aligned");
    }
    FusionTrainingResult r;
    FusionModel& m = r.model;
    m.config = cfg;
    m.traits = traits;
    m.embedding_scaler = fit_standardizer(embeddings);
    m.claims = fit_claim_encoder(records, traits, cfg.gb_bits);
    m.network = make_fusion_network(embeddings.cols() + m.claims.width(), cfg.hidden, cfg.activation, nn::derive_seed(cfg.seed, 1));
    nn::AdamState<double> state;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto pe = build_training_pairs(records, cfg.imposters, traits, nn::derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch)));
        const auto x = pair_inputs(m, embeddings, records, pe.pairs);
        Vector<double> y(static_cast<Eigen::Index>(pe.pairs.size()));
        for (std::size_t i = 0; i < pe.pairs.size(); ++i) {
            y[static_cast<Eigen::Index>(i)] = pe.pairs[i].label;
        }
        std::mt19937_64 rng(nn::derive_seed(cfg.seed, 5000 + static_cast<std::uint64_t>(epoch)));
        FusionEpochMetrics em;
        em.epoch = epoch;
        em.pairs = static_cast<int>(pe.pairs.size());
        em.loss = network_epoch(m.network, state, x, y, cfg.batch_size, cfg.learning_rate, rng);
        const Vector<double> logits = network_logits(m.network, x);
        int correct = 0;
        for (Eigen::Index i = 0; i < logits.size(); ++i) {
            correct += (logits[i] > 0.0) == (y[i] > 0.5);
        }
        em.accuracy = static_cast<double>(correct) / static_cast<double>(std::max<Eigen::Index>(logits.size(), 1));
        r.epochs.push_back(em);
    }
    return r;
}

/// Sigmoid match probabilities for the given pairs.
inline Vector<double> match_scores(const FusionModel& m, const Tensor2<double>& embeddings, const std::vector<PropertyRecord>& candidates,
                                   const std::vector<ClaimPair>& pairs)
{
    const Vector<double> logits = network_logits(m.network, pair_inputs(m, embeddings, candidates, pairs));
    Vector<double> s(logits.size());
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        s[i] = nn::sigmoid(logits[i]);
    }
    return s;
}

inline double match_score(const FusionModel& m, const RowVector<double>& embedding, const PropertyRecord& claim)
{
    return match_scores(m, Tensor2<double>(embedding), {claim}, {ClaimPair{0, 0, 0}})[0];
}

inline nn::Json traits_to_json(const TraitSet& t) { return t.name(); }

inline nn::Json fusion_to_json(FusionModel& m, const std::vector<FusionEpochMetrics>& epochs, const std::string& config_digest)
{
    nn::Json j = nn::checkpoint_envelope("fusion", config_digest, m.config.seed);
    j["traits"] = m.traits.name();
    j["hidden"] = m.config.hidden;
    j["activation"] = nn::to_string(m.config.activation);
    j["gb_bits"] = m.claims.gb_bits;
    j["imposters"] = {{"t_age", m.config.imposters.t_age}, {"t_bmi", m.config.imposters.t_bmi}, {"gb_components", m.config.imposters.gb_components}};
    j["embedding_scaler"] = {{"mean", nn::tensor_to_json("mean", m.embedding_scaler.mean)}, {"sd", nn::tensor_to_json("sd", m.embedding_scaler.sd)}};
    j["claims"] = {{"age_mean", m.claims.age_mean}, {"age_sd", m.claims.age_sd}, {"bmi_mean", m.claims.bmi_mean}, {"bmi_sd", m.claims.bmi_sd}};
    auto grads = zero_grads(m.network);
    j["parameters"] = nn::parameters_to_json(parameter_views(m.network, grads));
    nn::Json log = nn::Json::array();
    for (const auto& e : epochs) {
        log.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"accuracy", e.accuracy}, {"pairs", e.pairs}});
    }
    j["metrics"] = log;
    return j;
}

inline FusionModel fusion_from_json(const nn::Json& j)
{
    nn::require_kind(j, "fusion");
    FusionModel m;
    m.traits = parse_traits(j.at("traits").get<std::string>());
    m.config.hidden = j.at("hidden").get<std::vector<int>>();
    m.config.activation = nn::parse_activation(j.at("activation").get<std::string>());
    m.config.gb_bits = j.at("gb_bits").get<int>();
    m.config.seed = j.at("seed").get<std::uint64_t>();
    const auto& imp = j.at("imposters");
    m.config.imposters.t_age = imp.at("t_age").get<double>();
    m.config.imposters.t_bmi = imp.at("t_bmi").get<double>();
    m.config.imposters.gb_components = imp.at("gb_components").get<int>();
    m.embedding_scaler.mean = nn::tensor_from_json<double>(j.at("embedding_scaler").at("mean"), "mean");
    m.embedding_scaler.sd = nn::tensor_from_json<double>(j.at("embedding_scaler").at("sd"), "sd");
    m.claims.traits = m.traits;
    m.claims.gb_bits = m.config.gb_bits;
    const auto& c = j.at("claims");
    m.claims.age_mean = c.at("age_mean").get<double>();
    m.claims.age_sd = c.at("age_sd").get<double>();
    m.claims.bmi_mean = c.at("bmi_mean").get<double>();
    m.claims.bmi_sd = c.at("bmi_sd").get<double>();
    m.network = make_fusion_network(m.embedding_scaler.width() + m.claims.width(), m.config.hidden, m.config.activation, 0);
    auto grads = zero_grads(m.network);
    nn::parameters_from_json(parameter_views(m.network, grads), j.at("parameters"));
    return m;
}

} // namespace fusion
} // namespace facematch

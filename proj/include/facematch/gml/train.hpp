#pragma once

#include "facematch/core/error.hpp"
#include "facematch/core/log.hpp"
#include "facematch/gml/property_record.hpp"
#include "facematch/gml/triplets.hpp"
#include "facematch/mesh/triangle_mesh.hpp"
#include "facematch/nn/adam.hpp"
#include "facematch/nn/checkpoint.hpp"
#include "facematch/nn/loss.hpp"
#include "facematch/spiral/encoder.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace facematch {
namespace gml {

using mesh::Vec3;
using nn::Tensor2;

/// Embedding widths of the four property encoders.
inline int embedding_dim(Property p) { return p == Property::gb ? 8 : 4; }

struct GmlConfig
{
    Property property = Property::sex;
    int epochs = 20;
    int batch_size = 32;
    int triplets_per_subject = 4;
    double learning_rate = 1e-3;
    double margin = 1.0;
    /// Fraction of the training subjects held out for per-epoch satisfaction.
    double holdout = 0.2;
    double gb_epsilon = 0.05;
    Thresholds thresholds;
    std::vector<int> channels{16, 32, 64, 64};
    nn::Activation activation = nn::Activation::elu;
    std::uint64_t seed = 1;

    void validate() const
    {
        if (epochs < 1 || batch_size < 3 || triplets_per_subject < 1) {
            throw ValidationError("gml: epochs, batch_size >= 3 and triplets_per_subject must be positive");
        }
        if (!(learning_rate > 0.0) || !(margin > 0.0) || !(gb_epsilon > 0.0)) {
            throw ValidationError("gml: learning_rate, margin and gb_epsilon must be positive");
        }
        if (!(holdout >= 0.0 && holdout < 1.0)) {
            throw ValidationError("gml: holdout must lie in [0, 1)");
        }
        thresholds.validate();
    }

    spiral::EncoderConfig encoder_config() const
    {
        spiral::EncoderConfig e;
        e.channels = channels;
        e.activation = activation;
        e.embedding_dim = embedding_dim(property);
        return e;
    }
};

/// Centers shapes on the training mean and divides by one global scale.
struct InputNormalizer
{
    Tensor2<double> mean;
    double scale = 1.0;

    int num_vertices() const noexcept { return static_cast<int>(mean.rows()); }
};

inline InputNormalizer fit_normalizer(const std::vector<std::vector<Vec3>>& shapes)
{
    if (shapes.empty() || shapes.front().empty()) {
        throw ValidationError("fit_normalizer: no shapes");
    }
    const auto n = static_cast<Eigen::Index>(shapes.front().size());
    InputNormalizer z;
    z.mean = Tensor2<double>::Zero(n, 3);
    for (const auto& s : shapes) {
        if (static_cast<Eigen::Index>(s.size()) != n) {
            throw ValidationError("fit_normalizer: shapes differ in vertex count");
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            z.mean.row(i) += s[static_cast<std::size_t>(i)].transpose();
        }
    }
    z.mean /= static_cast<double>(shapes.size());
    double ss = 0.0;
    for (const auto& s : shapes) {
        for (Eigen::Index i = 0; i < n; ++i) {
            ss += (s[static_cast<std::size_t>(i)].transpose() - z.mean.row(i)).squaredNorm();
        }
    }
    const double rms = std::sqrt(ss / (static_cast<double>(shapes.size()) * static_cast<double>(n) * 3.0));
    z.scale = rms > 1e-12 ? rms : 1.0;
    return z;
}

/// Stacks the selected shapes into a (B * N) x 3 float feature block.
inline Tensor2<float> normalized_batch(const InputNormalizer& z, const std::vector<std::vector<Vec3>>& shapes, const std::vector<int>& which)
{
    const Eigen::Index n = z.mean.rows();
    Tensor2<float> x(static_cast<Eigen::Index>(which.size()) * n, 3);
    for (std::size_t b = 0; b < which.size(); ++b) {
        const auto& s = shapes.at(static_cast<std::size_t>(which[b]));
        if (static_cast<Eigen::Index>(s.size()) != n) {
            throw ValidationError("shape has " + std::to_string(s.size()) + " vertices, encoder expects " + std::to_string(n));
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            x.row(static_cast<Eigen::Index>(b) * n + i) =
                ((s[static_cast<std::size_t>(i)].transpose() - z.mean.row(i)) / z.scale).cast<float>();
        }
    }
    return x;
}

struct GmlModel
{
    GmlConfig config;
    InputNormalizer normalizer;
    spiral::SpiralEncoder<float> encoder;

    int embedding_width() const noexcept { return encoder.config.embedding_dim; }
};

struct EpochMetrics
{
    int epoch = 0;
    double loss = 0.0;
    double train_satisfaction = 0.0;
    double heldout_satisfaction = 0.0;
    int triplets = 0;
    int skipped_anchors = 0;
    /// gb only: sampling weights used this epoch and held-out satisfaction per component.
    std::vector<double> gb_weights;
    std::vector<double> gb_accuracies;
};

struct GmlTrainingResult
{
    GmlModel model;
    std::vector<EpochMetrics> epochs;
};

/// Embeds shapes in batches; returns one row per shape.
inline Tensor2<double> encode_shapes(const GmlModel& m, const spiral::EncoderTopology& topo, const std::vector<std::vector<Vec3>>& shapes,
                                     int batch_size = 64)
{
    Tensor2<double> out(static_cast<Eigen::Index>(shapes.size()), m.embedding_width());
    for (std::size_t start = 0; start < shapes.size(); start += static_cast<std::size_t>(batch_size)) {
        std::vector<int> idx;
        for (std::size_t k = start; k < std::min(shapes.size(), start + static_cast<std::size_t>(batch_size)); ++k) {
            idx.push_back(static_cast<int>(k));
        }
        const auto e = spiral::encoder_forward(m.encoder, topo, normalized_batch(m.normalizer, shapes, idx));
        out.middleRows(static_cast<Eigen::Index>(start), e.rows()) = e.cast<double>();
    }
    return out;
}

/// Fraction of triplets with |a - p|^2 < |a - n|^2; rows of `emb` follow the triplet indices.
inline double triplet_satisfaction(const Tensor2<double>& emb, const std::vector<TripletSpec>& triplets)
{
    if (triplets.empty()) {
        return 0.0;
    }
    int ok = 0;
    for (const auto& t : triplets) {
        const double dp = (emb.row(t.anchor) - emb.row(t.positive)).squaredNorm();
        const double dn = (emb.row(t.anchor) - emb.row(t.negative)).squaredNorm();
        ok += dp < dn;
    }
    return static_cast<double>(ok) / static_cast<double>(triplets.size());
}

namespace detail {

template <typename T>
std::vector<T> pick(const std::vector<T>& v, const std::vector<int>& idx)
{
    std::vector<T> out;
    out.reserve(idx.size());
    for (int i : idx) {
        out.push_back(v.at(static_cast<std::size_t>(i)));
    }
    return out;
}

} // namespace detail

/**
 * Trains one property encoder with batch-internal random triplet mining.
 *
 * Each epoch shuffles the fit subjects into batches; every batch mines
 * triplets_per_subject * batch triplets among its own members (gb: on one
 * component drawn from the current weights), embeds each member once and
 * takes one Adam step on the mean triplet hinge. Held-out subjects supply a
 * fixed set of triplets whose satisfaction is logged per epoch and, for gb,
 * per component to set the next epoch's component weights.
 */
inline GmlTrainingResult train_gml(const std::vector<std::vector<Vec3>>& shapes,
                                   const std::vector<PropertyRecord>& records,
                                   const spiral::EncoderTopology& topo,
                                   const GmlConfig& cfg)
{
    cfg.validate();
    if (shapes.size() != records.size()) {
        throw ValidationError("train_gml: shapes and records are not aligned");
    }
    if (shapes.size() < 6) {
        throw ValidationError("train_gml: need at least 6 training subjects, have " + std::to_string(shapes.size()));
    }
    const int n = static_cast<int>(shapes.size());
    GmlTrainingResult result;
    GmlModel& model = result.model;
    model.config = cfg;
    model.normalizer = fit_normalizer(shapes);
    if (model.normalizer.num_vertices() != topo.vertices(topo.finest())) {
        throw ValidationError("train_gml: shapes have " + std::to_string(model.normalizer.num_vertices()) +
                              " vertices, finest hierarchy level has " + std::to_string(topo.vertices(topo.finest())));
    }
    model.encoder = spiral::make_encoder<float>(cfg.encoder_config(), topo, nn::derive_seed(cfg.seed, 100));

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    {
        std::mt19937_64 split_rng(nn::derive_seed(cfg.seed, 101));
        std::shuffle(order.begin(), order.end(), split_rng);
    }
    const int n_hold = static_cast<int>(std::lround(cfg.holdout * n));
    std::vector<int> fit(order.begin() + (n_hold >= 4 ? n_hold : 0), order.end());
    std::vector<int> hold(order.begin(), order.begin() + (n_hold >= 4 ? n_hold : 0));
    std::sort(fit.begin(), fit.end());
    std::sort(hold.begin(), hold.end());
    if (hold.empty()) {
        hold = fit;
    }
    if (fit.size() < 3) {
        throw ValidationError("train_gml: too few subjects left for fitting");
    }
    const auto hold_records = detail::pick(records, hold);
    const auto hold_shapes = detail::pick(shapes, hold);
    const int hold_count = cfg.triplets_per_subject * static_cast<int>(hold.size());
    std::vector<std::vector<TripletSpec>> hold_triplets;
    if (cfg.property == Property::gb) {
        for (int c = 0; c < gb_dims; ++c) {
            hold_triplets.push_back(
                mine_triplets(hold_records, cfg.property, cfg.thresholds, hold_count, nn::derive_seed(cfg.seed, 200 + c), c).triplets);
        }
    } else {
        hold_triplets.push_back(mine_triplets(hold_records, cfg.property, cfg.thresholds, hold_count, nn::derive_seed(cfg.seed, 200)).triplets);
    }

    auto weights = GbComponentWeights::uniform(cfg.gb_epsilon);
    nn::AdamConfig adam;
    adam.lr = cfg.learning_rate;
    nn::AdamState<float> state;
    auto grads = spiral::zero_grads(model.encoder);
    nn::TripletLossConfig loss_cfg;
    loss_cfg.margin = cfg.margin;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::mt19937_64 rng(nn::derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch)));
        std::vector<int> perm = fit;
        std::shuffle(perm.begin(), perm.end(), rng);
        EpochMetrics m;
        m.epoch = epoch;
        if (cfg.property == Property::gb) {
            const auto w = weights.weights();
            m.gb_weights.assign(w.begin(), w.end());
        }
        double loss_sum = 0.0;
        int satisfied = 0;
        const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
        for (std::size_t start = 0; start < perm.size(); start += bs) {
            std::size_t end = std::min(perm.size(), start + bs);
            if (perm.size() - end < 3) {
                end = perm.size();
            }
            std::vector<int> batch(perm.begin() + static_cast<std::ptrdiff_t>(start), perm.begin() + static_cast<std::ptrdiff_t>(end));
            const int component = cfg.property == Property::gb ? select_gb_component(weights, rng) : -1;
            const auto mined = mine_triplets(detail::pick(records, batch), cfg.property, cfg.thresholds,
                                             cfg.triplets_per_subject * static_cast<int>(batch.size()), rng(), component);
            m.skipped_anchors += mined.skipped_anchors;
            if (end == perm.size()) {
                start = perm.size();
            }
            if (mined.triplets.empty()) {
                continue;
            }
            const auto& tr = mined.triplets;
            spiral::EncoderCache<float> cache;
            const Tensor2<float> emb = spiral::encoder_forward(model.encoder, topo, normalized_batch(model.normalizer, shapes, batch), &cache);
            const auto t = static_cast<Eigen::Index>(tr.size());
            Tensor2<float> a(t, emb.cols()), p(t, emb.cols()), ng(t, emb.cols());
            for (Eigen::Index i = 0; i < t; ++i) {
                a.row(i) = emb.row(tr[static_cast<std::size_t>(i)].anchor);
                p.row(i) = emb.row(tr[static_cast<std::size_t>(i)].positive);
                ng.row(i) = emb.row(tr[static_cast<std::size_t>(i)].negative);
            }
            const auto l = nn::triplet_loss(a, p, ng, loss_cfg);
            if (!std::isfinite(l.loss)) {
                throw NumericalError("train_gml: non-finite loss at epoch " + std::to_string(epoch) + " (" + to_string(cfg.property) + ")");
            }
            Tensor2<float> g = Tensor2<float>::Zero(emb.rows(), emb.cols());
            for (Eigen::Index i = 0; i < t; ++i) {
                const auto& s = tr[static_cast<std::size_t>(i)];
                g.row(s.anchor) += l.grad_anchor.row(i);
                g.row(s.positive) += l.grad_positive.row(i);
                g.row(s.negative) += l.grad_negative.row(i);
                satisfied += (a.row(i) - p.row(i)).squaredNorm() < (a.row(i) - ng.row(i)).squaredNorm();
            }
            spiral::encoder_backward(model.encoder, topo, cache, g, grads);
            nn::adam_step(spiral::parameter_views(model.encoder, grads), state, adam);
            loss_sum += l.loss * static_cast<double>(t);
            m.triplets += static_cast<int>(t);
        }
        if (m.triplets == 0) {
            throw ValidationError("train_gml: no triplets could be mined for " + std::string(to_string(cfg.property)));
        }
        m.loss = loss_sum / m.triplets;
        m.train_satisfaction = static_cast<double>(satisfied) / m.triplets;

        const auto hold_emb = encode_shapes(model, topo, hold_shapes);
        if (cfg.property == Property::gb) {
            std::array<double, gb_dims> acc{};
            double total = 0.0;
            for (int c = 0; c < gb_dims; ++c) {
                const auto& ht = hold_triplets[static_cast<std::size_t>(c)];
                acc[static_cast<std::size_t>(c)] = ht.empty() ? 0.5 : triplet_satisfaction(hold_emb, ht);
                total += acc[static_cast<std::size_t>(c)];
            }
            m.gb_accuracies.assign(acc.begin(), acc.end());
            m.heldout_satisfaction = total / gb_dims;
            weights = GbComponentWeights::from_accuracies(acc, cfg.gb_epsilon);
        } else {
            m.heldout_satisfaction = triplet_satisfaction(hold_emb, hold_triplets.front());
        }
        log_info("gml " + std::string(to_string(cfg.property)) + " epoch " + std::to_string(epoch) + " loss " + format_g9(m.loss) +
                 " held-out satisfaction " + format_g9(m.heldout_satisfaction));
        result.epochs.push_back(std::move(m));
    }
    return result;
}

inline nn::Json gml_config_to_json(const GmlConfig& c)
{
    return nn::Json{{"property", to_string(c.property)},
                    {"epochs", c.epochs},
                    {"batch_size", c.batch_size},
                    {"triplets_per_subject", c.triplets_per_subject},
                    {"learning_rate", c.learning_rate},
                    {"margin", c.margin},
                    {"holdout", c.holdout},
                    {"gb_epsilon", c.gb_epsilon},
                    {"t_age", c.thresholds.age},
                    {"t_bmi", c.thresholds.bmi},
                    {"channels", c.channels},
                    {"activation", nn::to_string(c.activation)},
                    {"seed", c.seed}};
}

inline GmlConfig gml_config_from_json(const nn::Json& j)
{
    GmlConfig c;
    c.property = parse_property(j.at("property").get<std::string>());
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.triplets_per_subject = j.at("triplets_per_subject").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.margin = j.at("margin").get<double>();
    c.holdout = j.at("holdout").get<double>();
    c.gb_epsilon = j.at("gb_epsilon").get<double>();
    c.thresholds.age = j.at("t_age").get<double>();
    c.thresholds.bmi = j.at("t_bmi").get<double>();
    c.channels = j.at("channels").get<std::vector<int>>();
    c.activation = nn::parse_activation(j.at("activation").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

inline nn::Json metrics_to_json(const std::vector<EpochMetrics>& epochs)
{
    nn::Json a = nn::Json::array();
    for (const auto& m : epochs) {
        nn::Json e{{"epoch", m.epoch},
                   {"loss", m.loss},
                   {"train_satisfaction", m.train_satisfaction},
                   {"heldout_satisfaction", m.heldout_satisfaction},
                   {"triplets", m.triplets},
                   {"skipped_anchors", m.skipped_anchors}};
        if (!m.gb_weights.empty()) {
            e["gb_weights"] = m.gb_weights;
            e["gb_accuracies"] = m.gb_accuracies;
        }
        a.push_back(e);
    }
    return a;
}

inline nn::Json gml_to_json(GmlModel& m, const std::vector<EpochMetrics>& epochs, const std::string& config_digest)
{
    nn::Json j = nn::checkpoint_envelope("gml", config_digest, m.config.seed);
    j["config"] = gml_config_to_json(m.config);
    j["normalizer"] = {{"mean", nn::tensor_to_json("mean", m.normalizer.mean)}, {"scale", m.normalizer.scale}};
    j["encoder"] = spiral::encoder_to_json(m.encoder);
    j["metrics"] = metrics_to_json(epochs);
    return j;
}

inline GmlModel gml_from_json(const nn::Json& j, const spiral::EncoderTopology& topo)
{
    nn::require_kind(j, "gml");
    GmlModel m;
    m.config = gml_config_from_json(j.at("config"));
    m.normalizer.mean = nn::tensor_from_json<double>(j.at("normalizer").at("mean"), "mean");
    m.normalizer.scale = j.at("normalizer").at("scale").get<double>();
    m.encoder = spiral::encoder_from_json<float>(j.at("encoder"), topo);
    if (m.normalizer.num_vertices() != topo.vertices(topo.finest()) || m.normalizer.mean.cols() != 3) {
        throw ValidationError("gml checkpoint does not match the hierarchy's finest level");
    }
    if (m.embedding_width() != embedding_dim(m.config.property)) {
        throw ValidationError("gml checkpoint has embedding width " + std::to_string(m.embedding_width()) + " for property " +
                              to_string(m.config.property));
    }
    return m;
}

} // namespace gml
} // namespace facematch

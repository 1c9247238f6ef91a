#pragma once

#include "facematch/nn/activation.hpp"
#include "facematch/nn/adam.hpp"
#include "facematch/nn/checkpoint.hpp"
#include "facematch/nn/dense.hpp"
#include "facematch/nn/init.hpp"
#include "facematch/resample/hierarchy.hpp"
#include "facematch/spiral/spiral_conv.hpp"
#include "facematch/spiral/spiral_table.hpp"

#include <string>
#include <vector>

namespace facematch {
namespace spiral {

/// Spiral tables for every level of a subdivision hierarchy.
struct EncoderTopology
{
    std::vector<SpiralIndexTable> tables;

    int finest() const noexcept { return static_cast<int>(tables.size()) - 1; }
    int vertices(int level) const { return tables.at(static_cast<std::size_t>(level)).num_vertices; }
};

inline EncoderTopology make_encoder_topology(const resample::MeshHierarchy& h)
{
    EncoderTopology t;
    for (const auto& level : h.levels) {
        t.tables.push_back(build_spirals(level.num_vertices(), level.faces));
    }
    return t;
}

struct EncoderConfig
{
    int input_channels = 3;
    /// Output channels of each spiral conv; conv k runs on level finest - k.
    std::vector<int> channels{16, 32, 64, 64};
    nn::Activation activation = nn::Activation::elu;
    int embedding_dim = 4;
};

/// Spiral convs with restriction pooling between levels, a mean over the
/// vertices of the coarsest used level, and a linear head.
template <typename T>
struct SpiralEncoder
{
    EncoderConfig config;
    std::vector<SpiralConvParams<T>> convs;
    nn::LayerParams<T> head;
};

template <typename T>
struct EncoderGrads
{
    std::vector<Tensor2<T>> kernels;
    std::vector<RowVector<T>> biases;
    Tensor2<T> head_weights;
    RowVector<T> head_bias;
};

template <typename T>
struct EncoderCache
{
    int batch = 0;
    std::vector<Tensor2<T>> inputs;
    std::vector<Tensor2<T>> preactivations;
    Tensor2<T> pooled;
};

inline void validate_encoder(const EncoderConfig& cfg, const EncoderTopology& topo)
{
    if (cfg.channels.empty() || cfg.input_channels <= 0 || cfg.embedding_dim <= 0) {
        throw ValidationError("encoder: needs at least one conv layer and positive widths");
    }
    for (int c : cfg.channels) {
        if (c <= 0) {
            throw ValidationError("encoder: channel widths must be positive");
        }
    }
    if (static_cast<int>(cfg.channels.size()) > topo.finest() + 1) {
        throw ValidationError("encoder: " + std::to_string(cfg.channels.size()) + " conv layers need " +
                              std::to_string(cfg.channels.size() - 1) + " hierarchy levels below the finest, have " +
                              std::to_string(topo.finest()));
    }
}

template <typename T>
SpiralEncoder<T> make_encoder(const EncoderConfig& cfg, const EncoderTopology& topo, std::uint64_t seed)
{
    validate_encoder(cfg, topo);
    SpiralEncoder<T> e;
    e.config = cfg;
    int in = cfg.input_channels;
    for (std::size_t k = 0; k < cfg.channels.size(); ++k) {
        const auto& table = topo.tables[static_cast<std::size_t>(topo.finest() - static_cast<int>(k))];
        e.convs.push_back(make_spiral_conv<T>(table.length, in, cfg.channels[k], nn::derive_seed(seed, k)));
        in = cfg.channels[k];
    }
    e.head = nn::make_dense<T>(in, cfg.embedding_dim, nn::derive_seed(seed, cfg.channels.size()));
    return e;
}

template <typename T>
EncoderGrads<T> zero_grads(const SpiralEncoder<T>& e)
{
    EncoderGrads<T> g;
    for (const auto& c : e.convs) {
        g.kernels.push_back(Tensor2<T>::Zero(c.kernel.rows(), c.kernel.cols()));
        g.biases.push_back(RowVector<T>::Zero(c.bias.size()));
    }
    g.head_weights = Tensor2<T>::Zero(e.head.weights.rows(), e.head.weights.cols());
    g.head_bias = RowVector<T>::Zero(e.head.bias.size());
    return g;
}

/// Parameter/gradient pairs in a fixed order, for the optimizer and checkpoints.
template <typename T>
std::vector<nn::ParamView<T>> parameter_views(SpiralEncoder<T>& e, EncoderGrads<T>& g)
{
    std::vector<nn::ParamView<T>> v;
    for (std::size_t k = 0; k < e.convs.size(); ++k) {
        v.emplace_back("conv" + std::to_string(k) + ".kernel", &e.convs[k].kernel, &g.kernels[k]);
        v.emplace_back("conv" + std::to_string(k) + ".bias", &e.convs[k].bias, &g.biases[k]);
    }
    v.emplace_back("head.weights", &e.head.weights, &g.head_weights);
    v.emplace_back("head.bias", &e.head.bias, &g.head_bias);
    return v;
}

namespace detail {

/// Keeps the first `coarse` rows of every `fine`-row sample block.
template <typename T>
Tensor2<T> restrict_rows(const Tensor2<T>& x, int batch, int fine, int coarse)
{
    Tensor2<T> out(static_cast<Eigen::Index>(batch) * coarse, x.cols());
    for (int b = 0; b < batch; ++b) {
        out.middleRows(static_cast<Eigen::Index>(b) * coarse, coarse) = x.middleRows(static_cast<Eigen::Index>(b) * fine, coarse);
    }
    return out;
}

template <typename T>
Tensor2<T> extend_rows(const Tensor2<T>& g, int batch, int fine, int coarse)
{
    Tensor2<T> out = Tensor2<T>::Zero(static_cast<Eigen::Index>(batch) * fine, g.cols());
    for (int b = 0; b < batch; ++b) {
        out.middleRows(static_cast<Eigen::Index>(b) * fine, coarse) = g.middleRows(static_cast<Eigen::Index>(b) * coarse, coarse);
    }
    return out;
}

} // namespace detail

/**
 * Embeds a batch of shapes. `x` stacks B samples of finest-level vertex
 * features (B * N rows, input_channels columns); the result is B x embedding_dim.
 */
template <typename T>
Tensor2<T> encoder_forward(const SpiralEncoder<T>& e, const EncoderTopology& topo, const Tensor2<T>& x, EncoderCache<T>* cache = nullptr)
{
    const int n_fine = topo.vertices(topo.finest());
    nn::require_shape(x.cols() == e.config.input_channels && x.rows() > 0 && x.rows() % n_fine == 0, "encoder_forward",
                      "input " + nn::dims(x.rows(), x.cols()) + " for " + std::to_string(n_fine) + " vertices");
    const int batch = static_cast<int>(x.rows() / n_fine);
    if (cache != nullptr) {
        cache->batch = batch;
        cache->inputs.clear();
        cache->preactivations.clear();
    }
    Tensor2<T> h = x;
    const int layers = static_cast<int>(e.convs.size());
    for (int k = 0; k < layers; ++k) {
        const int level = topo.finest() - k;
        Tensor2<T> pre = spiral_conv_forward(h, topo.tables[static_cast<std::size_t>(level)], e.convs[static_cast<std::size_t>(k)]);
        Tensor2<T> act = nn::activation_forward(pre, e.config.activation);
        if (cache != nullptr) {
            cache->inputs.push_back(std::move(h));
            cache->preactivations.push_back(std::move(pre));
        }
        h = k + 1 < layers ? detail::restrict_rows(act, batch, topo.vertices(level), topo.vertices(level - 1)) : std::move(act);
    }
    const int n_last = topo.vertices(topo.finest() - layers + 1);
    Tensor2<T> pooled(batch, h.cols());
    for (int b = 0; b < batch; ++b) {
        pooled.row(b) = h.middleRows(static_cast<Eigen::Index>(b) * n_last, n_last).colwise().mean();
    }
    Tensor2<T> out = nn::fc_forward(pooled, e.head);
    if (cache != nullptr) {
        cache->pooled = std::move(pooled);
    }
    return out;
}

/// Writes parameter gradients of sum(grad_out .* forward) into `grads`;
/// returns the gradient with respect to the input when requested.
template <typename T>
Tensor2<T> encoder_backward(const SpiralEncoder<T>& e,
                            const EncoderTopology& topo,
                            const EncoderCache<T>& cache,
                            const Tensor2<T>& grad_out,
                            EncoderGrads<T>& grads)
{
    nn::require_shape(grad_out.rows() == cache.batch && grad_out.cols() == e.config.embedding_dim, "encoder_backward",
                      "grad " + nn::dims(grad_out.rows(), grad_out.cols()));
    const int layers = static_cast<int>(e.convs.size());
    const int batch = cache.batch;
    auto head = nn::fc_backward(grad_out, cache.pooled, e.head);
    grads.head_weights = head.grad_weights;
    grads.head_bias = head.grad_bias;

    const int n_last = topo.vertices(topo.finest() - layers + 1);
    Tensor2<T> g(static_cast<Eigen::Index>(batch) * n_last, head.grad_x.cols());
    for (int b = 0; b < batch; ++b) {
        g.middleRows(static_cast<Eigen::Index>(b) * n_last, n_last).rowwise() = head.grad_x.row(b) / static_cast<T>(n_last);
    }
    for (int k = layers - 1; k >= 0; --k) {
        const int level = topo.finest() - k;
        if (k + 1 < layers) {
            g = detail::extend_rows(g, batch, topo.vertices(level), topo.vertices(level - 1));
        }
        const Tensor2<T> g_pre = nn::activation_backward(g, cache.preactivations[static_cast<std::size_t>(k)], e.config.activation);
        auto conv = spiral_conv_backward(g_pre, cache.inputs[static_cast<std::size_t>(k)], topo.tables[static_cast<std::size_t>(level)],
                                         e.convs[static_cast<std::size_t>(k)]);
        grads.kernels[static_cast<std::size_t>(k)] = conv.grad_kernel;
        grads.biases[static_cast<std::size_t>(k)] = conv.grad_bias;
        g = std::move(conv.grad_features);
    }
    return g;
}

template <typename T>
nn::Json encoder_to_json(SpiralEncoder<T>& e)
{
    auto grads = zero_grads(e);
    nn::Json j;
    j["input_channels"] = e.config.input_channels;
    j["channels"] = e.config.channels;
    j["activation"] = nn::to_string(e.config.activation);
    j["embedding_dim"] = e.config.embedding_dim;
    j["parameters"] = nn::parameters_to_json(parameter_views(e, grads));
    return j;
}

template <typename T>
SpiralEncoder<T> encoder_from_json(const nn::Json& j, const EncoderTopology& topo)
{
    EncoderConfig cfg;
    cfg.input_channels = j.at("input_channels").get<int>();
    cfg.channels = j.at("channels").get<std::vector<int>>();
    cfg.activation = nn::parse_activation(j.at("activation").get<std::string>());
    cfg.embedding_dim = j.at("embedding_dim").get<int>();
    auto e = make_encoder<T>(cfg, topo, 0);
    auto grads = zero_grads(e);
    nn::parameters_from_json(parameter_views(e, grads), j.at("parameters"));
    return e;
}

} // namespace spiral
} // namespace facematch

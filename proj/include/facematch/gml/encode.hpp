#pragma once

#include "facematch/core/error.hpp"
#include "facematch/core/text_io.hpp"
#include "facematch/gml/train.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace facematch {
namespace gml {

inline constexpr int concatenated_dim = 20;

/// Concatenated sex | age | bmi | gb embeddings, one row per shape.
inline Tensor2<double> encode_dataset(const std::array<const GmlModel*, 4>& models,
                                      const spiral::EncoderTopology& topo,
                                      const std::vector<std::vector<Vec3>>& shapes)
{
    int width = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        const auto* m = models[k];
        if (m == nullptr) {
            throw ValidationError("encode_dataset: missing encoder");
        }
        if (m->config.property != all_properties()[k]) {
            throw ValidationError(std::string("encode_dataset: slot ") + to_string(all_properties()[k]) + " holds a " +
                                  to_string(m->config.property) + " encoder");
        }
        if (m->embedding_width() != embedding_dim(m->config.property)) {
            throw ValidationError("encode_dataset: embedding width mismatch");
        }
        width += m->embedding_width();
    }
    if (width != concatenated_dim) {
        throw ValidationError("encode_dataset: concatenated width " + std::to_string(width));
    }
    Tensor2<double> out(static_cast<Eigen::Index>(shapes.size()), concatenated_dim);
    Eigen::Index col = 0;
    for (const auto* m : models) {
        const auto e = encode_shapes(*m, topo, shapes);
        out.middleCols(col, e.cols()) = e;
        col += e.cols();
    }
    return out;
}

struct EmbeddingTable
{
    std::vector<std::string> ids;
    Tensor2<double> values;
};

inline void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& t, const std::string& config_digest = {})
{
    if (static_cast<Eigen::Index>(t.ids.size()) != t.values.rows()) {
        throw ValidationError("write_embeddings: ids and rows differ");
    }
    auto out = open_output(path);
    out << artifact_header("embeddings", config_digest) << '\n' << "id";
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) {
        out << ",e" << c + 1;
    }
    out << '\n';
    for (std::size_t k = 0; k < t.ids.size(); ++k) {
        out << t.ids[k];
        for (Eigen::Index c = 0; c < t.values.cols(); ++c) {
            out << ',' << format_double(t.values(static_cast<Eigen::Index>(k), c));
        }
        out << '\n';
    }
}

inline EmbeddingTable read_embeddings(const std::filesystem::path& path)
{
    auto in = open_input(path);
    LineReader reader(in, path.string());
    std::string line;
    if (!reader.next(line)) {
        reader.fail("missing header row");
    }
    const auto header = split(line, ',');
    if (header.size() < 2 || header[0] != "id") {
        reader.fail("header must be id,e1..eD");
    }
    const auto dim = static_cast<Eigen::Index>(header.size() - 1);
    for (Eigen::Index c = 0; c < dim; ++c) {
        if (header[static_cast<std::size_t>(c + 1)] != "e" + std::to_string(c + 1)) {
            reader.fail("header must be id,e1..eD");
        }
    }
    EmbeddingTable t;
    std::vector<std::vector<double>> rows;
    std::map<std::string, int> seen;
    while (reader.next(line)) {
        const auto cols = split(line, ',');
        if (static_cast<Eigen::Index>(cols.size()) != dim + 1) {
            reader.fail("expected " + std::to_string(dim + 1) + " columns, found " + std::to_string(cols.size()));
        }
        std::vector<double> r(static_cast<std::size_t>(dim));
        for (Eigen::Index c = 0; c < dim; ++c) {
            if (!parse_double(cols[static_cast<std::size_t>(c + 1)], r[static_cast<std::size_t>(c)])) {
                reader.fail("e" + std::to_string(c + 1) + " is not a number");
            }
        }
        const std::string id(trim(cols[0]));
        if (!seen.emplace(id, 0).second) {
            reader.fail("duplicate id " + id);
        }
        t.ids.push_back(id);
        rows.push_back(std::move(r));
    }
    t.values.resize(static_cast<Eigen::Index>(rows.size()), dim);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        for (Eigen::Index c = 0; c < dim; ++c) {
            t.values(static_cast<Eigen::Index>(k), c) = rows[k][static_cast<std::size_t>(c)];
        }
    }
    return t;
}

} // namespace gml
} // namespace facematch

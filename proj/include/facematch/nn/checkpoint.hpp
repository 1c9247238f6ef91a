#pragma once

#include "facematch/core/error.hpp"
#include "facematch/core/text_io.hpp"
#include "facematch/nn/adam.hpp"
#include "facematch/nn/tensor.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace facematch {
namespace nn {

using Json = nlohmann::json;

/// Row-major tensor as {"name", "rows", "cols", "data"}. Values are written as
/// doubles with round-trip precision, so float and double tensors survive a
/// save/load cycle bit for bit.
template <typename Derived>
Json tensor_to_json(const std::string& name, const Eigen::DenseBase<Derived>& t)
{
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(t.size()));
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
        for (Eigen::Index c = 0; c < t.cols(); ++c) {
            data.push_back(static_cast<double>(t(r, c)));
        }
    }
    return Json{{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}, {"data", std::move(data)}};
}

template <typename T>
Tensor2<T> tensor_from_json(const Json& j, const std::string& expected_name = {})
{
    if (!expected_name.empty() && j.at("name").get<std::string>() != expected_name) {
        throw ValidationError("checkpoint: expected tensor '" + expected_name + "', found '" +
                              j.at("name").get<std::string>() + "'");
    }
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw ValidationError("checkpoint: tensor '" + j.at("name").get<std::string>() + "' has wrong length");
    }
    Tensor2<T> t(rows, cols);
    for (Eigen::Index i = 0; i < rows * cols; ++i) {
        t.data()[i] = static_cast<T>(data[static_cast<std::size_t>(i)].get<double>());
    }
    return t;
}

template <typename T>
Json parameters_to_json(const std::vector<ParamView<T>>& params)
{
    Json arr = Json::array();
    for (const auto& p : params) {
        arr.push_back(tensor_to_json(p.name, p.value_map()));
    }
    return arr;
}

template <typename T>
void parameters_from_json(const std::vector<ParamView<T>>& params, const Json& arr)
{
    if (arr.size() != params.size()) {
        throw ValidationError("checkpoint: parameter count mismatch");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto t = tensor_from_json<T>(arr[i], params[i].name);
        if (t.rows() != params[i].rows || t.cols() != params[i].cols) {
            throw ValidationError("checkpoint: shape mismatch for " + params[i].name);
        }
        params[i].value_map() = t;
    }
}

template <typename T>
Json adam_to_json(const AdamState<T>& s)
{
    Json m = Json::array();
    Json v = Json::array();
    for (std::size_t i = 0; i < s.first_moment.size(); ++i) {
        m.push_back(tensor_to_json("m" + std::to_string(i), s.first_moment[i].matrix().transpose()));
        v.push_back(tensor_to_json("v" + std::to_string(i), s.second_moment[i].matrix().transpose()));
    }
    return Json{{"step", s.step}, {"first_moment", m}, {"second_moment", v}};
}

template <typename T>
AdamState<T> adam_from_json(const Json& j)
{
    AdamState<T> s;
    s.step = j.at("step").get<std::int64_t>();
    for (const auto& m : j.at("first_moment")) {
        s.first_moment.push_back(tensor_from_json<T>(m).transpose().array());
    }
    for (const auto& v : j.at("second_moment")) {
        s.second_moment.push_back(tensor_from_json<T>(v).transpose().array());
    }
    return s;
}

/// Envelope shared by every model file.
inline Json checkpoint_envelope(const std::string& kind, const std::string& config_digest, std::uint64_t seed)
{
    return Json{{"format", "facematch-checkpoint"},
                {"format_version", format_version},
                {"kind", kind},
                {"config_digest", config_digest},
                {"seed", seed}};
}

inline void write_json(const std::filesystem::path& path, const Json& j)
{
    auto out = open_output(path);
    out << j.dump(1) << '\n';
}

inline Json read_json(const std::filesystem::path& path)
{
    try {
        return Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

inline void require_kind(const Json& j, const std::string& kind)
{
    if (j.value("format", std::string()) != "facematch-checkpoint" || j.value("kind", std::string()) != kind) {
        throw ValidationError("checkpoint is not a '" + kind + "' model");
    }
    if (j.value("format_version", 0) != format_version) {
        throw ValidationError("unsupported checkpoint format version");
    }
}

} // namespace nn
} // namespace facematch

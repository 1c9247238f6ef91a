#pragma once

#include "facematch/core/error.hpp"
#include "facematch/core/text_io.hpp"
#include "facematch/gml/property_record.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace facematch {
namespace fusion {

/// A property claim presented for one subject. label is 1 (genuine),
/// 0 (imposter) or -1 when unknown.
struct Claim
{
    std::string id;
    std::string claim_id;
    int label = -1;
    gml::PropertyRecord properties;
};

inline std::string claims_csv_header()
{
    std::string h = "id,claim_id,label,sex,age,bmi";
    for (int c = 1; c <= gml::gb_dims; ++c) {
        h += ",gb_" + std::to_string(c);
    }
    return h;
}

inline void write_claims(const std::filesystem::path& path, const std::vector<Claim>& claims, const std::string& config_digest = {})
{
    auto out = open_output(path);
    out << artifact_header("claims", config_digest) << '\n' << claims_csv_header() << '\n';
    for (const auto& c : claims) {
        out << c.id << ',' << c.claim_id << ',';
        if (c.label >= 0) {
            out << c.label;
        }
        out << ',' << c.properties.sex << ',' << format_g9(c.properties.age) << ',' << format_g9(c.properties.bmi);
        for (double g : c.properties.gb) {
            out << ',' << format_g9(g);
        }
        out << '\n';
    }
}

/// Rows `id,claim_id,label,sex,age,bmi,gb_1..gb_25`; the label cell may be empty.
inline std::vector<Claim> read_claims(const std::filesystem::path& path)
{
    auto in = open_input(path);
    LineReader reader(in, path.string());
    std::string line;
    if (!reader.next(line) || line != claims_csv_header()) {
        reader.fail("header must be " + claims_csv_header());
    }
    std::vector<Claim> claims;
    while (reader.next(line)) {
        const auto cols = split(line, ',');
        if (cols.size() != static_cast<std::size_t>(6 + gml::gb_dims)) {
            reader.fail("expected " + std::to_string(6 + gml::gb_dims) + " columns, found " + std::to_string(cols.size()));
        }
        Claim c;
        c.id = std::string(trim(cols[0]));
        c.claim_id = std::string(trim(cols[1]));
        if (c.id.empty() || c.claim_id.empty()) {
            reader.fail("id and claim_id must be non-empty");
        }
        if (!trim(cols[2]).empty()) {
            long long label = 0;
            if (!parse_int(cols[2], label) || (label != 0 && label != 1)) {
                reader.fail("label must be 0, 1 or empty");
            }
            c.label = static_cast<int>(label);
        }
        auto& r = c.properties;
        r.id = c.claim_id;
        long long sex = 0;
        if (!parse_int(cols[3], sex) || (sex != 0 && sex != 1)) {
            reader.fail("sex must be 0 or 1");
        }
        r.sex = static_cast<int>(sex);
        if (!parse_double(cols[4], r.age) || !parse_double(cols[5], r.bmi)) {
            reader.fail("age and bmi must be numbers");
        }
        for (int g = 0; g < gml::gb_dims; ++g) {
            if (!parse_double(cols[static_cast<std::size_t>(6 + g)], r.gb[static_cast<std::size_t>(g)])) {
                reader.fail("gb_" + std::to_string(g + 1) + " is not a number");
            }
        }
        try {
            gml::validate_record(r);
        } catch (const ValidationError& e) {
            reader.fail(e.what());
        }
        claims.push_back(std::move(c));
    }
    return claims;
}

struct ScoreRow
{
    std::string id;
    std::string claim_id;
    double score = 0.0;
    int label = -1;
};

inline void write_scores(const std::filesystem::path& path, const std::vector<ScoreRow>& rows, const std::string& config_digest = {})
{
    auto out = open_output(path);
    out << artifact_header("scores", config_digest) << '\n' << "id,claim_id,score,label\n";
    for (const auto& r : rows) {
        out << r.id << ',' << r.claim_id << ',' << format_double(r.score) << ',';
        if (r.label >= 0) {
            out << r.label;
        }
        out << '\n';
    }
}

inline std::vector<ScoreRow> read_scores(const std::filesystem::path& path)
{
    auto in = open_input(path);
    LineReader reader(in, path.string());
    std::string line;
    if (!reader.next(line) || line != "id,claim_id,score,label") {
        reader.fail("header must be id,claim_id,score,label");
    }
    std::vector<ScoreRow> rows;
    while (reader.next(line)) {
        const auto cols = split(line, ',');
        if (cols.size() != 4) {
            reader.fail("expected 4 columns");
        }
        ScoreRow r;
        r.id = std::string(trim(cols[0]));
        r.claim_id = std::string(trim(cols[1]));
        if (!parse_double(cols[2], r.score)) {
            reader.fail("score is not a number");
        }
        if (!trim(cols[3]).empty()) {
            long long label = 0;
            if (!parse_int(cols[3], label) || (label != 0 && label != 1)) {
                reader.fail("label must be 0, 1 or empty");
            }
            r.label = static_cast<int>(label);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace fusion
} // namespace facematch

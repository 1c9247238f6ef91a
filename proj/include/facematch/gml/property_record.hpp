#pragma once

#include "facematch/core/error.hpp"
#include "facematch/core/text_io.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace facematch {
namespace gml {

inline constexpr int gb_dims = 25;

/// DNA-side identifier of one subject. Sex 0 = female, 1 = male.
struct PropertyRecord
{
    std::string id;
    int sex = 0;
    double age = 0.0;
    double bmi = 0.0;
    std::array<double, gb_dims> gb{};

    bool gb_sign(int component) const { return gb.at(static_cast<std::size_t>(component)) > 0.0; }
    std::array<bool, gb_dims> gb_signs() const
    {
        std::array<bool, gb_dims> s{};
        for (int c = 0; c < gb_dims; ++c) {
            s[static_cast<std::size_t>(c)] = gb_sign(c);
        }
        return s;
    }

    friend bool operator==(const PropertyRecord&, const PropertyRecord&) = default;
};

enum class Property { sex, age, bmi, gb };

inline const char* to_string(Property p)
{
    switch (p) {
    case Property::sex: return "sex";
    case Property::age: return "age";
    case Property::bmi: return "bmi";
    case Property::gb: return "gb";
    }
    return "?";
}

inline Property parse_property(const std::string& name)
{
    if (name == "sex") return Property::sex;
    if (name == "age") return Property::age;
    if (name == "bmi") return Property::bmi;
    if (name == "gb") return Property::gb;
    throw ValidationError("unknown property '" + name + "' (expected sex, age, bmi or gb)");
}

inline const std::array<Property, 4>& all_properties()
{
    static const std::array<Property, 4> all{Property::sex, Property::age, Property::bmi, Property::gb};
    return all;
}

inline void validate_record(const PropertyRecord& r)
{
    if (r.id.empty()) {
        throw ValidationError("property record with empty id");
    }
    if (r.sex != 0 && r.sex != 1) {
        throw ValidationError(r.id + ": sex must be 0 or 1");
    }
    if (!(r.age > 0.0) || !(r.bmi > 0.0) || !std::isfinite(r.age) || !std::isfinite(r.bmi)) {
        throw ValidationError(r.id + ": age and bmi must be positive");
    }
    for (double g : r.gb) {
        if (!std::isfinite(g)) {
            throw ValidationError(r.id + ": non-finite gb component");
        }
    }
}

inline std::string properties_csv_header()
{
    std::string h = "id,sex,age,bmi";
    for (int c = 1; c <= gb_dims; ++c) {
        h += ",gb_" + std::to_string(c);
    }
    return h;
}

inline void write_properties_rows(std::ostream& out, const std::vector<PropertyRecord>& records)
{
    out << properties_csv_header() << '\n';
    for (const auto& r : records) {
        out << r.id << ',' << r.sex << ',' << format_g9(r.age) << ',' << format_g9(r.bmi);
        for (double g : r.gb) {
            out << ',' << format_g9(g);
        }
        out << '\n';
    }
}

inline void write_properties(const std::filesystem::path& path, const std::vector<PropertyRecord>& records,
                             const std::string& config_digest = {})
{
    auto out = open_output(path);
    out << artifact_header("properties", config_digest) << '\n';
    write_properties_rows(out, records);
}

/// Parses `id,sex,age,bmi,gb_1..gb_25` rows; errors carry the file line number.
inline std::vector<PropertyRecord> read_properties(std::istream& in, const std::string& source = "<properties>")
{
    LineReader reader(in, source);
    std::string line;
    if (!reader.next(line)) {
        reader.fail("missing header row");
    }
    if (line != properties_csv_header()) {
        reader.fail("header must be " + properties_csv_header());
    }
    std::vector<PropertyRecord> records;
    std::map<std::string, int> seen;
    while (reader.next(line)) {
        const auto cols = split(line, ',');
        if (cols.size() != static_cast<std::size_t>(4 + gb_dims)) {
            reader.fail("expected " + std::to_string(4 + gb_dims) + " columns, found " + std::to_string(cols.size()));
        }
        PropertyRecord r;
        r.id = std::string(trim(cols[0]));
        long long sex = 0;
        if (!parse_int(cols[1], sex) || (sex != 0 && sex != 1)) {
            reader.fail("sex must be 0 or 1");
        }
        r.sex = static_cast<int>(sex);
        if (!parse_double(cols[2], r.age) || !parse_double(cols[3], r.bmi)) {
            reader.fail("age and bmi must be numbers");
        }
        for (int c = 0; c < gb_dims; ++c) {
            if (!parse_double(cols[static_cast<std::size_t>(4 + c)], r.gb[static_cast<std::size_t>(c)])) {
                reader.fail("gb_" + std::to_string(c + 1) + " is not a number");
            }
        }
        try {
            validate_record(r);
        } catch (const ValidationError& e) {
            reader.fail(e.what());
        }
        if (!seen.emplace(r.id, 0).second) {
            reader.fail("duplicate id " + r.id);
        }
        records.push_back(std::move(r));
    }
    return records;
}

inline std::vector<PropertyRecord> read_properties(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_properties(in, path.string());
}

} // namespace gml
} // namespace facematch

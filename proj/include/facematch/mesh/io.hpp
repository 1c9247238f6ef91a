#pragma once

#include "facematch/core/text_io.hpp"
#include "facematch/mesh/triangle_mesh.hpp"

#include <filesystem>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace facematch {
namespace mesh {

namespace detail {

inline Vec3 parse_vertex_line(LineReader& reader, const std::string& line)
{
    std::istringstream ss(line.substr(1));
    std::string a, b, c, extra;
    ss >> a >> b >> c;
    Vec3 v;
    if (!parse_double(a, v.x()) || !parse_double(b, v.y()) || !parse_double(c, v.z()) || (ss >> extra)) {
        reader.fail("malformed vertex line");
    }
    return v;
}

inline Face parse_face_line(LineReader& reader, const std::string& line)
{
    std::istringstream ss(line.substr(1));
    Face f{};
    for (int k = 0; k < 3; ++k) {
        std::string tok;
        if (!(ss >> tok)) {
            reader.fail("face line needs three indices");
        }
        // Accept Wavefront "i/t/n" references; only the position index matters.
        tok = tok.substr(0, tok.find('/'));
        long long idx = 0;
        if (!parse_int(tok, idx) || idx < 1) {
            reader.fail("face index must be a positive 1-based integer");
        }
        f[k] = static_cast<int>(idx - 1);
    }
    std::string extra;
    if (ss >> extra) {
        reader.fail("only triangular faces are supported");
    }
    return f;
}

} // namespace detail

/// Reads `v x y z` and `f i j k` lines (other Wavefront records are ignored).
inline TriangleMesh read_obj(std::istream& in, const std::string& source = "<stream>")
{
    LineReader reader(in, source);
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::string line;
    while (reader.next(line)) {
        if (line.rfind("v ", 0) == 0 || line.rfind("v\t", 0) == 0) {
            vertices.push_back(detail::parse_vertex_line(reader, line));
        } else if (line.rfind("f ", 0) == 0 || line.rfind("f\t", 0) == 0) {
            faces.push_back(detail::parse_face_line(reader, line));
        }
    }
    for (const auto& f : faces) {
        for (int v : f) {
            if (v >= static_cast<int>(vertices.size()) && !vertices.empty()) {
                throw ValidationError(source + ": face index exceeds vertex count");
            }
        }
    }
    return make_mesh(std::move(vertices), std::move(faces));
}

inline TriangleMesh read_obj(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_obj(in, path.string());
}

inline std::vector<Face> read_topology(const std::filesystem::path& path)
{
    auto mesh = read_obj(path);
    if (mesh.faces.empty()) {
        throw ValidationError(path.string() + ": topology file has no faces");
    }
    return mesh.faces;
}

inline std::vector<Vec3> read_vertices(const std::filesystem::path& path)
{
    auto mesh = read_obj(path);
    return mesh.vertices;
}

inline void write_vertex_lines(std::ostream& out, const std::vector<Vec3>& vertices)
{
    for (const auto& v : vertices) {
        out << "v " << format_g9(v.x()) << ' ' << format_g9(v.y()) << ' ' << format_g9(v.z()) << '\n';
    }
}

inline void write_face_lines(std::ostream& out, const std::vector<Face>& faces)
{
    for (const auto& f : faces) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
}

inline void write_topology(const std::filesystem::path& path, const std::vector<Face>& faces,
                           const std::string& config_digest = {})
{
    auto out = open_output(path);
    out << artifact_header("topology", config_digest) << '\n';
    write_face_lines(out, faces);
}

inline void write_vertices(const std::filesystem::path& path, const std::vector<Vec3>& vertices,
                           const std::string& config_digest = {})
{
    auto out = open_output(path);
    out << artifact_header("vertices", config_digest) << '\n';
    write_vertex_lines(out, vertices);
}

inline void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh, const std::string& config_digest = {})
{
    auto out = open_output(path);
    out << artifact_header("mesh", config_digest) << '\n';
    write_vertex_lines(out, mesh.vertices);
    write_face_lines(out, mesh.faces);
}

} // namespace mesh
} // namespace facematch

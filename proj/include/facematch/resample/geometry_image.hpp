#pragma once

#include "facematch/core/error.hpp"
#include "facematch/core/log.hpp"
#include "facematch/core/text_io.hpp"
#include "facematch/mesh/triangle_mesh.hpp"
#include "facematch/resample/conformal_map.hpp"
#include "facematch/resample/hierarchy.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace facematch {
namespace resample {

inline constexpr int default_grid_size = 128;

/// G x G samples of a surface over the unit square; pixel (x, y) has its
/// center at UV ((x + 0.5) / G, (y + 0.5) / G) and is stored at y * G + x.
struct GeometryImage
{
    int grid_size = 0;
    std::vector<Vec3> grid;
    std::vector<std::uint8_t> valid_mask;

    bool valid(int x, int y) const { return valid_mask[index(x, y)] != 0; }
    const Vec3& at(int x, int y) const { return grid[index(x, y)]; }
    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(grid_size) + static_cast<std::size_t>(x);
    }
    int valid_count() const { return static_cast<int>(std::count(valid_mask.begin(), valid_mask.end(), 1)); }
};

inline Vec2 pixel_center(int x, int y, int grid_size)
{
    return Vec2((x + 0.5) / grid_size, (y + 0.5) / grid_size);
}

/// Barycentric coordinates of p in triangle (a, b, c); degenerate triangles give NaN.
inline std::array<double, 3> barycentric(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c)
{
    const double area = mesh::signed_area(a, b, c);
    if (area == 0.0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan, nan};
    }
    const double l0 = mesh::signed_area(p, b, c) / area;
    const double l1 = mesh::signed_area(a, p, c) / area;
    return {l0, l1, 1.0 - l0 - l1};
}

/// Pixel-to-triangle assignment of a UV layout, reusable for every subject
/// sharing the template topology.
struct RasterMap
{
    int grid_size = 0;
    int num_vertices = 0;
    /// Face index per pixel, -1 when the pixel center lies outside all triangles.
    std::vector<int> face;
    std::vector<std::array<double, 3>> weights;
};

inline RasterMap build_raster_map(const UvEmbedding& uv, const std::vector<Face>& faces, int grid_size)
{
    if (grid_size < 2) {
        throw ValidationError("rasterize: grid size must be at least 2");
    }
    constexpr double inside_tol = 1e-12;
    RasterMap map;
    map.grid_size = grid_size;
    map.num_vertices = uv.size();
    const std::size_t pixels = static_cast<std::size_t>(grid_size) * static_cast<std::size_t>(grid_size);
    map.face.assign(pixels, -1);
    map.weights.assign(pixels, {0.0, 0.0, 0.0});
    const double g = grid_size;
    for (int fi = 0; fi < static_cast<int>(faces.size()); ++fi) {
        const auto& f = faces[static_cast<std::size_t>(fi)];
        const Vec2& a = uv.uv[static_cast<std::size_t>(f[0])];
        const Vec2& b = uv.uv[static_cast<std::size_t>(f[1])];
        const Vec2& c = uv.uv[static_cast<std::size_t>(f[2])];
        const double umin = std::min({a.x(), b.x(), c.x()});
        const double umax = std::max({a.x(), b.x(), c.x()});
        const double vmin = std::min({a.y(), b.y(), c.y()});
        const double vmax = std::max({a.y(), b.y(), c.y()});
        const int x0 = std::max(0, static_cast<int>(std::floor(umin * g - 0.5)));
        const int x1 = std::min(grid_size - 1, static_cast<int>(std::ceil(umax * g - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::floor(vmin * g - 0.5)));
        const int y1 = std::min(grid_size - 1, static_cast<int>(std::ceil(vmax * g - 0.5)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const std::size_t idx = static_cast<std::size_t>(y) * grid_size + static_cast<std::size_t>(x);
                if (map.face[idx] >= 0) {
                    continue;
                }
                const auto w = barycentric(pixel_center(x, y, grid_size), a, b, c);
                if (w[0] >= -inside_tol && w[1] >= -inside_tol && w[2] >= -inside_tol) {
                    map.face[idx] = fi;
                    map.weights[idx] = w;
                }
            }
        }
    }
    return map;
}

inline GeometryImage apply_raster_map(const RasterMap& map, const std::vector<Face>& faces, const std::vector<Vec3>& vertices)
{
    if (static_cast<int>(vertices.size()) != map.num_vertices) {
        throw ValidationError("rasterize: vertex count " + std::to_string(vertices.size()) +
                              " does not match the raster map (" + std::to_string(map.num_vertices) + ")");
    }
    GeometryImage img;
    img.grid_size = map.grid_size;
    img.grid.assign(map.face.size(), Vec3::Zero());
    img.valid_mask.assign(map.face.size(), 0);
    for (std::size_t p = 0; p < map.face.size(); ++p) {
        const int fi = map.face[p];
        if (fi < 0) {
            continue;
        }
        const auto& f = faces[static_cast<std::size_t>(fi)];
        const auto& w = map.weights[p];
        img.grid[p] = w[0] * vertices[static_cast<std::size_t>(f[0])] + w[1] * vertices[static_cast<std::size_t>(f[1])] +
                      w[2] * vertices[static_cast<std::size_t>(f[2])];
        img.valid_mask[p] = 1;
    }
    return img;
}

/// Samples the mesh surface at every pixel center through its UV layout.
inline GeometryImage rasterize_geometry_image(const UvEmbedding& uv, const TriangleMesh& m, int grid_size = default_grid_size)
{
    if (uv.size() != m.num_vertices()) {
        throw ValidationError("rasterize_geometry_image: embedding and mesh vertex counts differ");
    }
    return apply_raster_map(build_raster_map(uv, m.faces, grid_size), m.faces, m.vertices);
}

struct ImageSample
{
    Vec3 position = Vec3::Zero();
    bool fallback = false;
};

/// Bilinear lookup at a UV; falls back to the nearest valid pixel when any of
/// the four surrounding pixels is invalid.
inline ImageSample sample_bilinear(const GeometryImage& img, const Vec2& uv)
{
    const int g = img.grid_size;
    const double fx = std::clamp(uv.x() * g - 0.5, 0.0, static_cast<double>(g - 1));
    const double fy = std::clamp(uv.y() * g - 0.5, 0.0, static_cast<double>(g - 1));
    const int x0 = std::min(static_cast<int>(std::floor(fx)), g - 2);
    const int y0 = std::min(static_cast<int>(std::floor(fy)), g - 2);
    const double tx = fx - x0;
    const double ty = fy - y0;
    if (img.valid(x0, y0) && img.valid(x0 + 1, y0) && img.valid(x0, y0 + 1) && img.valid(x0 + 1, y0 + 1)) {
        const Vec3 bottom = (1.0 - tx) * img.at(x0, y0) + tx * img.at(x0 + 1, y0);
        const Vec3 top = (1.0 - tx) * img.at(x0, y0 + 1) + tx * img.at(x0 + 1, y0 + 1);
        return {(1.0 - ty) * bottom + ty * top, false};
    }
    double best = std::numeric_limits<double>::infinity();
    ImageSample out;
    out.fallback = true;
    for (int y = 0; y < g; ++y) {
        for (int x = 0; x < g; ++x) {
            if (!img.valid(x, y)) {
                continue;
            }
            const double d = (x - fx) * (x - fx) + (y - fy) * (y - fy);
            if (d < best) {
                best = d;
                out.position = img.at(x, y);
            }
        }
    }
    if (!std::isfinite(best)) {
        throw ValidationError("reconstruct_shape: geometry image has no valid pixels");
    }
    return out;
}

struct Reconstruction
{
    TriangleMesh mesh;
    int fallback_count = 0;
};

/// Resamples the geometry image at the UVs of one hierarchy level.
inline Reconstruction reconstruct_shape(const GeometryImage& img, const MeshHierarchy& h, int level)
{
    const auto& l = h.level(level);
    Reconstruction r;
    std::vector<Vec3> vertices;
    vertices.reserve(l.uv.size());
    for (const auto& p : l.uv) {
        const auto s = sample_bilinear(img, p);
        r.fallback_count += s.fallback ? 1 : 0;
        vertices.push_back(s.position);
    }
    if (r.fallback_count > 0) {
        log_warning("reconstruct_shape: " + std::to_string(r.fallback_count) +
                    " vertices fell back to the nearest valid pixel");
    }
    r.mesh = mesh::make_mesh(std::move(vertices), l.faces);
    return r;
}

// Geometry image file: one text header line, then G*G*3 little-endian
// float32 values (x, y, z per pixel, row-major), then a G*G validity bitmap
// packed LSB-first.

inline void write_geometry_image(const std::filesystem::path& path, const GeometryImage& img, std::string_view config_digest)
{
    static_assert(std::endian::native == std::endian::little, "geometry image files are little-endian");
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << artifact_header("geometry_image", config_digest) << " G=" << img.grid_size << " channels=xyz\n";
    std::vector<float> values;
    values.reserve(img.grid.size() * 3);
    for (const auto& p : img.grid) {
        values.push_back(static_cast<float>(p.x()));
        values.push_back(static_cast<float>(p.y()));
        values.push_back(static_cast<float>(p.z()));
    }
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
    std::vector<std::uint8_t> bits((img.valid_mask.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < img.valid_mask.size(); ++i) {
        if (img.valid_mask[i]) {
            bits[i / 8] = static_cast<std::uint8_t>(bits[i / 8] | (1u << (i % 8)));
        }
    }
    out.write(reinterpret_cast<const char*>(bits.data()), static_cast<std::streamsize>(bits.size()));
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

inline GeometryImage read_geometry_image(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    std::string header;
    std::getline(in, header);
    const std::string prefix = "# facematch geometry_image v";
    if (header.rfind(prefix, 0) != 0) {
        throw ParseError(path.string(), 1, "not a geometry image file");
    }
    const auto fields = split(header, ' ');
    GeometryImage img;
    bool has_channels = false;
    for (const auto& f : fields) {
        long long g = 0;
        if (f.rfind("G=", 0) == 0 && parse_int(f.substr(2), g)) {
            img.grid_size = static_cast<int>(g);
        }
        if (f == "channels=xyz") {
            has_channels = true;
        }
    }
    if (img.grid_size < 2 || img.grid_size > 1 << 14 || !has_channels) {
        throw ParseError(path.string(), 1, "geometry image header lacks a valid G or channel order");
    }
    const std::size_t pixels = static_cast<std::size_t>(img.grid_size) * static_cast<std::size_t>(img.grid_size);
    std::vector<float> values(pixels * 3);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
    std::vector<std::uint8_t> bits((pixels + 7) / 8);
    in.read(reinterpret_cast<char*>(bits.data()), static_cast<std::streamsize>(bits.size()));
    if (!in) {
        throw ParseError(path.string(), 1, "geometry image payload is truncated");
    }
    img.grid.resize(pixels);
    img.valid_mask.resize(pixels);
    for (std::size_t i = 0; i < pixels; ++i) {
        img.grid[i] = Vec3(values[3 * i], values[3 * i + 1], values[3 * i + 2]);
        img.valid_mask[i] = static_cast<std::uint8_t>((bits[i / 8] >> (i % 8)) & 1u);
    }
    return img;
}

} // namespace resample
} // namespace facematch

#pragma once

#include "facematch/core/error.hpp"
#include "facematch/mesh/triangle_mesh.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <vector>

namespace facematch {
namespace spiral {

using mesh::Face;

/**
 * Per-vertex spiral sequences of a fixed topology.
 *
 * Row i starts with i, followed by its 1-ring and then its 2-ring; rows are
 * padded to a common length with pad_index (== number of vertices), which
 * reads as a zero feature row.
 */
struct SpiralIndexTable
{
    int num_vertices = 0;
    int length = 0;
    int pad_index = 0;
    /// num_vertices x length entries, row-major.
    std::vector<int> indices;

    int at(int vertex, int position) const
    {
        return indices[static_cast<std::size_t>(vertex) * static_cast<std::size_t>(length) + static_cast<std::size_t>(position)];
    }
    std::vector<int> row(int vertex) const
    {
        const auto begin = indices.begin() + static_cast<std::ptrdiff_t>(vertex) * length;
        return {begin, begin + length};
    }
    /// Row without its padding.
    std::vector<int> sequence(int vertex) const
    {
        auto r = row(vertex);
        r.erase(std::find(r.begin(), r.end(), pad_index), r.end());
        return r;
    }
    friend bool operator==(const SpiralIndexTable&, const SpiralIndexTable&) = default;
};

namespace detail {

/// Neighbors of one vertex in rotational (face-winding) order. For a vertex on
/// the boundary the fan is open and `closed` is false; the list then runs from
/// one boundary end to the other.
struct Fan
{
    std::vector<int> order;
    bool closed = true;
};

inline std::vector<Fan> vertex_fans(int num_vertices, const std::vector<Face>& faces)
{
    std::vector<std::map<int, int>> next(static_cast<std::size_t>(num_vertices));
    for (const auto& f : faces) {
        for (int k = 0; k < 3; ++k) {
            next[static_cast<std::size_t>(f[k])][f[(k + 1) % 3]] = f[(k + 2) % 3];
        }
    }
    std::vector<Fan> fans(static_cast<std::size_t>(num_vertices));
    for (int v = 0; v < num_vertices; ++v) {
        const auto& nx = next[static_cast<std::size_t>(v)];
        if (nx.empty()) {
            continue;
        }
        std::map<int, int> has_prev;
        for (const auto& [a, b] : nx) {
            ++has_prev[b];
        }
        int start = -1;
        for (const auto& [a, b] : nx) {
            if (has_prev.find(a) == has_prev.end()) {
                start = start < 0 ? a : std::min(start, a);
            }
        }
        Fan& fan = fans[static_cast<std::size_t>(v)];
        fan.closed = start < 0;
        if (fan.closed) {
            start = nx.begin()->first;
        }
        int u = start;
        while (true) {
            fan.order.push_back(u);
            const auto it = nx.find(u);
            if (it == nx.end() || it->second == start) {
                break;
            }
            if (fan.order.size() > nx.size() + 1) {
                throw ValidationError("build_spirals: vertex " + std::to_string(v) + " has a non-manifold fan");
            }
            u = it->second;
        }
    }
    return fans;
}

/// Fan of v read in direction `dir` (+1 winding order, -1 reversed), starting
/// at `from`; on an open fan the part before `from` follows the part after it.
inline std::vector<int> walk_from(const Fan& fan, int from, int dir)
{
    std::vector<int> order = fan.order;
    if (dir < 0) {
        std::reverse(order.begin(), order.end());
    }
    const auto it = std::find(order.begin(), order.end(), from);
    if (it == order.end()) {
        return order;
    }
    std::rotate(order.begin(), it, order.end());
    return order;
}

} // namespace detail

/**
 * Builds two-hop spirals: the center, its 1-ring in winding order starting at
 * the lowest-index neighbor, then the 2-ring.
 *
 * For open (boundary) fans the 1-ring starts at the lower-index fan end and is
 * read toward the other end. The 2-ring visits 1-ring vertices starting with
 * the last one and, around each, appends unseen vertices in the same
 * rotational sense, starting next to the center.
 */
inline SpiralIndexTable build_spirals(int num_vertices, const std::vector<Face>& faces)
{
    if (num_vertices <= 0) {
        throw ValidationError("build_spirals: empty topology");
    }
    const auto fans = detail::vertex_fans(num_vertices, faces);
    std::vector<std::vector<int>> rows(static_cast<std::size_t>(num_vertices));
    std::vector<int> stamp(static_cast<std::size_t>(num_vertices), -1);
    std::size_t longest = 1;
    for (int c = 0; c < num_vertices; ++c) {
        const auto& fan = fans[static_cast<std::size_t>(c)];
        std::vector<int>& seq = rows[static_cast<std::size_t>(c)];
        seq.push_back(c);
        stamp[static_cast<std::size_t>(c)] = c;
        if (fan.order.empty()) {
            continue;
        }
        int dir = 1;
        std::vector<int> ring;
        if (fan.closed) {
            const int first = *std::min_element(fan.order.begin(), fan.order.end());
            ring = detail::walk_from(fan, first, 1);
        } else {
            dir = fan.order.front() <= fan.order.back() ? 1 : -1;
            ring = fan.order;
            if (dir < 0) {
                std::reverse(ring.begin(), ring.end());
            }
        }
        for (int r : ring) {
            seq.push_back(r);
            stamp[static_cast<std::size_t>(r)] = c;
        }
        std::vector<int> visit;
        visit.push_back(ring.back());
        visit.insert(visit.end(), ring.begin(), ring.end() - 1);
        for (int r : visit) {
            for (int w : detail::walk_from(fans[static_cast<std::size_t>(r)], c, dir)) {
                if (stamp[static_cast<std::size_t>(w)] != c) {
                    stamp[static_cast<std::size_t>(w)] = c;
                    seq.push_back(w);
                }
            }
        }
        longest = std::max(longest, seq.size());
    }
    SpiralIndexTable t;
    t.num_vertices = num_vertices;
    t.length = static_cast<int>(longest);
    t.pad_index = num_vertices;
    t.indices.assign(static_cast<std::size_t>(num_vertices) * longest, t.pad_index);
    for (int v = 0; v < num_vertices; ++v) {
        std::copy(rows[static_cast<std::size_t>(v)].begin(), rows[static_cast<std::size_t>(v)].end(),
                  t.indices.begin() + static_cast<std::ptrdiff_t>(v) * t.length);
    }
    return t;
}

inline SpiralIndexTable build_spirals(const mesh::TriangleMesh& m)
{
    const auto report = mesh::validate_topology(m);
    if (!report.out_of_range_faces.empty() || !report.degenerate_faces.empty() || !report.non_manifold_edges.empty() ||
        !report.winding_violations.empty()) {
        throw ValidationError("build_spirals: topology is not a consistently wound manifold");
    }
    return build_spirals(m.num_vertices(), m.faces);
}

} // namespace spiral
} // namespace facematch

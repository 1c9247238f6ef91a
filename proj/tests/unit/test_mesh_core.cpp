#include "facematch/mesh/io.hpp"
#include "facematch/mesh/procrustes.hpp"
#include "facematch/mesh/symmetry.hpp"
#include "facematch/mesh/triangle_mesh.hpp"
#include "facematch/resample/hierarchy.hpp"

#include "test_meshes.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <random>
#include <set>
#include <sstream>

using namespace facematch;
using namespace facematch::mesh;

namespace {

/// Brute-force edge count: every unordered vertex pair that shares a face.
int brute_force_edge_count(const TriangleMesh& m)
{
    int count = 0;
    for (int a = 0; a < m.num_vertices(); ++a) {
        for (int b = a + 1; b < m.num_vertices(); ++b) {
            for (const auto& f : m.faces) {
                const bool has_a = f[0] == a || f[1] == a || f[2] == a;
                const bool has_b = f[0] == b || f[1] == b || f[2] == b;
                if (has_a && has_b) {
                    ++count;
                    break;
                }
            }
        }
    }
    return count;
}

TriangleMesh bumpy_template(std::mt19937& rng)
{
    auto m = fixtures::grid_mesh(6, 5);
    std::normal_distribution<double> n(0.0, 0.1);
    for (auto& v : m.vertices) {
        v.z() = std::sin(3.0 * v.x()) * std::cos(2.0 * v.y()) + n(rng);
        v *= 40.0;
    }
    return m;
}

// Horn's quaternion solution for the rotation taking a onto b (both centered).
Eigen::Matrix3d horn_rotation(const PointMatrix& a, const PointMatrix& b)
{
    const Eigen::Matrix3d s = a.transpose() * b;
    Eigen::Matrix4d n;
    n << s(0, 0) + s(1, 1) + s(2, 2), s(1, 2) - s(2, 1), s(2, 0) - s(0, 2), s(0, 1) - s(1, 0),
        s(1, 2) - s(2, 1), s(0, 0) - s(1, 1) - s(2, 2), s(0, 1) + s(1, 0), s(2, 0) + s(0, 2),
        s(2, 0) - s(0, 2), s(0, 1) + s(1, 0), -s(0, 0) + s(1, 1) - s(2, 2), s(1, 2) + s(2, 1),
        s(0, 1) - s(1, 0), s(2, 0) + s(0, 2), s(1, 2) + s(2, 1), -s(0, 0) - s(1, 1) + s(2, 2);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(n);
    const Eigen::Vector4d q = es.eigenvectors().col(3);
    return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
}

double pairwise_procrustes_oracle(const std::vector<TriangleMesh>& meshes)
{
    std::vector<PointMatrix> shapes;
    for (const auto& m : meshes) {
        PointMatrix p = to_matrix(m.vertices);
        p.rowwise() -= p.colwise().mean();
        shapes.push_back(p / std::sqrt(p.squaredNorm()));
    }
    PointMatrix mean = shapes.front();
    for (int it = 0; it < 1000; ++it) {
        for (auto& s : shapes) {
            s = (horn_rotation(s, mean) * s.transpose()).transpose();
        }
        PointMatrix next = PointMatrix::Zero(mean.rows(), 3);
        for (const auto& s : shapes) next += s;
        next /= std::sqrt(next.squaredNorm());
        const double change = (next - mean).norm();
        mean = next;
        if (change < 1e-14) break;
    }
    double r = 0.0;
    for (const auto& s : shapes) r += (s - mean).squaredNorm();
    return r / static_cast<double>(shapes.size());
}

TriangleMesh transformed(const TriangleMesh& m, const Eigen::Matrix3d& r, double scale, const Vec3& t)
{
    TriangleMesh out = m;
    for (auto& v : out.vertices) {
        v = scale * (r * v) + t;
    }
    return out;
}

} // namespace

TEST(ValidateTopology, SingleTriangleIsADisk)
{
    const auto r = validate_topology(fixtures::single_triangle());
    EXPECT_EQ(r.num_vertices, 3);
    EXPECT_EQ(r.num_edges, 3);
    EXPECT_EQ(r.num_faces, 1);
    EXPECT_EQ(r.euler_characteristic, 1);
    EXPECT_TRUE(r.valid());
    EXPECT_EQ(r.boundary_loops, 1);
}

TEST(ValidateTopology, ReportsWindingViolation)
{
    auto m = make_mesh({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)}, {Face{0, 1, 2}, Face{1, 3, 2}});
    EXPECT_TRUE(validate_topology(m).valid());
    m.faces[1] = Face{1, 2, 3}; // edge 1->2 now used in the same direction twice
    const auto r = validate_topology(m);
    ASSERT_EQ(r.winding_violations.size(), 1u);
    EXPECT_EQ(r.winding_violations[0], Edge(1, 2));
    EXPECT_FALSE(r.valid());
}

TEST(ValidateTopology, ReportsNonManifoldAndDegenerateFaces)
{
    auto m = make_mesh({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0), Vec3(1, 1, 1)},
                       {Face{0, 1, 2}, Face{1, 0, 3}, Face{0, 1, 4}, Face{2, 2, 3}, Face{0, 1, 7}});
    const auto r = validate_topology(m);
    EXPECT_EQ(r.non_manifold_edges.size(), 1u);
    EXPECT_EQ(r.degenerate_faces, std::vector<int>{3});
    EXPECT_EQ(r.out_of_range_faces, std::vector<int>{4});
    EXPECT_FALSE(r.valid());
}

TEST(ValidateTopology, LevelOneSubdivisionHasEulerOne)
{
    const auto h = resample::build_hierarchy(Vec2(0.5, 0.5), 1);
    const auto m = resample::level_mesh(h, 1);
    const auto r = validate_topology(m);
    EXPECT_EQ(r.num_vertices, 13);
    EXPECT_EQ(r.num_edges, brute_force_edge_count(m));
    EXPECT_EQ(r.num_edges, 28);
    EXPECT_EQ(r.num_faces, 16);
    EXPECT_EQ(r.euler_characteristic, 1);
    EXPECT_TRUE(r.valid());
}

TEST(KHop, ZeroHopsIsTheVertexItself)
{
    const auto m = fixtures::grid_mesh(4, 4);
    EXPECT_EQ(k_hop_neighborhood(m, 7, 0), std::vector<int>{7});
}

TEST(KHop, TriangleOneHopIsWholeMesh)
{
    const auto m = fixtures::single_triangle();
    for (int v = 0; v < 3; ++v) {
        EXPECT_EQ(k_hop_neighborhood(m, v, 1), (std::vector<int>{0, 1, 2}));
    }
}

TEST(KHop, MatchesBfsOracleOnLevelTwoMesh)
{
    const auto h = resample::build_hierarchy(Vec2(0.4, 0.6), 2);
    const auto m = resample::level_mesh(h, 2);
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> pick(0, m.num_vertices() - 1);
    for (int trial = 0; trial < 20; ++trial) {
        const int v = pick(rng);
        EXPECT_EQ(k_hop_neighborhood(m, v, 2), fixtures::bfs_within(m, v, 2)) << "vertex " << v;
    }
}

TEST(KHop, NestedInHopCount)
{
    const auto h = resample::build_hierarchy(Vec2(0.5, 0.5), 3);
    const auto m = resample::level_mesh(h, 3);
    for (int v : {0, 4, 17, 100}) {
        for (int k = 0; k < 4; ++k) {
            const auto inner = k_hop_neighborhood(m, v, k);
            const auto outer = k_hop_neighborhood(m, v, k + 1);
            EXPECT_TRUE(std::includes(outer.begin(), outer.end(), inner.begin(), inner.end()));
        }
    }
}

TEST(KHop, RejectsBadArguments)
{
    const auto m = fixtures::single_triangle();
    EXPECT_THROW(k_hop_neighborhood(m, 3, 1), ValidationError);
    EXPECT_THROW(k_hop_neighborhood(m, 0, -1), ValidationError);
}

TEST(Procrustes, RotatedCopySuperimposesExactly)
{
    std::mt19937 rng(1);
    const auto m = bumpy_template(rng);
    const Eigen::Matrix3d rz = Eigen::AngleAxisd(EIGEN_PI / 2, Vec3::UnitZ()).toRotationMatrix();
    const auto result = generalized_procrustes({m, transformed(m, rz, 1.0, Vec3::Zero())}, 1e-12, 100);
    ASSERT_TRUE(result.converged);
    double sq = 0.0;
    for (int i = 0; i < m.num_vertices(); ++i) {
        sq += (result.meshes[0].vertices[i] - result.meshes[1].vertices[i]).squaredNorm();
    }
    EXPECT_LT(std::sqrt(sq / m.num_vertices()), 1e-9);
}

TEST(Procrustes, SingleMeshIsCenteredAndUnitScaled)
{
    std::mt19937 rng(2);
    auto m = bumpy_template(rng);
    for (auto& v : m.vertices) v += Vec3(5, -3, 7);
    const auto result = generalized_procrustes({m}, 1e-12, 10);
    const auto p = to_matrix(result.meshes[0].vertices);
    EXPECT_LT(p.colwise().mean().norm(), 1e-12);
    EXPECT_NEAR(p.norm(), 1.0, 1e-12);
    // Same shape up to the similarity: pairwise distances scale uniformly.
    const double s = (m.vertices[3] - m.vertices[0]).norm() / (result.meshes[0].vertices[3] - result.meshes[0].vertices[0]).norm();
    EXPECT_NEAR((m.vertices[10] - m.vertices[7]).norm(),
                s * (result.meshes[0].vertices[10] - result.meshes[0].vertices[7]).norm(), 1e-9);
}

TEST(Procrustes, ResidualMatchesPairwiseOracle)
{
    std::mt19937 rng(5);
    const auto base = bumpy_template(rng);
    std::normal_distribution<double> noise(0.0, 1.5);
    std::uniform_real_distribution<double> angle(-0.6, 0.6);
    std::vector<TriangleMesh> meshes;
    for (int k = 0; k < 5; ++k) {
        TriangleMesh m = base;
        for (auto& v : m.vertices) v += Vec3(noise(rng), noise(rng), noise(rng));
        const Eigen::Matrix3d r = (Eigen::AngleAxisd(angle(rng), Vec3::UnitZ()) *
                                   Eigen::AngleAxisd(angle(rng), Vec3::UnitX()))
                                      .toRotationMatrix();
        meshes.push_back(transformed(m, r, 0.8 + 0.1 * k, Vec3(k, -k, 2.0 * k)));
    }
    const auto result = generalized_procrustes(meshes, 1e-13, 500);
    ASSERT_TRUE(result.converged);
    EXPECT_NEAR(result.residual, pairwise_procrustes_oracle(meshes), 1e-6);
    for (const auto& m : result.meshes) {
        EXPECT_LT(to_matrix(m.vertices).colwise().mean().norm(), 1e-12);
    }
}

TEST(Procrustes, IdempotentAndInvariantToInputSimilarities)
{
    std::mt19937 rng(8);
    const auto base = bumpy_template(rng);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<TriangleMesh> meshes;
    for (int k = 0; k < 4; ++k) {
        TriangleMesh m = base;
        for (auto& v : m.vertices) v += Vec3(noise(rng), noise(rng), noise(rng));
        meshes.push_back(m);
    }
    const double tol = 1e-11;
    const auto once = generalized_procrustes(meshes, tol, 500);
    const auto twice = generalized_procrustes(once.meshes, tol, 500);
    for (std::size_t i = 0; i < meshes.size(); ++i) {
        EXPECT_LT((to_matrix(once.meshes[i].vertices) - to_matrix(twice.meshes[i].vertices)).cwiseAbs().maxCoeff(), 1e-8);
    }

    // Transforming a non-reference input leaves every output unchanged.
    auto moved = meshes;
    const Eigen::Matrix3d r = Eigen::AngleAxisd(1.1, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    moved[2] = transformed(meshes[2], r, 3.5, Vec3(10, 20, -5));
    const auto again = generalized_procrustes(moved, tol, 500);
    for (std::size_t i = 0; i < meshes.size(); ++i) {
        EXPECT_LT((to_matrix(once.meshes[i].vertices) - to_matrix(again.meshes[i].vertices)).cwiseAbs().maxCoeff(), 1e-8);
    }

    // Transforming the reference changes the outputs by one global rotation only.
    moved = meshes;
    moved[0] = transformed(meshes[0], r, 0.2, Vec3(-1, 0, 1));
    const auto rotated = generalized_procrustes(moved, tol, 500);
    const Eigen::Matrix3d g = optimal_rotation(to_matrix(rotated.meshes[0].vertices), to_matrix(once.meshes[0].vertices));
    for (std::size_t i = 0; i < meshes.size(); ++i) {
        const PointMatrix back = to_matrix(rotated.meshes[i].vertices) * g.transpose();
        EXPECT_LT((back - to_matrix(once.meshes[i].vertices)).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(Procrustes, RejectsMixedTopologies)
{
    auto a = fixtures::grid_mesh(2, 2);
    auto b = fixtures::grid_mesh(3, 2);
    EXPECT_THROW(generalized_procrustes({a, b}, 1e-9, 10), ValidationError);
}

TEST(Symmetrize, SymmetricPairUnchanged)
{
    auto m = make_mesh({Vec3(1, 2, 3), Vec3(-1, 2, 3), Vec3(0, 5, 1)}, {Face{0, 1, 2}});
    ReflectionMap map{{1, 0, 2}, Vec3::UnitX()};
    const auto out = symmetrize(m, map);
    for (int i = 0; i < 3; ++i) {
        EXPECT_LT((out.vertices[i] - m.vertices[i]).norm(), 1e-12);
    }
}

TEST(Symmetrize, AveragesAsymmetricPair)
{
    auto m = make_mesh({Vec3(1, 0, 0), Vec3(-2, 0, 0), Vec3(0, 1, 0)}, {Face{0, 1, 2}});
    ReflectionMap map{{1, 0, 2}, Vec3::UnitX()};
    const auto out = symmetrize(m, map);
    EXPECT_LT((out.vertices[0] - Vec3(1.5, 0, 0)).norm(), 1e-15);
    EXPECT_LT((out.vertices[1] - Vec3(-1.5, 0, 0)).norm(), 1e-15);
    EXPECT_LT((out.vertices[2] - Vec3(0, 1, 0)).norm(), 1e-15);
}

TEST(Symmetrize, IdempotentAndCommutesWithReflection)
{
    auto m = fixtures::grid_mesh(4, 3);
    for (auto& v : m.vertices) v.x() -= 0.5; // centre the grid on the mirror plane
    const auto map = find_reflection_map(m, Vec3::UnitX(), 1e-9);
    std::mt19937 rng(4);
    std::normal_distribution<double> n(0.0, 0.05);
    for (auto& v : m.vertices) v += Vec3(n(rng), n(rng), n(rng));

    const auto once = symmetrize(m, map);
    const auto twice = symmetrize(once, map);
    TriangleMesh mirrored = m;
    for (int i = 0; i < m.num_vertices(); ++i) {
        mirrored.vertices[i] = map.reflect(m.vertices[map.pairing[i]]);
    }
    const auto sym_of_mirror = symmetrize(mirrored, map);
    for (int i = 0; i < m.num_vertices(); ++i) {
        EXPECT_LT((once.vertices[i] - twice.vertices[i]).norm(), 1e-12);
        EXPECT_LT((once.vertices[i] - sym_of_mirror.vertices[i]).norm(), 1e-12);
        EXPECT_LT((once.vertices[i] - map.reflect(once.vertices[map.pairing[i]])).norm(), 1e-12);
    }
}

TEST(Symmetrize, RejectsBadPairing)
{
    auto m = fixtures::single_triangle();
    EXPECT_THROW(symmetrize(m, ReflectionMap{{1, 0}, Vec3::UnitX()}), ValidationError);
    EXPECT_THROW(symmetrize(m, ReflectionMap{{1, 2, 0}, Vec3::UnitX()}), ValidationError);
}

TEST(MeshIo, ObjRoundTripAndErrors)
{
    const auto m = fixtures::grid_mesh(2, 2);
    std::stringstream ss;
    write_vertex_lines(ss, m.vertices);
    write_face_lines(ss, m.faces);
    const auto back = read_obj(ss);
    EXPECT_EQ(back.faces, m.faces);
    EXPECT_EQ(back.topology_id, m.topology_id);
    ASSERT_EQ(back.vertices.size(), m.vertices.size());

    std::stringstream bad("v 1 2 3\nv 1 2\n");
    try {
        read_obj(bad, "bad.obj");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::stringstream quad("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
    EXPECT_THROW(read_obj(quad), ParseError);
}

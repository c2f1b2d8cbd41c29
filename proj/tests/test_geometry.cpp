#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "voxsyn/geometry.hpp"

using namespace voxsyn;

namespace {

Pose random_pose(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> a(-3.0, 3.0);
    Pose p;
    p.rotation = rotation_z(a(rng)) * rotation_y(a(rng)) * rotation_x(a(rng));
    p.translation = {a(rng), a(rng), a(rng)};
    return p;
}

double mat_diff(const Mat3& a, const Mat3& b) {
    double m = 0.0;
    for (int i = 0; i < 9; ++i) m = std::max(m, std::abs(a.m[i] - b.m[i]));
    return m;
}

double pose_diff(const Pose& a, const Pose& b) {
    return std::max(mat_diff(a.rotation, b.rotation),
                    (a.translation - b.translation).norm());
}

}  // namespace

TEST_CASE("relative_pose of a pose with itself is the identity") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 20; ++t) {
        const Pose p = random_pose(rng);
        const Pose rel = relative_pose(p, p);
        CHECK(pose_diff(rel, Pose::identity()) < 1e-6);
    }
}

TEST_CASE("relative_pose from identity to a pure rotation is that rotation") {
    Pose target;
    target.rotation = rotation_y(0.7);
    const Pose rel = relative_pose(Pose::identity(), target);
    CHECK(mat_diff(rel.rotation, target.rotation) < 1e-12);
    CHECK(rel.translation.norm() < 1e-12);
}

TEST_CASE("relative_pose composed with the source reproduces the target") {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 50; ++t) {
        const Pose s = random_pose(rng);
        const Pose g = random_pose(rng);
        const Pose rel = relative_pose(s, g);
        CHECK(pose_diff(compose(rel, s), g) < 1e-6);

        // Pointwise check against independently transformed points.
        std::uniform_real_distribution<double> c(-2.0, 2.0);
        const Vec3 x{c(rng), c(rng), c(rng)};
        const Vec3 via_rel = rel.apply(s.apply(x));
        const Vec3 direct = g.apply(x);
        CHECK((via_rel - direct).norm() < 1e-9);
    }
}

TEST_CASE("invert_pose basics") {
    CHECK(pose_diff(invert_pose(Pose::identity()), Pose::identity()) < 1e-12);

    Pose t;
    t.translation = {1.0, -2.0, 3.0};
    const Pose ti = invert_pose(t);
    CHECK(mat_diff(ti.rotation, Mat3::identity()) < 1e-12);
    CHECK((ti.translation - Vec3{-1.0, 2.0, -3.0}).norm() < 1e-12);
}

TEST_CASE("invert_pose is an involution and a true inverse") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 30; ++t) {
        const Pose p = random_pose(rng);
        CHECK(pose_diff(invert_pose(invert_pose(p)), p) < 1e-6);
        CHECK(pose_diff(compose(invert_pose(p), p), Pose::identity()) < 1e-6);
    }
}

TEST_CASE("project maps the optical axis to the principal point") {
    const Intrinsics k{100.0, 100.0, 64.0, 64.0, 128, 128};
    for (double z : {0.5, 1.0, 7.25}) {
        const Pixel px = project(k, {0.0, 0.0, z});
        CHECK(px.u == doctest::Approx(64.0).epsilon(1e-12));
        CHECK(px.v == doctest::Approx(64.0).epsilon(1e-12));
    }
}

TEST_CASE("project hand example and degenerate depth") {
    const Intrinsics k{100.0, 100.0, 64.0, 64.0, 128, 128};
    const Pixel px = project(k, {1.0, 0.0, 2.0});
    CHECK(px.u == doctest::Approx(114.0).epsilon(1e-12));
    CHECK(px.v == doctest::Approx(64.0).epsilon(1e-12));

    CHECK_THROWS_AS(project(k, {0.0, 0.0, 0.0}), DegenerateDepth);
    CHECK_THROWS_AS(project(k, {1.0, 1.0, -2.0}), DegenerateDepth);
}

TEST_CASE("project inverts unprojection at any valid depth") {
    const Intrinsics k{85.0, 97.0, 30.0, 35.5, 64, 72};
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> uu(0.0, 64.0), vv(0.0, 72.0), zz(2.0, 4.0);
    for (int t = 0; t < 100; ++t) {
        const double u = uu(rng), v = vv(rng), z = zz(rng);
        const Vec3 p{(u - k.cx) / k.fx * z, (v - k.cy) / k.fy * z, z};
        const Pixel px = project(k, p);
        CHECK(px.u == doctest::Approx(u).epsilon(1e-9));
        CHECK(px.v == doctest::Approx(v).epsilon(1e-9));
    }
}

TEST_CASE("frustum_grid center voxel sits on the optical axis at mid depth") {
    const Intrinsics k{50.0, 50.0, 16.0, 16.0, 32, 32};
    const FrustumSpec f{2.0, 4.0, 4};
    // Odd dims put the center voxel's pixel center exactly at (cx, cy).
    const SampleGrid g = frustum_grid(k, f, 5, 31, 31);
    const Vec3 c = g.at(2, 15, 15);
    CHECK(std::abs(c.x) < 1e-12);
    CHECK(std::abs(c.y) < 1e-12);
    CHECK(c.z == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("frustum_grid first slice depth follows the slice-center formula") {
    const Intrinsics k{50.0, 50.0, 16.0, 16.0, 32, 32};
    const FrustumSpec f{2.0, 4.0, 8};
    const SampleGrid g = frustum_grid(k, f, 8, 32, 32);
    CHECK(g.at(0, 0, 0).z == doctest::Approx(2.0 + 0.5 * 2.0 / 8).epsilon(1e-12));
}

TEST_CASE("frustum_grid corner voxel matches a hand-computed ray point") {
    const Intrinsics k{100.0, 80.0, 17.0, 15.0, 32, 30};
    const FrustumSpec f{1.0, 5.0, 2};
    const SampleGrid g = frustum_grid(k, f, 2, 2, 2);
    // Voxel (kd=1, i=0, j=1): pixel center ((1 + 0.5) * 32/2, (0 + 0.5) * 30/2)
    // = (24, 7.5); depth = 1 + (1 + 0.5)/2 * 4 = 4.
    const Vec3 p = g.at(1, 0, 1);
    const double z = 4.0;
    CHECK(p.z == doctest::Approx(z).epsilon(1e-12));
    CHECK(p.x == doctest::Approx((24.0 - 17.0) / 100.0 * z).epsilon(1e-12));
    CHECK(p.y == doctest::Approx((7.5 - 15.0) / 80.0 * z).epsilon(1e-12));
}

TEST_CASE("frustum_grid depth increases with slice; rays are straight lines") {
    const Intrinsics k{42.0, 58.0, 10.0, 12.0, 24, 20};
    const FrustumSpec f{1.5, 6.5, 6};
    const SampleGrid g = frustum_grid(k, f, 6, 10, 12);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 12; ++j)
            for (int kd = 0; kd + 1 < 6; ++kd) {
                const Vec3 a = g.at(kd, i, j);
                const Vec3 b = g.at(kd + 1, i, j);
                CHECK(b.z > a.z);
                // x/z and y/z (pixel direction) must not depend on depth.
                CHECK(a.x / a.z == doctest::Approx(b.x / b.z).epsilon(1e-9));
                CHECK(a.y / a.z == doctest::Approx(b.y / b.z).epsilon(1e-9));
            }
}

TEST_CASE("look_at places the target ahead on the optical axis") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> c(-2.0, 2.0);
    for (int t = 0; t < 30; ++t) {
        const Vec3 eye{c(rng), c(rng), c(rng)};
        const Vec3 at{c(rng), c(rng), c(rng)};
        if ((eye - at).norm() < 1e-3) continue;
        const Pose p = look_at(eye, at);
        CHECK(p.orthonormality_error() < 1e-9);
        const Vec3 cam = p.apply(at);
        CHECK(std::abs(cam.x) < 1e-9);
        CHECK(std::abs(cam.y) < 1e-9);
        CHECK(cam.z == doctest::Approx((eye - at).norm()).epsilon(1e-9));
        // The eye itself maps to the camera origin.
        CHECK(p.apply(eye).norm() < 1e-9);
    }
}

TEST_CASE("CubeFrame index/point mappings invert each other") {
    const CubeFrame cube{{0.3, -0.1, 2.0}, 0.05};
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> c(-1.0, 17.0);
    for (int t = 0; t < 50; ++t) {
        const double jx = c(rng), iy = c(rng), kz = c(rng);
        const Vec3 p = cube.index_to_point(jx, iy, kz, 16, 16, 16);
        const Vec3 idx = cube.point_to_index(p, 16, 16, 16);
        CHECK(idx.x == doctest::Approx(jx).epsilon(1e-12));
        CHECK(idx.y == doctest::Approx(iy).epsilon(1e-12));
        CHECK(idx.z == doctest::Approx(kz).epsilon(1e-12));
    }
    // The center index maps to the cube center.
    const Vec3 mid = cube.index_to_point(7.5, 7.5, 7.5, 16, 16, 16);
    CHECK((mid - cube.center).norm() < 1e-12);
}

TEST_CASE("rotation helpers are orthonormal and compose to valid poses") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> a(-3.0, 3.0);
    for (int t = 0; t < 20; ++t) {
        Pose p;
        p.rotation = rotation_x(a(rng)) * rotation_z(a(rng));
        CHECK(p.orthonormality_error() < 1e-9);
        CHECK(p.rotation.det() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

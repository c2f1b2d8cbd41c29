#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "voxsyn/errors.hpp"
#include "voxsyn/metrics.hpp"
#include "voxsyn/scene_io.hpp"

using namespace voxsyn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& n) const { return (path / n).string(); }
};

std::string read_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), {});
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
}

Image random_image(int c, int h, int w, uint64_t seed) {
    Image img(c, h, w);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> byte(0, 255);
    for (auto& v : img.data) v = byte(rng) / 255.0;
    return img;
}

const char* kMinimalManifest =
    "# comment line\n"
    "intrinsics 40 40 8 8 16 16\n"
    "frustum 2 4 8\n"
    "voxel_size 0.1\n"
    "view v0 img0.ppm\n"
    "pose 1 0 0 0 0 1 0 0 0 0 1 3 0 0 0 1\n";

}  // namespace

TEST_CASE("minimal one-view manifest loads") {
    TempDir dir("voxsyn_manifest_min");
    write_ppm(Image(3, 16, 16), dir.file("img0.ppm"));
    write_text(dir.file("scene.manifest"), kMinimalManifest);

    const SceneManifest m = load_manifest(dir.file("scene.manifest"));
    REQUIRE(m.views.size() == 1);
    CHECK(m.views[0].id == "v0");
    CHECK(m.intrinsics.fx == 40.0);
    CHECK(m.intrinsics.width == 16);
    CHECK(m.frustum.depth_slices == 8);
    CHECK(m.voxel_size == 0.1);
    CHECK(m.views[0].pose.translation.z == 3.0);
}

TEST_CASE("manifest with a non-orthonormal rotation names the view") {
    TempDir dir("voxsyn_manifest_badpose");
    write_ppm(Image(3, 16, 16), dir.file("img0.ppm"));
    std::string bad = kMinimalManifest;
    bad.replace(bad.find("pose 1 0 0"), 10, "pose 2 0 0");
    write_text(dir.file("scene.manifest"), bad);
    try {
        load_manifest(dir.file("scene.manifest"));
        FAIL("expected InvalidPose");
    } catch (const InvalidPose& e) {
        CHECK(std::string(e.what()).find("v0") != std::string::npos);
    }
}

TEST_CASE("manifest referencing a missing image fails") {
    TempDir dir("voxsyn_manifest_noimg");
    write_text(dir.file("scene.manifest"), kMinimalManifest);
    CHECK_THROWS_AS(load_manifest(dir.file("scene.manifest")), MissingImage);
}

TEST_CASE("malformed manifest lines raise ParseError") {
    TempDir dir("voxsyn_manifest_parse");
    write_ppm(Image(3, 16, 16), dir.file("img0.ppm"));
    write_text(dir.file("scene.manifest"), "intrinsics 40 forty 8 8 16 16\n");
    CHECK_THROWS_AS(load_manifest(dir.file("scene.manifest")), ParseError);

    write_text(dir.file("scene.manifest"), std::string(kMinimalManifest) + "view v0 img0.ppm\npose 1 0 0 0 0 1 0 0 0 0 1 3 0 0 0 1\n");
    CHECK_THROWS_AS(load_manifest(dir.file("scene.manifest")), ParseError);  // duplicate id

    CHECK_THROWS_AS(load_manifest(dir.file("nope.manifest")), IoError);
}

TEST_CASE("write_manifest then load_manifest is semantically identity") {
    TempDir dir("voxsyn_manifest_rt");
    SceneManifest m;
    m.intrinsics = {96.5, 97.25, 31.75, 32.5, 64, 64};
    m.frustum = {2.125, 4.375, 48};
    m.voxel_size = 0.017;
    const std::vector<Pose> poses = sample_sphere_poses(3, 3.0, 9);
    for (int i = 0; i < 3; ++i) {
        char id[16], img[16];
        std::snprintf(id, sizeof(id), "v%d", i);
        std::snprintf(img, sizeof(img), "im%d.ppm", i);
        write_ppm(Image(3, 64, 64), dir.file(img));
        m.views.push_back({id, poses[i], img});
    }
    write_manifest(m, dir.file("scene.manifest"));
    const SceneManifest back = load_manifest(dir.file("scene.manifest"));

    CHECK(back.intrinsics.fx == m.intrinsics.fx);
    CHECK(back.intrinsics.cy == m.intrinsics.cy);
    CHECK(back.frustum.z_far == m.frustum.z_far);
    CHECK(back.voxel_size == m.voxel_size);
    REQUIRE(back.views.size() == m.views.size());
    for (size_t i = 0; i < m.views.size(); ++i) {
        CHECK(back.views[i].id == m.views[i].id);
        CHECK(back.views[i].image_path == m.views[i].image_path);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                CHECK(back.views[i].pose.rotation(r, c) == m.views[i].pose.rotation(r, c));
        CHECK(back.views[i].pose.translation.x == m.views[i].pose.translation.x);
    }
}

TEST_CASE("a 2x2 all-white P6 file has 12 payload bytes of 0xFF") {
    TempDir dir("voxsyn_ppm_white");
    Image img(3, 2, 2);
    for (auto& v : img.data) v = 1.0;
    write_ppm(img, dir.file("w.ppm"));
    const std::string bytes = read_bytes(dir.file("w.ppm"));
    REQUIRE(bytes.size() >= 12);
    const std::string payload = bytes.substr(bytes.size() - 12);
    for (char c : payload) CHECK(static_cast<unsigned char>(c) == 0xFF);
}

TEST_CASE("PPM round-trips bit-exactly") {
    TempDir dir("voxsyn_ppm_rt");
    const Image img = random_image(3, 9, 7, 101);
    write_ppm(img, dir.file("a.ppm"));
    const Image back = read_ppm(dir.file("a.ppm"));
    write_ppm(back, dir.file("b.ppm"));
    CHECK(read_bytes(dir.file("a.ppm")) == read_bytes(dir.file("b.ppm")));
    for (size_t i = 0; i < img.data.size(); ++i)
        CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-12));
}

TEST_CASE("PPM reader rejects bad input") {
    TempDir dir("voxsyn_ppm_bad");
    write_text(dir.file("bad.ppm"), "P5 2 2 255 xxxx");
    CHECK_THROWS_AS(read_ppm(dir.file("bad.ppm")), UnsupportedFormat);

    write_text(dir.file("trunc.ppm"), "P6\n4 4\n255\nshort");
    CHECK_THROWS_AS(read_ppm(dir.file("trunc.ppm")), CorruptHeader);

    CHECK_THROWS_AS(read_ppm(dir.file("missing.ppm")), IoError);
}

TEST_CASE("generate_scene sphere volume matches the analytic count") {
    ProceduralSpec spec;
    spec.d = spec.h = spec.w = 48;
    spec.voxel_size = 1.0;
    spec.primitives = {{PrimitiveKind::Sphere, {0, 0, 0}, {10.0, 0, 0}, {1, 0, 0}, 0.8}};
    const VoxelGrid vol = generate_scene(spec);
    const size_t occupied = binarize_alpha(vol, 0.05).count();
    const double analytic = 4.0 / 3.0 * M_PI * 1000.0;
    CHECK(std::abs(occupied - analytic) / analytic < 0.05);

    // Outside the primitives alpha is exactly zero (corner voxel).
    CHECK(vol.at(3, 0, 0, 0) == 0.0);
    CHECK(rgba_in_range(vol));

    const VoxelGrid again = generate_scene(spec);
    for (size_t i = 0; i < vol.size(); ++i) CHECK(vol.data[i] == again.data[i]);
}

TEST_CASE("generate_scene resolves overlaps by list order and validates input") {
    ProceduralSpec spec;
    spec.d = spec.h = spec.w = 16;
    spec.voxel_size = 1.0;
    spec.primitives = {{PrimitiveKind::Box, {0, 0, 0}, {4, 4, 4}, {1, 0, 0}, 0.5},
                       {PrimitiveKind::Box, {0, 0, 0}, {2, 2, 2}, {0, 1, 0}, 0.9}};
    const VoxelGrid vol = generate_scene(spec);
    // Center voxel: inner (later) box wins.
    CHECK(vol.at(1, 8, 8, 8) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vol.at(3, 8, 8, 8) == doctest::Approx(0.9).epsilon(1e-12));
    // A voxel only in the outer box keeps the first primitive.
    CHECK(vol.at(0, 8, 8, 11) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vol.at(3, 8, 8, 11) == doctest::Approx(0.5).epsilon(1e-12));

    spec.primitives[0].alpha = 1.5;
    CHECK_THROWS_AS(generate_scene(spec), InvalidRange);
    spec.primitives[0].alpha = 0.5;
    spec.primitives.clear();
    CHECK_THROWS_AS(generate_scene(spec), InvalidRange);
}

TEST_CASE("cylinder primitive respects radius and half-height") {
    ProceduralSpec spec;
    spec.d = spec.h = spec.w = 32;
    spec.voxel_size = 1.0;
    spec.primitives = {{PrimitiveKind::Cylinder, {0, 0, 0}, {6.0, 10.0, 0}, {0, 0, 1}, 0.7}};
    const VoxelGrid vol = generate_scene(spec);
    const size_t occupied = binarize_alpha(vol, 0.05).count();
    const double analytic = M_PI * 36.0 * 20.0;
    CHECK(std::abs(occupied - analytic) / analytic < 0.08);
}

TEST_CASE("sphere pose sampling is seeded and roughly uniform") {
    const auto a = sample_sphere_poses(50, 3.0, 31);
    const auto b = sample_sphere_poses(50, 3.0, 31);
    REQUIRE(a.size() == 50);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].translation.x == b[i].translation.x);
        CHECK(a[i].orthonormality_error() < 1e-9);
        // Camera center (world) sits on the radius-3 sphere and looks at 0.
        const Vec3 eye = a[i].apply_inverse({0, 0, 0});
        CHECK(eye.norm() == doctest::Approx(3.0).epsilon(1e-9));
        CHECK(a[i].apply({0, 0, 0}).z == doctest::Approx(3.0).epsilon(1e-9));
    }
    Vec3 mean{0, 0, 0};
    for (const Pose& p : a) mean = mean + p.apply_inverse({0, 0, 0}) / 3.0;
    CHECK(mean.norm() / 50.0 <= 0.2);
}

TEST_CASE("turntable poses sweep a full circle at fixed elevation") {
    const auto poses = turntable_poses(8, 2.5, 0.4);
    REQUIRE(poses.size() == 8);
    for (const Pose& p : poses) {
        const Vec3 eye = p.apply_inverse({0, 0, 0});
        CHECK(eye.norm() == doctest::Approx(2.5).epsilon(1e-9));
        CHECK(eye.y == doctest::Approx(poses[0].apply_inverse({0, 0, 0}).y).epsilon(1e-9));
    }
    // Distinct azimuths: all pairwise camera distances nonzero.
    for (size_t i = 0; i < poses.size(); ++i)
        for (size_t j = i + 1; j < poses.size(); ++j)
            CHECK((poses[i].apply_inverse({0, 0, 0}) - poses[j].apply_inverse({0, 0, 0})).norm() > 0.1);
}

TEST_CASE("render_dataset writes consumable images plus a manifest") {
    TempDir dir("voxsyn_dataset");
    ProceduralSpec spec;
    spec.d = spec.h = spec.w = 16;
    spec.voxel_size = 1.0 / 16;
    spec.primitives = {{PrimitiveKind::Sphere, {0, 0, 0}, {0.25, 0, 0}, {0.9, 0.4, 0.2}, 0.6}};
    const VoxelGrid vol = generate_scene(spec);

    const Intrinsics k{24.0, 24.0, 8.0, 8.0, 16, 16};
    const FrustumSpec f{2.0, 4.0, 16};
    RenderOptions opts;
    opts.samples_per_ray = 16;
    const SceneManifest m = render_dataset(vol, {look_at({0, 0, -3}, {0, 0, 0})}, k, f,
                                           spec.voxel_size, opts, dir.path.string());
    REQUIRE(m.views.size() == 1);
    CHECK(fs::exists(dir.path / "scene.manifest"));
    CHECK(fs::exists(dir.path / m.views[0].image_path));

    const SceneManifest loaded = load_manifest((dir.path / "scene.manifest").string());
    CHECK(loaded.views.size() == 1);
    const Image img = read_ppm((dir.path / loaded.views[0].image_path).string());
    CHECK(img.h == 16);
    CHECK(img.w == 16);
    // The sphere must darken some pixels below the white background.
    double lo = 1.0;
    for (double v : img.data) lo = std::min(lo, v);
    CHECK(lo < 0.99);
}

#pragma once

// Dataset manifest parsing, image serialization (PPM P6) and a procedural
// scene generator producing analytic ground-truth RGBa volumes.

#include <cstdint>
#include <string>
#include <vector>

#include "voxsyn/geometry.hpp"
#include "voxsyn/image.hpp"
#include "voxsyn/renderer.hpp"
#include "voxsyn/volume.hpp"

namespace voxsyn {

struct View {
    std::string id;
    Pose pose;  // world-to-camera
    std::string image_path;  // relative to the manifest directory
};

struct SceneManifest {
    Intrinsics intrinsics;
    FrustumSpec frustum;
    double voxel_size = 1.0;
    std::vector<View> views;
};

// Line-oriented text format (see docs/formats.md):
//   intrinsics fx fy cx cy width height
//   frustum    z_near z_far depth_slices
//   voxel_size s
//   view <id> <image_path>
//   pose  <16 row-major values of the 4x4 world-to-camera matrix>
// `#` starts a comment.  Validates pose orthonormality and image existence.
SceneManifest load_manifest(const std::string& path);
void write_manifest(const SceneManifest& m, const std::string& path);

// Binary PPM (P6, maxval 255).  Values map to [0, 1] via v / 255; writing
// rounds to the nearest byte, so write(read(f)) is bit-exact.
Image read_ppm(const std::string& path);
void write_ppm(const Image& img, const std::string& path);

// ---------------------------------------------------------------------------
// Procedural scenes

enum class PrimitiveKind { Sphere, Box, Cylinder };

struct Primitive {
    PrimitiveKind kind = PrimitiveKind::Sphere;
    Vec3 center{0, 0, 0};  // world units
    Vec3 size{1, 1, 1};    // sphere: radius in x; box: half-extents; cylinder: radius x, half-height y
    Vec3 rgb{1, 1, 1};
    double alpha = 1.0;
};

struct ProceduralSpec {
    uint64_t seed = 0;
    std::vector<Primitive> primitives;
    int d = 0, h = 0, w = 0;
    double voxel_size = 1.0;
};

// Voxelizes primitives by membership test at voxel centers of a cube
// centered at the world origin; overlapping primitives resolve by list order
// (later wins).  Deterministic for a fixed spec.
VoxelGrid generate_scene(const ProceduralSpec& spec);

// Seeded Marsaglia sampling of camera positions uniformly on a sphere of the
// given radius, each looking at the world origin.
std::vector<Pose> sample_sphere_poses(int n, double radius, uint64_t seed);

// Poses at equally spaced azimuth angles on a circle of `radius` at the
// given elevation (radians), looking at the origin.
std::vector<Pose> turntable_poses(int n, double radius, double elevation = 0.0);

// Renders each pose of the world-frame cube `vol` with the reference
// renderer in matched mode, writes the images plus a manifest under out_dir.
SceneManifest render_dataset(const VoxelGrid& vol, const std::vector<Pose>& poses,
                             const Intrinsics& k, const FrustumSpec& f,
                             double voxel_size, const RenderOptions& opts,
                             const std::string& out_dir);

}  // namespace voxsyn

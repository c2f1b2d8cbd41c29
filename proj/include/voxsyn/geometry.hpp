#pragma once

// Pinhole camera model, rigid world<->camera transforms and the sampling
// grids that connect an axis-aligned voxel cube to a camera viewing frustum.
//
// Conventions (used consistently across the project):
//   - right-handed camera frame, looking along +z, x right, y down
//   - poses are world-to-camera: x_cam = R * x_world + t
//   - pixel (i, j) = (row, col) has its center at (j + 0.5, i + 0.5)
//   - depth slices are uniform in metric depth, sampled at slice centers

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "voxsyn/errors.hpp"

namespace voxsyn {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
};

// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return Mat3{}; }

    double operator()(int r, int c) const { return m[3 * r + c]; }
    double& operator()(int r, int c) { return m[3 * r + c]; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }

    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }

    double det() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) -
               m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }
};

struct Intrinsics {
    double fx = 0.0, fy = 0.0;  // focal lengths in pixels
    double cx = 0.0, cy = 0.0;  // principal point in pixels
    int width = 0, height = 0;

    bool valid() const {
        return fx > 0 && fy > 0 && width > 0 && height > 0 &&
               cx > 0 && cx < width && cy > 0 && cy < height;
    }
};

// Rigid world-to-camera transform: x_cam = R * x_world + t.
struct Pose {
    Mat3 rotation;
    Vec3 translation;

    static Pose identity() { return Pose{}; }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Vec3 apply_inverse(const Vec3& p) const {
        return rotation.transposed() * (p - translation);
    }

    // Deviation of R from orthonormality plus det(R) from +1.
    double orthonormality_error() const;
    bool is_identity() const;
};

struct FrustumSpec {
    double z_near = 0.0;  // t_n
    double z_far = 0.0;   // t_f
    int depth_slices = 0; // d_s

    bool valid() const { return z_near > 0 && z_far > z_near && depth_slices >= 2; }

    // Metric depth of slice center k out of `slices` (defaults to depth_slices).
    double slice_depth(int k, int slices = -1) const {
        int d = slices > 0 ? slices : depth_slices;
        return z_near + (k + 0.5) / d * (z_far - z_near);
    }
};

// Axis-aligned voxel cube embedded in some rigid frame.  Voxel index
// (kd, i, j) maps to the point center + (j - (w-1)/2, i - (h-1)/2,
// kd - (d-1)/2) * voxel_size, i.e. index axes (w, h, d) follow (x, y, z).
struct CubeFrame {
    Vec3 center{0, 0, 0};     // cube center in the embedding frame
    double voxel_size = 1.0;  // world units per voxel

    Vec3 index_to_point(double jx, double iy, double kz, int d, int h, int w) const {
        return {center.x + (jx - (w - 1) * 0.5) * voxel_size,
                center.y + (iy - (h - 1) * 0.5) * voxel_size,
                center.z + (kz - (d - 1) * 0.5) * voxel_size};
    }
    // Continuous voxel-index coordinates (x = w axis, y = h axis, z = d axis).
    Vec3 point_to_index(const Vec3& p, int d, int h, int w) const {
        return {(p.x - center.x) / voxel_size + (w - 1) * 0.5,
                (p.y - center.y) / voxel_size + (h - 1) * 0.5,
                (p.z - center.z) / voxel_size + (d - 1) * 0.5};
    }
};

// Per-output-voxel continuous source coordinates; the single currency all
// resampling operations consume.  Each voxel stores an (x, y, z) triple,
// interpreted either as voxel-index coordinates or camera-space points
// depending on the producing operation.
struct SampleGrid {
    int d = 0, h = 0, w = 0;
    std::vector<double> coords;  // size d*h*w*3, (x, y, z) per voxel

    SampleGrid() = default;
    SampleGrid(int d_, int h_, int w_)
        : d(d_), h(h_), w(w_), coords(static_cast<size_t>(d_) * h_ * w_ * 3) {}

    size_t voxel_count() const { return static_cast<size_t>(d) * h * w; }

    Vec3 at(int kd, int i, int j) const {
        size_t o = ((static_cast<size_t>(kd) * h + i) * w + j) * 3;
        return {coords[o], coords[o + 1], coords[o + 2]};
    }
    void set(int kd, int i, int j, const Vec3& v) {
        size_t o = ((static_cast<size_t>(kd) * h + i) * w + j) * 3;
        coords[o] = v.x;
        coords[o + 1] = v.y;
        coords[o + 2] = v.z;
    }
};

// P_st = P_t * P_s^{-1}: maps source-camera coordinates to target-camera
// coordinates.
Pose relative_pose(const Pose& source, const Pose& target);

Pose invert_pose(const Pose& p);

Pose compose(const Pose& outer, const Pose& inner);  // outer after inner

// Pinhole projection of a camera-space point to pixel coordinates.
// Throws DegenerateDepth if the depth is at or behind the camera plane.
struct Pixel {
    double u = 0.0, v = 0.0;
};
Pixel project(const Intrinsics& k, const Vec3& point_cam);

// Camera-space points of a d x h x w grid covering the viewing frustum:
// voxel (kd, i, j) lies on the ray through the pixel center mapped from
// (j, i) at depth z_near + (kd + 0.5) / d * (z_far - z_near).
SampleGrid frustum_grid(const Intrinsics& k, const FrustumSpec& f, int d, int h, int w);

// Rotation about +y (the vertical image axis) by `radians`.
Mat3 rotation_y(double radians);
Mat3 rotation_x(double radians);
Mat3 rotation_z(double radians);

// World-to-camera pose of a camera at `eye` looking at `at`, with the image
// y axis pointing as close to `down` as possible.
Pose look_at(const Vec3& eye, const Vec3& at, const Vec3& down = {0, 1, 0});

}  // namespace voxsyn

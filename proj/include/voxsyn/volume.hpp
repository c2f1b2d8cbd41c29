#pragma once

// Voxel-grid storage and the resampling kernels: trilinear sampling with a
// zero border, generic grid resampling, inverse projection of 2D feature
// maps, rigid volume transforms, the perspective frustum warp and multi-view
// latent pooling.  All operations are pure (inverse warping, output pulls
// from a read-only input).

#include <string>
#include <vector>

#include "voxsyn/geometry.hpp"
#include "voxsyn/image.hpp"

namespace voxsyn {

// c-channel dense 3D grid, C-order (channel, depth, height, width).
struct VoxelGrid {
    int c = 0, d = 0, h = 0, w = 0;
    std::vector<double> data;

    VoxelGrid() = default;
    VoxelGrid(int c_, int d_, int h_, int w_, double fill = 0.0)
        : c(c_), d(d_), h(h_), w(w_),
          data(static_cast<size_t>(c_) * d_ * h_ * w_, fill) {}

    size_t voxel_count() const { return static_cast<size_t>(d) * h * w; }
    size_t size() const { return data.size(); }

    double at(int ch, int kd, int i, int j) const {
        return data[((static_cast<size_t>(ch) * d + kd) * h + i) * w + j];
    }
    double& at(int ch, int kd, int i, int j) {
        return data[((static_cast<size_t>(ch) * d + kd) * h + i) * w + j];
    }

    bool same_dims(const VoxelGrid& o) const {
        return c == o.c && d == o.d && h == o.h && w == o.w;
    }
    bool all_finite() const;
};

// An RGBa volume is a VoxelGrid with c = 4: channels 0-2 color, channel 3
// opacity, every entry in [0, 1].
inline constexpr int kAlphaChannel = 3;
bool rgba_in_range(const VoxelGrid& vol);

// Trilinear interpolation of the 8 voxel centers surrounding `p` (voxel i
// has its center at coordinate i; p.x indexes w, p.y indexes h, p.z indexes
// d).  Coordinates outside the grid contribute zeros.  Writes grid.c values
// to `out`.
void trilinear_sample(const VoxelGrid& grid, const Vec3& p, double* out);
std::vector<double> trilinear_sample(const VoxelGrid& grid, const Vec3& p);

// out[v] = trilinear_sample(grid, sg[v]); channel count preserved.
VoxelGrid resample(const VoxelGrid& grid, const SampleGrid& sg);

// SampleGrid that pulls, for each output voxel of a d x h x w grid embedded
// in the output frame of `pose` via `dst`, the source-cube index coordinate
// of the same physical point (`pose` maps the source frame to the output
// frame; this is inverse warping).
SampleGrid rigid_sample_grid(const Pose& pose, const CubeFrame& src,
                             const CubeFrame& dst, int d, int h, int w);

// T(P, V): applies the rigid transformation `p` to the volume, rotating about
// the volume center.  Equivalent to resample(vol, rigid_sample_grid(...))
// with centered source and destination cubes of the given voxel size.
VoxelGrid rigid_transform_volume(const VoxelGrid& vol, const Pose& p, double voxel_size);

// General form with explicit cube placements for source and destination.
VoxelGrid rigid_transform_volume(const VoxelGrid& vol, const Pose& p,
                                 const CubeFrame& src, const CubeFrame& dst);

// SampleGrid mapping frustum voxel (kd, i, j) of a d x h x w grid to the
// index coordinates of `cube` (a camera-frame cube holding a source grid of
// src_d x src_h x src_w voxels) at the corresponding camera-space frustum
// point.
SampleGrid perspective_warp_grid(const Intrinsics& k, const FrustumSpec& f,
                                 const CubeFrame& cube, int src_d, int src_h,
                                 int src_w, int d, int h, int w);

// Resamples a camera-aligned cube onto the viewing frustum so that the depth
// axis of the result traverses true camera rays.  Output dims: (vol.d,
// k.height, k.width) unless overridden.
VoxelGrid perspective_warp(const VoxelGrid& vol, const Intrinsics& k,
                           const FrustumSpec& f, const CubeFrame& cube);
VoxelGrid perspective_warp(const VoxelGrid& vol, const Intrinsics& k,
                           const FrustumSpec& f, const CubeFrame& cube,
                           int d, int h, int w);

// Back-projects a 2D c-channel feature map into a camera-frame cube: every
// voxel takes the bilinearly sampled feature at the pixel its center projects
// to, constant along camera rays; zeros where the projection leaves the
// image (or sits at or behind the camera).
VoxelGrid inverse_project(const Image& features, const Intrinsics& k,
                          const CubeFrame& cube, int d, int h, int w);

// Pools per-view latent volumes: aligns every volume to the frame of
// volumes[origin_index] with the relative pose, then takes the elementwise
// mean.  Throws EmptyViewSet on an empty list.
struct PosedVolume {
    VoxelGrid grid;
    Pose pose;
};
VoxelGrid aggregate_latents(const std::vector<PosedVolume>& volumes,
                            size_t origin_index, double voxel_size);

// "VOXL1" container: 16-byte header (magic "VOXL", version 1, dtype 0 =
// float32 LE, 2 reserved bytes, four uint16 LE dims c d h w) followed by
// c*d*h*w float32 LE values in C order.
void write_voxl(const VoxelGrid& vol, const std::string& path);
VoxelGrid read_voxl(const std::string& path);

}  // namespace voxsyn

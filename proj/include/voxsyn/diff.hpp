#pragma once

// Analytic reverse-mode gradients (vector-Jacobian products) for resampling
// and compositing, a finite-difference checker, and the optimizer that fits
// an RGBa volume to multi-view images by minimizing the rendering loss.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "voxsyn/geometry.hpp"
#include "voxsyn/image.hpp"
#include "voxsyn/metrics.hpp"
#include "voxsyn/renderer.hpp"
#include "voxsyn/volume.hpp"

namespace voxsyn {

// dL/d(c, alpha) of the compositor given dL/drgb.  The depth and alpha
// outputs carry no upstream gradient (losses act on rgb only).
VoxelGrid composite_vjp(const VoxelGrid& frustum_vol, const Image& upstream_rgb,
                        const RenderOptions& opts);

// Transpose of the forward resample: scatters every upstream value to the 8
// source neighbors with trilinear weights.  `grid` supplies the source dims.
VoxelGrid resample_vjp(const VoxelGrid& grid, const SampleGrid& sg,
                       const VoxelGrid& upstream);

// Central finite differences of f at x against `analytic`; compares every
// coordinate, or a seeded random subset above max_coords.  Returns the max
// relative error with denominator max(|a|, |b|, 1e-8).
double grad_check(const std::function<double(const VoxelGrid&)>& f,
                  const VoxelGrid& x, const VoxelGrid& analytic, double step,
                  size_t max_coords = 10000, uint64_t seed = 0);

// Unconstrained parameterization of an RGBa volume through a sigmoid.
struct ParamVolume {
    VoxelGrid logits;  // 4-channel

    static ParamVolume constant_init(int d, int h, int w, double alpha0 = 0.05,
                                     double gray = 0.5);
    VoxelGrid value() const;  // elementwise sigmoid, entries in (0, 1)
};

struct OptimConfig {
    double learning_rate = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    int iterations = 500;
    double lambda_ssim = 0.05;
    uint64_t seed = 0;
    Vec3 background{1.0, 1.0, 1.0};
};

struct FitScene {
    Intrinsics intrinsics;
    FrustumSpec frustum;
    double voxel_size = 1.0;
    std::vector<Pose> poses;    // world-to-camera, one per training view
    std::vector<Image> targets; // 3 x height x width each
};

struct LossRow {
    int iteration = 0;
    double l2 = 0.0;
    double ssim_term = 0.0;  // lambda * (1 - ssim)
    double total = 0.0;
};

struct FitResult {
    VoxelGrid volume;  // fitted RGBa cube (world frame, origin-centered)
    std::vector<LossRow> trace;
};

// Adam on ParamVolume logits minimizing mean over views of
// l2 + lambda * (1 - ssim), views rendered with render_view.
// Deterministic given the config.
FitResult fit_volume(const FitScene& scene, int d, int h, int w,
                     const OptimConfig& cfg);

// Finite-difference validation of every differentiable operator; returns
// (operator name, max relative error) pairs.  `corrupt` deliberately breaks
// one VJP so harness failure detection can be exercised.
std::vector<std::pair<std::string, double>> run_gradient_suite(
    uint64_t seed, int size, bool corrupt = false);

}  // namespace voxsyn

#pragma once

// Image losses (L2, SSIM, their weighted combination) and evaluation
// metrics (PSNR, occupancy mIoU, nearest-neighbor occupancy resampling).

#include <array>
#include <vector>

#include "voxsyn/image.hpp"
#include "voxsyn/volume.hpp"

namespace voxsyn {

struct SsimConfig {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;  // L

    double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
    double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
    // Normalized Gaussian taps, sum = 1.
    std::vector<double> kernel() const;
};

// Mean over pixels and channels of the squared difference.
double l2_loss(const Image& a, const Image& b);

// Mean SSIM over valid (fully inside) window positions, per-channel scores
// averaged across channels.  Requires both spatial dims >= window.
double ssim(const Image& a, const Image& b, const SsimConfig& cfg = {});

// SSIM plus its analytic gradient with respect to `a`.
struct SsimResult {
    double value = 0.0;
    Image grad;  // d(ssim)/da, same shape as a
};
SsimResult ssim_with_grad(const Image& a, const Image& b, const SsimConfig& cfg = {});

// l2 + lambda * (1 - ssim).
double render_loss(const Image& pred, const Image& target, double lambda_ssim,
                   const SsimConfig& cfg = {});

// 10 log10(peak^2 / mse), capped at 99 dB for identical images.
double psnr(const Image& a, const Image& b, double peak = 1.0);
double psnr_from_mse(double mse, double peak = 1.0);

struct OccupancyGrid {
    int d = 0, h = 0, w = 0;
    std::vector<uint8_t> occ;

    OccupancyGrid() = default;
    OccupancyGrid(int d_, int h_, int w_)
        : d(d_), h(h_), w(w_), occ(static_cast<size_t>(d_) * h_ * w_, 0) {}

    size_t size() const { return occ.size(); }
    uint8_t at(int kd, int i, int j) const {
        return occ[(static_cast<size_t>(kd) * h + i) * w + j];
    }
    uint8_t& at(int kd, int i, int j) {
        return occ[(static_cast<size_t>(kd) * h + i) * w + j];
    }
    size_t count() const;
};

// Occupied iff alpha > tau (strict).
OccupancyGrid binarize_alpha(const VoxelGrid& vol, double tau);

// |a and b| / |a or b|; 1.0 when both grids are empty.
double miou(const OccupancyGrid& a, const OccupancyGrid& b);

// Nearest-neighbor resampling with half-voxel-center alignment; 2x
// upsampling replicates each voxel into a 2^3 block.
OccupancyGrid occupancy_resample(const OccupancyGrid& g, int d, int h, int w);

}  // namespace voxsyn

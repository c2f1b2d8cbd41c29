#include "voxsyn/renderer.hpp"

#include <cmath>
#include <random>
#include <cstdlib>
#include <sys/mman.h>

#include "voxsyn/errors.hpp"
#include "voxsyn/parallel.hpp"

namespace voxsyn {

namespace {

void validate_alpha(const VoxelGrid& vol, const char* who) {
    if (vol.c != 4)
        throw DimensionMismatch(std::string(who) + ": expected a 4-channel RGBa volume");
    const size_t n = vol.voxel_count();
    const double* a = vol.data.data() + kAlphaChannel * n;
    for (size_t i = 0; i < n; ++i)
        if (!(a[i] >= 0.0 && a[i] <= 1.0))
            throw InvalidRange(std::string(who) + ": alpha outside [0, 1]");
}

RenderedImage make_frame(int h, int w) {
    RenderedImage img;
    img.rgb = Image(3, h, w);
    img.alpha = Image(1, h, w);
    img.depth = Image(1, h, w);
    return img;
}

// Trilinear gather of `count` channels starting at `ch0`, weights computed
// per call.  Zero border.
inline void sample_channels(const VoxelGrid& vol, const Vec3& p, int ch0,
                            int count, double* out) {
    for (int ch = 0; ch < count; ++ch) out[ch] = 0.0;
    if (!(p.x > -1.0 && p.x < vol.w && p.y > -1.0 && p.y < vol.h &&
          p.z > -1.0 && p.z < vol.d))
        return;
    const int x0 = static_cast<int>(std::floor(p.x));
    const int y0 = static_cast<int>(std::floor(p.y));
    const int z0 = static_cast<int>(std::floor(p.z));
    const double fx = p.x - x0, fy = p.y - y0, fz = p.z - z0;
    const double wx[2] = {1.0 - fx, fx};
    const double wy[2] = {1.0 - fy, fy};
    const double wz[2] = {1.0 - fz, fz};
    const size_t plane = vol.voxel_count();
    for (int dz = 0; dz < 2; ++dz) {
        const int z = z0 + dz;
        if (z < 0 || z >= vol.d) continue;
        for (int dy = 0; dy < 2; ++dy) {
            const int y = y0 + dy;
            if (y < 0 || y >= vol.h) continue;
            for (int dx = 0; dx < 2; ++dx) {
                const int x = x0 + dx;
                if (x < 0 || x >= vol.w) continue;
                const double wgt = wz[dz] * wy[dy] * wx[dx];
                if (wgt == 0.0) continue;
                const size_t o = (static_cast<size_t>(z) * vol.h + y) * vol.w + x;
                for (int ch = 0; ch < count; ++ch)
                    out[ch] += wgt * vol.data[(ch0 + ch) * plane + o];
            }
        }
    }
}

}  // namespace

RenderedImage composite(const VoxelGrid& vol, const FrustumSpec& f,
                        const RenderOptions& opts) {
    validate_alpha(vol, "composite");

    const int h = vol.h, w = vol.w, d = vol.d;
    RenderedImage img = make_frame(h, w);
    const size_t plane = vol.voxel_count();
    const size_t slice = static_cast<size_t>(h) * w;
    const double* r = vol.data.data();
    const double* g = r + plane;
    const double* b = g + plane;
    const double* a = b + plane;

    parallel_for(slice, [&](size_t pb, size_t pe) {
    for (size_t p = pb; p < pe; ++p) {
        double T = 1.0;
        double cr = 0.0, cg = 0.0, cb = 0.0, acc = 0.0, zacc = 0.0;
        for (int k = 0; k < d; ++k) {
            const size_t o = k * slice + p;
            const double wgt = T * a[o];
            cr += wgt * r[o];
            cg += wgt * g[o];
            cb += wgt * b[o];
            acc += wgt;
            zacc += wgt * f.slice_depth(k, d);
            T *= 1.0 - a[o];
            if (T == 0.0) break;  // fully occluded; deeper slices contribute exact zeros
        }
        img.rgb.data[p] = cr + T * opts.background.x;
        img.rgb.data[slice + p] = cg + T * opts.background.y;
        img.rgb.data[2 * slice + p] = cb + T * opts.background.z;
        img.alpha.data[p] = acc;
        img.depth.data[p] = acc > 0.0 ? zacc / std::max(acc, 1e-8) : 0.0;
    }
    });
    return img;
}

RenderedImage render_view(const VoxelGrid& vol, const Pose& source_pose,
                          const Pose& target_pose, const Intrinsics& k,
                          const FrustumSpec& f, const CubeFrame& src_cube,
                          const RenderOptions& opts) {
    const Pose rel = relative_pose(source_pose, target_pose);
    const CubeFrame dst_cube{rel.apply(src_cube.center), src_cube.voxel_size};
    const VoxelGrid aligned = rigid_transform_volume(vol, rel, src_cube, dst_cube);
    const VoxelGrid warped =
        perspective_warp(aligned, k, f, dst_cube, f.depth_slices, k.height, k.width);
    return composite(warped, f, opts);
}

RenderedImage reference_render(const VoxelGrid& vol, const Pose& pose,
                               const Intrinsics& k, const FrustumSpec& f,
                               const CubeFrame& cube, const RenderOptions& opts) {
    validate_alpha(vol, "reference_render");
    if (opts.samples_per_ray < 2)
        throw InvalidRange("reference_render: samples_per_ray must be >= 2");

    const int h = k.height, w = k.width, S = opts.samples_per_ray;
    RenderedImage img = make_frame(h, w);
    const Pose inv = invert_pose(pose);
    const double span = f.z_far - f.z_near;
    const double dz = span / S;

    const size_t slice = static_cast<size_t>(h) * w;
    parallel_for(static_cast<size_t>(h), [&](size_t ib, size_t ie) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = static_cast<int>(ib); i < static_cast<int>(ie); ++i) {
        const double diry = (i + 0.5 - k.cy) / k.fy;
        for (int j = 0; j < w; ++j) {
            const double dirx = (j + 0.5 - k.cx) / k.fx;
            // Jitter stream is seeded per pixel so results do not depend on
            // the thread count.
            std::mt19937_64 rng(opts.jitter_seed.value_or(0) ^
                                (static_cast<uint64_t>(i) * w + j) * 0x9e3779b97f4a7c15ull);
            double T = 1.0;
            double cr = 0.0, cg = 0.0, cb = 0.0, acc = 0.0, zacc = 0.0;
            for (int m = 0; m < S; ++m) {
                const double u = opts.jitter_seed ? uni(rng) : 0.5;
                const double z = f.z_near + (m + u) * dz;
                const Vec3 p_cam{dirx * z, diry * z, z};
                const Vec3 idx = cube.point_to_index(inv.apply(p_cam), vol.d, vol.h, vol.w);
                // Color and opacity are sampled independently per point; no
                // quantity computed for this ray is reused by any other ray.
                double col[3];
                sample_channels(vol, idx, 0, 3, col);
                double av;
                sample_channels(vol, idx, kAlphaChannel, 1, &av);
                double alpha_m = av;
                if (opts.mode == RefMode::Density)
                    alpha_m = 1.0 - std::exp(-opts.density_scale * av * dz);
                const double wgt = T * alpha_m;
                cr += wgt * col[0];
                cg += wgt * col[1];
                cb += wgt * col[2];
                acc += wgt;
                zacc += wgt * z;
                T *= 1.0 - alpha_m;
            }
            const size_t p = static_cast<size_t>(i) * w + j;
            img.rgb.data[p] = cr + T * opts.background.x;
            img.rgb.data[slice + p] = cg + T * opts.background.y;
            img.rgb.data[2 * slice + p] = cb + T * opts.background.z;
            img.alpha.data[p] = acc;
            img.depth.data[p] = acc > 0.0 ? zacc / std::max(acc, 1e-8) : 0.0;
        }
    }
    });
    return img;
}

AmortizedRenderer::AmortizedRenderer(const VoxelGrid& vol, const Intrinsics& k,
                                     const FrustumSpec& f, const CubeFrame& cube,
                                     const RenderOptions& opts)
    : vol_(vol), k_(k), f_(f), cube_(cube), opts_(opts),
      packed_(nullptr, [](float*) {}) {
    validate_alpha(vol, "AmortizedRenderer");
    // Per-object preparation shared by every rendered view.
    ray_dirs_.resize(static_cast<size_t>(k.height) * k.width * 2);
    size_t o = 0;
    for (int i = 0; i < k.height; ++i) {
        const double diry = (i + 0.5 - k.cy) / k.fy;
        for (int j = 0; j < k.width; ++j) {
            ray_dirs_[o++] = (j + 0.5 - k.cx) / k.fx;
            ray_dirs_[o++] = diry;
        }
    }
    // The repack adds a one-voxel zero apron on every face, so a trilinear
    // footprint whose corners poke past the grid reads exact zeros instead of
    // needing a boundary-checked slow path.
    const size_t pw = vol.w + 2, ph = vol.h + 2, pd = vol.d + 2;
    const size_t n_padded = pd * ph * pw;
    constexpr size_t kHugePage = size_t{1} << 21;
    const size_t bytes = (n_padded * 4 * sizeof(float) + kHugePage - 1) & ~(kHugePage - 1);
    void* raw = nullptr;
    if (posix_memalign(&raw, kHugePage, bytes) != 0)
        throw std::bad_alloc();
#ifdef MADV_HUGEPAGE
    madvise(raw, bytes, MADV_HUGEPAGE);  // advisory; failure just means 4 KiB pages
#endif
    packed_ = {static_cast<float*>(raw), [](float* q) { std::free(q); }};
    std::fill(packed_.get(), packed_.get() + n_padded * 4, 0.0f);
    const size_t n = vol.voxel_count();
    const double* src = vol.data.data();
    for (int z = 0; z < vol.d; ++z)
        for (int y = 0; y < vol.h; ++y)
            for (int x = 0; x < vol.w; ++x) {
                const size_t v = (static_cast<size_t>(z) * vol.h + y) * vol.w + x;
                const size_t o = ((static_cast<size_t>(z + 1) * ph + (y + 1)) * pw + (x + 1)) * 4;
                for (int ch = 0; ch < 4; ++ch)
                    packed_[o + ch] = static_cast<float>(src[ch * n + v]);
            }
}

RenderedImage AmortizedRenderer::render(const Pose& rel_pose) const {
    const int h = k_.height, w = k_.width, d = f_.depth_slices;
    RenderedImage img = make_frame(h, w);

    // Fused transform: frustum point -> source cube index is affine in the
    // camera point, idx = M p + b with M = R^T / s.
    const Pose inv = invert_pose(rel_pose);
    const double s = cube_.voxel_size;
    const Mat3& R = inv.rotation;
    const Vec3 b0 = cube_.point_to_index(inv.translation, vol_.d, vol_.h, vol_.w);

    const double z0 = f_.slice_depth(0, d);
    const double dz = (f_.z_far - f_.z_near) / d;

    const int W = vol_.w, H = vol_.h, D = vol_.d;
    const size_t sy4 = static_cast<size_t>(W + 2) * 4;           // apron-padded strides
    const size_t sz4 = static_cast<size_t>(H + 2) * (W + 2) * 4;
    const size_t slice = static_cast<size_t>(h) * w;

    const float* pk = packed_.get();
    parallel_for(slice, [&](size_t pb, size_t pe) {
    for (size_t p = pb; p < pe; ++p) {
        const double dx = ray_dirs_[2 * p];
        const double dy = ray_dirs_[2 * p + 1];
        // Direction of the ray in cube-index space; stepping one slice adds
        // step = dz * q to the index coordinate.
        const double qx = (R(0, 0) * dx + R(0, 1) * dy + R(0, 2)) / s;
        const double qy = (R(1, 0) * dx + R(1, 1) * dy + R(1, 2)) / s;
        const double qz = (R(2, 0) * dx + R(2, 1) * dy + R(2, 2)) / s;
        const double ox = b0.x + z0 * qx;
        const double oy = b0.y + z0 * qy;
        const double oz = b0.z + z0 * qz;
        const double stx = dz * qx, sty = dz * qy, stz = dz * qz;

        // Clip the ray against the volume's sampling slab (-1, dim) on each
        // axis.  Slices outside the slab sample exactly zero, so restricting
        // the loop to [m_lo, m_hi] leaves the output bit-identical.
        double m_lo = 0.0, m_hi = d - 1.0;
        const double org[3] = {ox, oy, oz};
        const double stp[3] = {stx, sty, stz};
        const double dim[3] = {static_cast<double>(W), static_cast<double>(H),
                               static_cast<double>(D)};
        for (int ax = 0; ax < 3; ++ax) {
            if (stp[ax] == 0.0) {
                if (!(org[ax] > -1.0 && org[ax] < dim[ax])) m_lo = d;  // miss
                continue;
            }
            double t0 = (-1.0 - org[ax]) / stp[ax];
            double t1 = (dim[ax] - org[ax]) / stp[ax];
            if (t0 > t1) std::swap(t0, t1);
            m_lo = std::max(m_lo, t0);
            m_hi = std::min(m_hi, t1);
        }
        const int m_first = static_cast<int>(std::ceil(std::max(m_lo, 0.0)));
        const int m_last = static_cast<int>(std::floor(std::min(m_hi, d - 1.0)));

        double T = 1.0;
        double ar = 0.0, ag = 0.0, ab = 0.0, acc = 0.0, zacc = 0.0;
        double px = ox + m_first * stx;
        double py = oy + m_first * sty;
        double pz = oz + m_first * stz;
        double z = z0 + m_first * dz;
        for (int m = m_first; m <= m_last; ++m, px += stx, py += sty, pz += stz, z += dz) {
            if (!(px > -1.0 && px < W && py > -1.0 && py < H && pz > -1.0 && pz < D))
                continue;
            // Single-precision trilinear blend on the apron-padded
            // interleaved copy; corners that poke past the grid read exact
            // zeros from the apron, so no boundary branch is needed.  The
            // engine's agreement contract with the reference is 1e-5, far
            // above float rounding.
            const int x0 = static_cast<int>(std::floor(px));
            const int y0 = static_cast<int>(std::floor(py));
            const int zc0 = static_cast<int>(std::floor(pz));
            const size_t base =
                ((static_cast<size_t>(zc0 + 1) * (H + 2) + (y0 + 1)) * (W + 2) + (x0 + 1)) *
                4;
            const float fx = static_cast<float>(px - x0);
            const float fy = static_cast<float>(py - y0);
            const float fz = static_cast<float>(pz - zc0);
            const float w00 = (1 - fz) * (1 - fy);
            const float w01 = (1 - fz) * fy;
            const float w10 = fz * (1 - fy);
            const float w11 = fz * fy;
            const float* g = pk + base;
            float acc4[4];
            for (int ch = 0; ch < 4; ++ch) {
                const float e00 = g[ch] + fx * (g[4 + ch] - g[ch]);
                const float e01 = g[sy4 + ch] + fx * (g[sy4 + 4 + ch] - g[sy4 + ch]);
                const float e10 = g[sz4 + ch] + fx * (g[sz4 + 4 + ch] - g[sz4 + ch]);
                const float e11 =
                    g[sz4 + sy4 + ch] + fx * (g[sz4 + sy4 + 4 + ch] - g[sz4 + sy4 + ch]);
                acc4[ch] = w00 * e00 + w01 * e01 + w10 * e10 + w11 * e11;
            }
            const double sr = acc4[0];
            const double sg = acc4[1];
            const double sb = acc4[2];
            // Lerping values in [0, 1] with nonnegative convex weights cannot
            // exceed the corner range, so sa stays a valid alpha.
            const double sa = acc4[3];
            const double wgt = T * sa;
            ar += wgt * sr;
            ag += wgt * sg;
            ab += wgt * sb;
            acc += wgt;
            zacc += wgt * z;
            T *= 1.0 - sa;
            // Early ray termination: with at most 64 remaining slices and
            // per-slice contributions bounded by T, stopping below 1e-8
            // shifts any output by < 1e-6, well under the engine's 1e-5
            // agreement contract with the reference.
            if (T < 1e-8) break;
        }
        img.rgb.data[p] = ar + T * opts_.background.x;
        img.rgb.data[slice + p] = ag + T * opts_.background.y;
        img.rgb.data[2 * slice + p] = ab + T * opts_.background.z;
        img.alpha.data[p] = acc;
        img.depth.data[p] = acc > 0.0 ? zacc / std::max(acc, 1e-8) : 0.0;
    }
    });
    return img;
}

}  // namespace voxsyn

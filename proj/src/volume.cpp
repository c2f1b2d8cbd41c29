#include "voxsyn/volume.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "voxsyn/errors.hpp"
#include "voxsyn/parallel.hpp"

namespace voxsyn {

bool VoxelGrid::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

bool rgba_in_range(const VoxelGrid& vol) {
    if (vol.c != 4) return false;
    for (double v : vol.data)
        if (!(v >= 0.0 && v <= 1.0)) return false;
    return true;
}

void trilinear_sample(const VoxelGrid& grid, const Vec3& p, double* out) {
    for (int ch = 0; ch < grid.c; ++ch) out[ch] = 0.0;
    // No corner of the 2x2x2 neighborhood is in bounds beyond this margin.
    if (!(p.x > -1.0 && p.x < grid.w && p.y > -1.0 && p.y < grid.h &&
          p.z > -1.0 && p.z < grid.d))
        return;

    const int x0 = static_cast<int>(std::floor(p.x));
    const int y0 = static_cast<int>(std::floor(p.y));
    const int z0 = static_cast<int>(std::floor(p.z));
    const double fx = p.x - x0, fy = p.y - y0, fz = p.z - z0;
    const double wx[2] = {1.0 - fx, fx};
    const double wy[2] = {1.0 - fy, fy};
    const double wz[2] = {1.0 - fz, fz};

    const size_t plane = grid.voxel_count();
    for (int dz = 0; dz < 2; ++dz) {
        const int z = z0 + dz;
        if (z < 0 || z >= grid.d) continue;
        for (int dy = 0; dy < 2; ++dy) {
            const int y = y0 + dy;
            if (y < 0 || y >= grid.h) continue;
            for (int dx = 0; dx < 2; ++dx) {
                const int x = x0 + dx;
                if (x < 0 || x >= grid.w) continue;
                const double wgt = wz[dz] * wy[dy] * wx[dx];
                if (wgt == 0.0) continue;
                size_t o = (static_cast<size_t>(z) * grid.h + y) * grid.w + x;
                for (int ch = 0; ch < grid.c; ++ch)
                    out[ch] += wgt * grid.data[ch * plane + o];
            }
        }
    }
}

std::vector<double> trilinear_sample(const VoxelGrid& grid, const Vec3& p) {
    std::vector<double> out(grid.c);
    trilinear_sample(grid, p, out.data());
    return out;
}

VoxelGrid resample(const VoxelGrid& grid, const SampleGrid& sg) {
    VoxelGrid out(grid.c, sg.d, sg.h, sg.w);
    const size_t n = sg.voxel_count();
    const size_t in_plane = grid.voxel_count();
    parallel_for(n, [&](size_t vb, size_t ve) {
    for (size_t v = vb; v < ve; ++v) {
        const Vec3 p{sg.coords[3 * v], sg.coords[3 * v + 1], sg.coords[3 * v + 2]};
        if (!(p.x > -1.0 && p.x < grid.w && p.y > -1.0 && p.y < grid.h &&
              p.z > -1.0 && p.z < grid.d))
            continue;
        const int x0 = static_cast<int>(std::floor(p.x));
        const int y0 = static_cast<int>(std::floor(p.y));
        const int z0 = static_cast<int>(std::floor(p.z));
        const double fx = p.x - x0, fy = p.y - y0, fz = p.z - z0;
        const bool interior = x0 >= 0 && x0 + 1 < grid.w && y0 >= 0 &&
                              y0 + 1 < grid.h && z0 >= 0 && z0 + 1 < grid.d;
        if (interior) {
            const size_t base = (static_cast<size_t>(z0) * grid.h + y0) * grid.w + x0;
            const size_t sy = grid.w, sz = static_cast<size_t>(grid.h) * grid.w;
            const double w000 = (1 - fz) * (1 - fy) * (1 - fx);
            const double w001 = (1 - fz) * (1 - fy) * fx;
            const double w010 = (1 - fz) * fy * (1 - fx);
            const double w011 = (1 - fz) * fy * fx;
            const double w100 = fz * (1 - fy) * (1 - fx);
            const double w101 = fz * (1 - fy) * fx;
            const double w110 = fz * fy * (1 - fx);
            const double w111 = fz * fy * fx;
            for (int ch = 0; ch < grid.c; ++ch) {
                const double* g = grid.data.data() + ch * in_plane + base;
                out.data[ch * n + v] =
                    w000 * g[0] + w001 * g[1] +
                    w010 * g[sy] + w011 * g[sy + 1] +
                    w100 * g[sz] + w101 * g[sz + 1] +
                    w110 * g[sz + sy] + w111 * g[sz + sy + 1];
            }
        } else {
            const double wx[2] = {1.0 - fx, fx};
            const double wy[2] = {1.0 - fy, fy};
            const double wz[2] = {1.0 - fz, fz};
            for (int dz = 0; dz < 2; ++dz) {
                const int z = z0 + dz;
                if (z < 0 || z >= grid.d) continue;
                for (int dy = 0; dy < 2; ++dy) {
                    const int y = y0 + dy;
                    if (y < 0 || y >= grid.h) continue;
                    for (int dx = 0; dx < 2; ++dx) {
                        const int x = x0 + dx;
                        if (x < 0 || x >= grid.w) continue;
                        const double wgt = wz[dz] * wy[dy] * wx[dx];
                        if (wgt == 0.0) continue;
                        const size_t o = (static_cast<size_t>(z) * grid.h + y) * grid.w + x;
                        for (int ch = 0; ch < grid.c; ++ch)
                            out.data[ch * n + v] += wgt * grid.data[ch * in_plane + o];
                    }
                }
            }
        }
    }
    });
    return out;
}

SampleGrid rigid_sample_grid(const Pose& pose, const CubeFrame& src,
                             const CubeFrame& dst, int d, int h, int w) {
    SampleGrid sg(d, h, w);
    const Pose inv = invert_pose(pose);
    size_t o = 0;
    for (int kd = 0; kd < d; ++kd)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                const Vec3 x_dst = dst.index_to_point(j, i, kd, d, h, w);
                const Vec3 idx = src.point_to_index(inv.apply(x_dst), d, h, w);
                sg.coords[o++] = idx.x;
                sg.coords[o++] = idx.y;
                sg.coords[o++] = idx.z;
            }
    return sg;
}

VoxelGrid rigid_transform_volume(const VoxelGrid& vol, const Pose& p,
                                 const CubeFrame& src, const CubeFrame& dst) {
    const bool same_cube = src.center.x == dst.center.x &&
                           src.center.y == dst.center.y &&
                           src.center.z == dst.center.z &&
                           src.voxel_size == dst.voxel_size;
    if (p.is_identity() && same_cube) return vol;  // exact identity
    return resample(vol, rigid_sample_grid(p, src, dst, vol.d, vol.h, vol.w));
}

VoxelGrid rigid_transform_volume(const VoxelGrid& vol, const Pose& p, double voxel_size) {
    const CubeFrame cf{{0, 0, 0}, voxel_size};
    return rigid_transform_volume(vol, p, cf, cf);
}

SampleGrid perspective_warp_grid(const Intrinsics& k, const FrustumSpec& f,
                                 const CubeFrame& cube, int src_d, int src_h,
                                 int src_w, int d, int h, int w) {
    SampleGrid sg = frustum_grid(k, f, d, h, w);
    const size_t n = sg.voxel_count();
    for (size_t v = 0; v < n; ++v) {
        const Vec3 cam{sg.coords[3 * v], sg.coords[3 * v + 1], sg.coords[3 * v + 2]};
        const Vec3 idx = cube.point_to_index(cam, src_d, src_h, src_w);
        sg.coords[3 * v] = idx.x;
        sg.coords[3 * v + 1] = idx.y;
        sg.coords[3 * v + 2] = idx.z;
    }
    return sg;
}

VoxelGrid perspective_warp(const VoxelGrid& vol, const Intrinsics& k,
                           const FrustumSpec& f, const CubeFrame& cube,
                           int d, int h, int w) {
    return resample(vol, perspective_warp_grid(k, f, cube, vol.d, vol.h, vol.w, d, h, w));
}

VoxelGrid perspective_warp(const VoxelGrid& vol, const Intrinsics& k,
                           const FrustumSpec& f, const CubeFrame& cube) {
    return perspective_warp(vol, k, f, cube, vol.d, k.height, k.width);
}

VoxelGrid inverse_project(const Image& features, const Intrinsics& k,
                          const CubeFrame& cube, int d, int h, int w) {
    VoxelGrid out(features.c, d, h, w);
    const size_t n = out.voxel_count();
    const size_t img_plane = features.pixel_count();
    size_t v = 0;
    for (int kd = 0; kd < d; ++kd)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j, ++v) {
                const Vec3 p = cube.index_to_point(j, i, kd, d, h, w);
                if (p.z <= 1e-9) continue;
                // Pixel (r, c) has its center at (c + 0.5, r + 0.5).
                const double jx = k.fx * p.x / p.z + k.cx - 0.5;
                const double iy = k.fy * p.y / p.z + k.cy - 0.5;
                if (!(jx > -1.0 && jx < features.w && iy > -1.0 && iy < features.h))
                    continue;
                const int x0 = static_cast<int>(std::floor(jx));
                const int y0 = static_cast<int>(std::floor(iy));
                const double fx = jx - x0, fy = iy - y0;
                const double wx[2] = {1.0 - fx, fx};
                const double wy[2] = {1.0 - fy, fy};
                for (int dy = 0; dy < 2; ++dy) {
                    const int y = y0 + dy;
                    if (y < 0 || y >= features.h) continue;
                    for (int dx = 0; dx < 2; ++dx) {
                        const int x = x0 + dx;
                        if (x < 0 || x >= features.w) continue;
                        const double wgt = wy[dy] * wx[dx];
                        if (wgt == 0.0) continue;
                        const size_t o = static_cast<size_t>(y) * features.w + x;
                        for (int ch = 0; ch < features.c; ++ch)
                            out.data[ch * n + v] += wgt * features.data[ch * img_plane + o];
                    }
                }
            }
    return out;
}

VoxelGrid aggregate_latents(const std::vector<PosedVolume>& volumes,
                            size_t origin_index, double voxel_size) {
    if (volumes.empty()) throw EmptyViewSet("aggregate_latents: no views");
    if (origin_index >= volumes.size())
        throw DimensionMismatch("aggregate_latents: origin index out of range");
    const VoxelGrid& ref = volumes[origin_index].grid;
    for (const auto& pv : volumes)
        if (!pv.grid.same_dims(ref))
            throw DimensionMismatch("aggregate_latents: volumes differ in dims");

    VoxelGrid acc(ref.c, ref.d, ref.h, ref.w);
    for (const auto& pv : volumes) {
        const Pose rel = relative_pose(pv.pose, volumes[origin_index].pose);
        const VoxelGrid aligned = rigid_transform_volume(pv.grid, rel, voxel_size);
        for (size_t i = 0; i < acc.size(); ++i) acc.data[i] += aligned.data[i];
    }
    const double inv_n = 1.0 / static_cast<double>(volumes.size());
    for (double& v : acc.data) v *= inv_n;
    return acc;
}

// ---------------------------------------------------------------------------
// VOXL1 container

namespace {

void put_u16le(std::string& buf, uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

uint16_t get_u16le(const unsigned char* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

void write_voxl(const VoxelGrid& vol, const std::string& path) {
    if (vol.c <= 0 || vol.d <= 0 || vol.h <= 0 || vol.w <= 0 ||
        vol.c > 0xffff || vol.d > 0xffff || vol.h > 0xffff || vol.w > 0xffff)
        throw IoError("write_voxl: dims out of range for VOXL1");

    std::string header = "VOXL";
    header.push_back(1);  // version
    header.push_back(0);  // dtype float32 LE
    header.push_back(0);
    header.push_back(0);
    put_u16le(header, static_cast<uint16_t>(vol.c));
    put_u16le(header, static_cast<uint16_t>(vol.d));
    put_u16le(header, static_cast<uint16_t>(vol.h));
    put_u16le(header, static_cast<uint16_t>(vol.w));

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("write_voxl: cannot open " + path);
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    std::vector<float> payload(vol.size());
    for (size_t i = 0; i < vol.size(); ++i) payload[i] = static_cast<float>(vol.data[i]);
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!f) throw IoError("write_voxl: write failed for " + path);
}

VoxelGrid read_voxl(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("read_voxl: cannot open " + path);

    unsigned char header[16];
    f.read(reinterpret_cast<char*>(header), 16);
    if (f.gcount() != 16) throw CorruptHeader("read_voxl: truncated header in " + path);
    if (std::memcmp(header, "VOXL", 4) != 0)
        throw CorruptHeader("read_voxl: bad magic in " + path);
    if (header[4] != 1)
        throw UnsupportedFormat("read_voxl: unsupported version in " + path);
    if (header[5] != 0)
        throw UnsupportedFormat("read_voxl: unsupported dtype in " + path);

    const int c = get_u16le(header + 8);
    const int d = get_u16le(header + 10);
    const int h = get_u16le(header + 12);
    const int w = get_u16le(header + 14);
    if (c == 0 || d == 0 || h == 0 || w == 0)
        throw CorruptHeader("read_voxl: zero dimension in " + path);

    VoxelGrid vol(c, d, h, w);
    std::vector<float> payload(vol.size());
    f.read(reinterpret_cast<char*>(payload.data()),
           static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (static_cast<size_t>(f.gcount()) != payload.size() * sizeof(float))
        throw CorruptHeader("read_voxl: truncated payload in " + path);
    for (size_t i = 0; i < vol.size(); ++i) vol.data[i] = payload[i];
    return vol;
}

}  // namespace voxsyn

#include "voxsyn/scene_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "voxsyn/errors.hpp"

namespace fs = std::filesystem;

namespace voxsyn {

// ---------------------------------------------------------------------------
// PPM (P6)

Image read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("read_ppm: cannot open " + path);

    auto next_token = [&f, &path]() {
        std::string tok;
        int ch;
        while ((ch = f.get()) != EOF) {
            if (ch == '#') {  // comment to end of line
                while ((ch = f.get()) != EOF && ch != '\n') {
                }
                continue;
            }
            if (std::isspace(ch)) {
                if (!tok.empty()) return tok;
                continue;
            }
            tok.push_back(static_cast<char>(ch));
        }
        if (tok.empty()) throw CorruptHeader("read_ppm: truncated header in " + path);
        return tok;
    };

    if (next_token() != "P6") throw UnsupportedFormat("read_ppm: not a P6 file: " + path);
    int w, h, maxval;
    try {
        w = std::stoi(next_token());
        h = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw CorruptHeader("read_ppm: malformed header in " + path);
    }
    if (w <= 0 || h <= 0) throw CorruptHeader("read_ppm: bad dimensions in " + path);
    if (maxval != 255) throw UnsupportedFormat("read_ppm: only maxval 255 supported: " + path);

    std::vector<unsigned char> buf(static_cast<size_t>(w) * h * 3);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<size_t>(f.gcount()) != buf.size())
        throw CorruptHeader("read_ppm: truncated payload in " + path);

    Image img(3, h, w);
    const size_t plane = img.pixel_count();
    for (size_t p = 0; p < plane; ++p)
        for (int ch = 0; ch < 3; ++ch)
            img.data[ch * plane + p] = buf[3 * p + ch] / 255.0;
    return img;
}

void write_ppm(const Image& img, const std::string& path) {
    if (img.c != 3) throw DimensionMismatch("write_ppm: expected a 3-channel image");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("write_ppm: cannot open " + path);
    f << "P6\n" << img.w << " " << img.h << "\n255\n";
    std::vector<unsigned char> buf(static_cast<size_t>(img.w) * img.h * 3);
    const size_t plane = img.pixel_count();
    for (size_t p = 0; p < plane; ++p)
        for (int ch = 0; ch < 3; ++ch) {
            const double v = std::clamp(img.data[ch * plane + p], 0.0, 1.0);
            buf[3 * p + ch] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("write_ppm: write failed for " + path);
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

std::vector<double> parse_numbers(std::istringstream& ss, size_t n, int line,
                                  const std::string& field) {
    std::vector<double> vals;
    double v;
    while (ss >> v) vals.push_back(v);
    if (vals.size() != n)
        throw ParseError("manifest line " + std::to_string(line) + ": '" + field +
                         "' expects " + std::to_string(n) + " values, got " +
                         std::to_string(vals.size()));
    return vals;
}

}  // namespace

SceneManifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("load_manifest: cannot open " + path);
    const fs::path dir = fs::path(path).parent_path();

    SceneManifest m;
    bool have_intrinsics = false, have_frustum = false;
    std::string pending_view_id, pending_image;
    bool view_pending = false;
    std::set<std::string> ids;

    std::string linebuf;
    int line = 0;
    while (std::getline(f, linebuf)) {
        ++line;
        const auto hash = linebuf.find('#');
        if (hash != std::string::npos) linebuf.erase(hash);
        std::istringstream ss(linebuf);
        std::string key;
        if (!(ss >> key)) continue;

        if (key == "intrinsics") {
            const auto v = parse_numbers(ss, 6, line, key);
            m.intrinsics = {v[0], v[1], v[2], v[3], static_cast<int>(v[4]),
                            static_cast<int>(v[5])};
            if (!m.intrinsics.valid())
                throw ParseError("manifest line " + std::to_string(line) +
                                 ": invalid intrinsics");
            have_intrinsics = true;
        } else if (key == "frustum") {
            const auto v = parse_numbers(ss, 3, line, key);
            m.frustum = {v[0], v[1], static_cast<int>(v[2])};
            if (!m.frustum.valid())
                throw ParseError("manifest line " + std::to_string(line) +
                                 ": invalid frustum");
            have_frustum = true;
        } else if (key == "voxel_size") {
            const auto v = parse_numbers(ss, 1, line, key);
            if (v[0] <= 0)
                throw ParseError("manifest line " + std::to_string(line) +
                                 ": voxel_size must be positive");
            m.voxel_size = v[0];
        } else if (key == "view") {
            if (view_pending)
                throw ParseError("manifest line " + std::to_string(line) +
                                 ": view '" + pending_view_id + "' has no pose");
            if (!(ss >> pending_view_id >> pending_image))
                throw ParseError("manifest line " + std::to_string(line) +
                                 ": 'view' expects <id> <image_path>");
            if (!ids.insert(pending_view_id).second)
                throw ParseError("manifest line " + std::to_string(line) +
                                 ": duplicate view id '" + pending_view_id + "'");
            view_pending = true;
        } else if (key == "pose") {
            if (!view_pending)
                throw ParseError("manifest line " + std::to_string(line) +
                                 ": 'pose' without a preceding 'view'");
            const auto v = parse_numbers(ss, 16, line, key);
            if (v[12] != 0 || v[13] != 0 || v[14] != 0 || v[15] != 1)
                throw InvalidPose("view '" + pending_view_id +
                                  "': pose bottom row must be 0 0 0 1");
            View view;
            view.id = pending_view_id;
            view.image_path = pending_image;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) view.pose.rotation(i, j) = v[4 * i + j];
            view.pose.translation = {v[3], v[7], v[11]};
            if (view.pose.orthonormality_error() > 1e-6)
                throw InvalidPose("view '" + pending_view_id +
                                  "': rotation is not orthonormal");
            m.views.push_back(std::move(view));
            view_pending = false;
        } else {
            throw ParseError("manifest line " + std::to_string(line) +
                             ": unknown key '" + key + "'");
        }
    }
    if (view_pending)
        throw ParseError("manifest: view '" + pending_view_id + "' has no pose");
    if (!have_intrinsics) throw ParseError("manifest: missing 'intrinsics'");
    if (!have_frustum) throw ParseError("manifest: missing 'frustum'");
    if (m.views.empty()) throw ParseError("manifest: no views");

    for (const auto& v : m.views) {
        const fs::path img = dir / v.image_path;
        if (!fs::exists(img))
            throw MissingImage("manifest view '" + v.id + "': missing image " +
                               img.string());
    }
    return m;
}

void write_manifest(const SceneManifest& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("write_manifest: cannot open " + path);
    char buf[512];
    std::snprintf(buf, sizeof(buf), "intrinsics %.17g %.17g %.17g %.17g %d %d\n",
                  m.intrinsics.fx, m.intrinsics.fy, m.intrinsics.cx, m.intrinsics.cy,
                  m.intrinsics.width, m.intrinsics.height);
    f << buf;
    std::snprintf(buf, sizeof(buf), "frustum %.17g %.17g %d\n", m.frustum.z_near,
                  m.frustum.z_far, m.frustum.depth_slices);
    f << buf;
    std::snprintf(buf, sizeof(buf), "voxel_size %.17g\n", m.voxel_size);
    f << buf;
    for (const auto& v : m.views) {
        f << "view " << v.id << " " << v.image_path << "\npose";
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                std::snprintf(buf, sizeof(buf), " %.17g", v.pose.rotation(i, j));
                f << buf;
            }
            const double t = i == 0 ? v.pose.translation.x
                                    : (i == 1 ? v.pose.translation.y : v.pose.translation.z);
            std::snprintf(buf, sizeof(buf), " %.17g", t);
            f << buf;
        }
        f << " 0 0 0 1\n";
    }
    if (!f) throw IoError("write_manifest: write failed for " + path);
}

// ---------------------------------------------------------------------------
// Procedural scenes

namespace {

bool inside(const Primitive& p, const Vec3& x) {
    const Vec3 r = x - p.center;
    switch (p.kind) {
        case PrimitiveKind::Sphere:
            return r.norm() <= p.size.x;
        case PrimitiveKind::Box:
            return std::abs(r.x) <= p.size.x && std::abs(r.y) <= p.size.y &&
                   std::abs(r.z) <= p.size.z;
        case PrimitiveKind::Cylinder:  // axis along y
            return std::sqrt(r.x * r.x + r.z * r.z) <= p.size.x &&
                   std::abs(r.y) <= p.size.y;
    }
    return false;
}

}  // namespace

VoxelGrid generate_scene(const ProceduralSpec& spec) {
    if (spec.primitives.empty())
        throw InvalidRange("generate_scene: primitive list is empty");
    for (const auto& p : spec.primitives)
        if (!(p.alpha > 0.0 && p.alpha <= 1.0) || p.rgb.x < 0 || p.rgb.x > 1 ||
            p.rgb.y < 0 || p.rgb.y > 1 || p.rgb.z < 0 || p.rgb.z > 1)
            throw InvalidRange("generate_scene: primitive color/alpha out of range");

    VoxelGrid vol(4, spec.d, spec.h, spec.w);
    const CubeFrame cube{{0, 0, 0}, spec.voxel_size};
    const size_t n = vol.voxel_count();
    size_t v = 0;
    for (int kd = 0; kd < spec.d; ++kd)
        for (int i = 0; i < spec.h; ++i)
            for (int j = 0; j < spec.w; ++j, ++v) {
                const Vec3 x = cube.index_to_point(j, i, kd, spec.d, spec.h, spec.w);
                for (const auto& p : spec.primitives) {  // later primitives win
                    if (!inside(p, x)) continue;
                    vol.data[v] = p.rgb.x;
                    vol.data[n + v] = p.rgb.y;
                    vol.data[2 * n + v] = p.rgb.z;
                    vol.data[3 * n + v] = p.alpha;
                }
            }
    return vol;
}

std::vector<Pose> sample_sphere_poses(int n, double radius, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<Pose> poses;
    poses.reserve(n);
    while (static_cast<int>(poses.size()) < n) {
        // Marsaglia (1972): uniform on the sphere from a point in the unit disc.
        const double u = uni(rng), v = uni(rng);
        const double s = u * u + v * v;
        if (s >= 1.0) continue;
        const double r = 2.0 * std::sqrt(1.0 - s);
        const Vec3 dir{u * r, v * r, 1.0 - 2.0 * s};
        poses.push_back(look_at(dir * radius, {0, 0, 0}));
    }
    return poses;
}

std::vector<Pose> turntable_poses(int n, double radius, double elevation) {
    std::vector<Pose> poses;
    poses.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double az = 2.0 * M_PI * i / n;
        const Vec3 eye{radius * std::cos(elevation) * std::sin(az),
                       -radius * std::sin(elevation),
                       radius * std::cos(elevation) * std::cos(az)};
        poses.push_back(look_at(eye, {0, 0, 0}));
    }
    return poses;
}

SceneManifest render_dataset(const VoxelGrid& vol, const std::vector<Pose>& poses,
                             const Intrinsics& k, const FrustumSpec& f,
                             double voxel_size, const RenderOptions& opts,
                             const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("render_dataset: cannot create " + out_dir);

    SceneManifest m;
    m.intrinsics = k;
    m.frustum = f;
    m.voxel_size = voxel_size;
    const CubeFrame cube{{0, 0, 0}, voxel_size};

    RenderOptions ref_opts = opts;
    ref_opts.mode = RefMode::Matched;
    ref_opts.samples_per_ray = f.depth_slices;

    char name[64];
    for (size_t i = 0; i < poses.size(); ++i) {
        const RenderedImage img = reference_render(vol, poses[i], k, f, cube, ref_opts);
        std::snprintf(name, sizeof(name), "view_%04zu", i);
        const std::string img_name = std::string(name) + ".ppm";
        write_ppm(img.rgb, (fs::path(out_dir) / img_name).string());
        m.views.push_back({name, poses[i], img_name});
    }
    write_manifest(m, (fs::path(out_dir) / "scene.manifest").string());
    return m;
}

}  // namespace voxsyn

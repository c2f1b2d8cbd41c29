// voxsyn command-line interface: rendering, fitting, evaluation,
// benchmarking, gradient checking and procedural dataset synthesis.
//
// Exit codes: 0 success, 1 data/runtime error, 2 usage error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "voxsyn/diff.hpp"
#include "voxsyn/errors.hpp"
#include "voxsyn/geometry.hpp"
#include "voxsyn/metrics.hpp"
#include "voxsyn/parallel.hpp"
#include "voxsyn/renderer.hpp"
#include "voxsyn/scene_io.hpp"
#include "voxsyn/volume.hpp"

namespace fs = std::filesystem;
using namespace voxsyn;

namespace {

// Thrown for bad flag values that CLI11 cannot diagnose itself (exit 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_doubles(const std::string& s, size_t n, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw UsageError(std::string(what) + ": cannot parse '" + tok + "'");
        }
    }
    if (n != 0 && out.size() != n)
        throw UsageError(std::string(what) + ": expected " + std::to_string(n) +
                         " comma-separated values, got " + std::to_string(out.size()));
    return out;
}

std::vector<int> parse_ints(const std::string& s, const char* what) {
    std::vector<int> out;
    for (double v : parse_doubles(s, 0, what)) {
        if (v != std::floor(v)) throw UsageError(std::string(what) + ": expected integers");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

Intrinsics parse_intrinsics(const std::string& s) {
    auto v = parse_doubles(s, 6, "--intrinsics (fx,fy,cx,cy,width,height)");
    Intrinsics k{v[0], v[1], v[2], v[3], static_cast<int>(v[4]), static_cast<int>(v[5])};
    if (!k.valid()) throw UsageError("--intrinsics: invalid camera parameters");
    return k;
}

FrustumSpec parse_frustum(const std::string& s) {
    auto v = parse_doubles(s, 3, "--frustum (z_near,z_far,depth_slices)");
    FrustumSpec f{v[0], v[1], static_cast<int>(v[2])};
    if (!f.valid()) throw UsageError("--frustum: need 0 < z_near < z_far and depth_slices >= 2");
    return f;
}

// 16 row-major values of a 4x4 world-to-camera matrix.
Pose parse_pose(const std::string& s) {
    auto v = parse_doubles(s, 16, "--pose (16 row-major 4x4 values)");
    Pose p;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) p.rotation(r, c) = v[4 * r + c];
        switch (r) {
            case 0: p.translation.x = v[3]; break;
            case 1: p.translation.y = v[7]; break;
            case 2: p.translation.z = v[11]; break;
        }
    }
    if (v[12] != 0 || v[13] != 0 || v[14] != 0 || v[15] != 1)
        throw UsageError("--pose: bottom row must be 0 0 0 1");
    if (p.orthonormality_error() > 1e-6)
        throw UsageError("--pose: rotation block is not orthonormal");
    return p;
}

Vec3 parse_vec3(const std::string& s, const char* what) {
    auto v = parse_doubles(s, 3, what);
    return {v[0], v[1], v[2]};
}

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Median wall time of `repeats` runs after one warm-up.
template <class F>
double time_median_ms(int repeats, F&& fn) {
    fn();  // warm-up
    std::vector<double> t;
    t.reserve(repeats);
    for (int r = 0; r < repeats; ++r) {
        const double t0 = now_ms();
        fn();
        t.push_back(now_ms() - t0);
    }
    std::sort(t.begin(), t.end());
    return t[t.size() / 2];
}

const View& find_view(const SceneManifest& m, const std::string& id) {
    for (const auto& v : m.views)
        if (v.id == id) return v;
    throw UsageError("--manifest-view: no view with id '" + id + "'");
}

Image load_view_image(const std::string& manifest_path, const View& v) {
    return read_ppm((fs::path(manifest_path).parent_path() / v.image_path).string());
}

// ---------------------------------------------------------------------------
// Subcommand state

struct RenderArgs {
    std::string volume, pose, manifest, manifest_view, intrinsics, frustum;
    std::string out, engine = "amortized", background = "1,1,1";
    double voxel_size = 0.0;  // 0 = derive 1/max(dims) or take from manifest
    int samples = 64;
    int repeats = 5;
};

struct TurntableArgs {
    std::string volume, intrinsics = "64,64,32,32,64,64", frustum = "2,4,64";
    std::string out_dir, engine = "amortized", background = "1,1,1";
    int n_views = 8;
    double radius = 3.0, elevation = 0.0, voxel_size = 0.0;
    int samples = 64;
};

struct FitArgs {
    std::string manifest, dims = "32", out_volume, loss_csv;
    int iters = 500, holdout = 0;
    double lr = 0.05, lambda = 0.05;
    uint64_t seed = 0;
};

struct EvalArgs {
    std::string pred_volume, gt_volume, manifest, metrics = "miou";
    double tau = 0.05;
    bool resample_flag = false;
    double voxel_size = 0.0;
};

struct BenchArgs {
    std::string volume, resolutions = "64", depths = "64", csv;
    int views = 10, repeats = 5;
};

struct GradcheckArgs {
    uint64_t seed = 0;
    int size = 5;
    bool corrupt = false;
};

struct SynthArgs {
    std::string out_dir, intrinsics = "96,96,32,32,64,64", frustum = "2.2,4.2,64";
    int grid = 64, views = 32;
    double radius = 3.2, voxel_size = 0.0;
    uint64_t seed = 7;
};

double derived_voxel_size(double flag_value, const VoxelGrid& vol) {
    if (flag_value > 0.0) return flag_value;
    // Default: a unit-extent cube along the largest axis.
    return 1.0 / std::max({vol.d, vol.h, vol.w});
}

VoxelGrid load_volume(const std::string& path) {
    VoxelGrid v = read_voxl(path);
    if (v.c != 4) throw InvalidRange("volume '" + path + "' must have 4 channels (rgba)");
    return v;
}

// Built-in two-primitive scene used by `synth` (a matte sphere beside a box).
std::vector<Primitive> default_primitives() {
    return {
        Primitive{PrimitiveKind::Sphere, {-0.16, 0.02, 0.04}, {0.21, 0, 0}, {0.85, 0.30, 0.25}, 0.28},
        Primitive{PrimitiveKind::Box, {0.20, -0.04, -0.06}, {0.15, 0.19, 0.13}, {0.25, 0.45, 0.85}, 0.28},
    };
}

// ---------------------------------------------------------------------------
// Subcommand bodies

int cmd_render(const RenderArgs& a) {
    VoxelGrid vol = load_volume(a.volume);

    Pose pose;
    Intrinsics k;
    FrustumSpec f;
    double vsize;
    if (!a.manifest.empty()) {
        SceneManifest m = load_manifest(a.manifest);
        if (a.manifest_view.empty())
            throw UsageError("--manifest requires --manifest-view <id>");
        pose = find_view(m, a.manifest_view).pose;
        k = m.intrinsics;
        f = m.frustum;
        vsize = m.voxel_size;
        if (!a.intrinsics.empty()) k = parse_intrinsics(a.intrinsics);
        if (!a.frustum.empty()) f = parse_frustum(a.frustum);
    } else {
        if (a.pose.empty()) throw UsageError("need --pose or --manifest + --manifest-view");
        if (a.intrinsics.empty() || a.frustum.empty())
            throw UsageError("--pose requires --intrinsics and --frustum");
        pose = parse_pose(a.pose);
        k = parse_intrinsics(a.intrinsics);
        f = parse_frustum(a.frustum);
        vsize = derived_voxel_size(a.voxel_size, vol);
    }
    if (a.voxel_size > 0.0) vsize = a.voxel_size;

    RenderOptions opts;
    opts.background = parse_vec3(a.background, "--background (r,g,b)");
    opts.samples_per_ray = a.samples;
    const CubeFrame cube{{0, 0, 0}, vsize};

    RenderedImage img;
    double ms;
    if (a.engine == "amortized") {
        ms = time_median_ms(a.repeats, [&] {
            AmortizedRenderer eng(vol, k, f, cube, opts);
            img = eng.render(pose);
        });
    } else if (a.engine == "reference") {
        ms = time_median_ms(a.repeats, [&] { img = reference_render(vol, pose, k, f, cube, opts); });
    } else {
        throw UsageError("--engine must be 'amortized' or 'reference'");
    }

    write_ppm(img.rgb, a.out);
    std::printf("engine=%s  render_ms=%.3f  out=%s\n", a.engine.c_str(), ms, a.out.c_str());
    return 0;
}

int cmd_turntable(const TurntableArgs& a) {
    if (a.n_views < 1) throw UsageError("--n-views must be >= 1");
    VoxelGrid vol = load_volume(a.volume);
    const Intrinsics k = parse_intrinsics(a.intrinsics);
    const FrustumSpec f = parse_frustum(a.frustum);
    const CubeFrame cube{{0, 0, 0}, derived_voxel_size(a.voxel_size, vol)};

    RenderOptions opts;
    opts.background = parse_vec3(a.background, "--background (r,g,b)");
    opts.samples_per_ray = a.samples;

    fs::create_directories(a.out_dir);
    const std::vector<Pose> poses = turntable_poses(a.n_views, a.radius, a.elevation);

    const double t0 = now_ms();
    if (a.engine == "amortized") {
        AmortizedRenderer eng(vol, k, f, cube, opts);
        for (int i = 0; i < a.n_views; ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "view_%04d.ppm", i);
            write_ppm(eng.render(poses[i]).rgb, (fs::path(a.out_dir) / name).string());
        }
    } else if (a.engine == "reference") {
        for (int i = 0; i < a.n_views; ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "view_%04d.ppm", i);
            write_ppm(reference_render(vol, poses[i], k, f, cube, opts).rgb,
                      (fs::path(a.out_dir) / name).string());
        }
    } else {
        throw UsageError("--engine must be 'amortized' or 'reference'");
    }
    const double total = now_ms() - t0;
    std::printf("views=%d  total_ms=%.3f  per_view_ms=%.3f\n", a.n_views, total,
                total / a.n_views);
    return 0;
}

int cmd_fit(const FitArgs& a) {
    SceneManifest m = load_manifest(a.manifest);
    if (a.holdout < 0 || static_cast<size_t>(a.holdout) > m.views.size() ||
        m.views.size() - a.holdout < 2)
        throw UsageError("--holdout must leave at least 2 training views");

    auto dims = parse_ints(a.dims, "--dims (d or d,h,w)");
    int d, h, w;
    if (dims.size() == 1) d = h = w = dims[0];
    else if (dims.size() == 3) { d = dims[0]; h = dims[1]; w = dims[2]; }
    else throw UsageError("--dims: expected 1 or 3 integers");

    FitScene scene;
    scene.intrinsics = m.intrinsics;
    scene.frustum = m.frustum;
    scene.voxel_size = m.voxel_size;
    const size_t n_train = m.views.size() - a.holdout;
    for (size_t i = 0; i < n_train; ++i) {
        scene.poses.push_back(m.views[i].pose);
        scene.targets.push_back(load_view_image(a.manifest, m.views[i]));
    }

    OptimConfig cfg;
    cfg.learning_rate = a.lr;
    cfg.iterations = a.iters;
    cfg.lambda_ssim = a.lambda;
    cfg.seed = a.seed;

    FitResult res = fit_volume(scene, d, h, w, cfg);
    write_voxl(res.volume, a.out_volume);

    if (!a.loss_csv.empty()) {
        std::ofstream csv(a.loss_csv);
        if (!csv) throw IoError("cannot write '" + a.loss_csv + "'");
        csv << "iteration, l2, ssim_term, total\n";
        char line[128];
        for (const auto& row : res.trace) {
            std::snprintf(line, sizeof(line), "%d, %.9g, %.9g, %.9g\n", row.iteration,
                          row.l2, row.ssim_term, row.total);
            csv << line;
        }
    }

    std::printf("iterations=%d  initial_loss=%.6f  final_loss=%.6f\n", a.iters,
                res.trace.front().total, res.trace.back().total);

    if (a.holdout > 0) {
        const CubeFrame cube{{0, 0, 0}, m.voxel_size};
        AmortizedRenderer eng(res.volume, m.intrinsics, m.frustum, cube, RenderOptions{});
        double sum_psnr = 0.0, sum_ssim = 0.0;
        for (size_t i = n_train; i < m.views.size(); ++i) {
            const Image target = load_view_image(a.manifest, m.views[i]);
            const Image pred = eng.render(m.views[i].pose).rgb;
            const double p = psnr(pred, target);
            const double s = ssim(pred, target);
            sum_psnr += p;
            sum_ssim += s;
            std::printf("holdout %s  psnr=%.3f  ssim=%.5f\n", m.views[i].id.c_str(), p, s);
        }
        std::printf("holdout mean  psnr=%.3f  ssim=%.5f\n", sum_psnr / a.holdout,
                    sum_ssim / a.holdout);
    }
    return 0;
}

int cmd_eval(const EvalArgs& a) {
    if (a.metrics == "miou") {
        if (a.tau <= 0.0 || a.tau >= 1.0) throw UsageError("--tau must lie in (0, 1)");
        VoxelGrid pred = load_volume(a.pred_volume);
        VoxelGrid gt = load_volume(a.gt_volume);
        OccupancyGrid po = binarize_alpha(pred, a.tau);
        OccupancyGrid go = binarize_alpha(gt, a.tau);
        if (po.d != go.d || po.h != go.h || po.w != go.w) {
            if (!a.resample_flag)
                throw UsageError("volume dims differ; pass --resample to compare");
            po = occupancy_resample(po, go.d, go.h, go.w);
        }
        std::printf("metric  value\nmiou    %.6f\n", miou(po, go));
        return 0;
    }
    if (a.metrics == "psnr" || a.metrics == "ssim") {
        if (a.manifest.empty())
            throw UsageError("--metrics psnr|ssim requires --manifest with target images");
        VoxelGrid pred = load_volume(a.pred_volume);
        SceneManifest m = load_manifest(a.manifest);
        const CubeFrame cube{{0, 0, 0},
                             a.voxel_size > 0.0 ? a.voxel_size : m.voxel_size};
        AmortizedRenderer eng(pred, m.intrinsics, m.frustum, cube, RenderOptions{});
        std::printf("view  %s\n", a.metrics.c_str());
        double sum = 0.0;
        for (const auto& v : m.views) {
            const Image target = load_view_image(a.manifest, v);
            const Image rendered = eng.render(v.pose).rgb;
            const double val = a.metrics == "psnr" ? psnr(rendered, target)
                                                   : ssim(rendered, target);
            sum += val;
            std::printf("%s  %.6f\n", v.id.c_str(), val);
        }
        std::printf("mean  %.6f\n", sum / m.views.size());
        return 0;
    }
    throw UsageError("--metrics must be one of miou|psnr|ssim");
}

int cmd_bench(const BenchArgs& a) {
    const auto resolutions = parse_ints(a.resolutions, "--resolutions");
    const auto depths = parse_ints(a.depths, "--depth-samples");
    if (a.views < 1 || a.repeats < 1) throw UsageError("--views and --repeats must be >= 1");

    std::ofstream csv;
    std::ostream* out = &std::cout;
    if (!a.csv.empty()) {
        csv.open(a.csv);
        if (!csv) throw IoError("cannot write '" + a.csv + "'");
        out = &csv;
    }
    *out << "engine, resolution, depth, views, per_view_ms, per_object_ms\n";

    const std::vector<Pose> poses = turntable_poses(a.views, 3.0, 0.35);

    for (int res : resolutions) {
        for (int depth : depths) {
            VoxelGrid vol;
            if (!a.volume.empty()) {
                vol = load_volume(a.volume);
            } else {
                // Seeded random benchmark payload: d = depth, h = w = res.
                vol = VoxelGrid(4, depth, res, res);
                std::mt19937_64 rng(42);
                std::uniform_real_distribution<double> uni(0.0, 1.0);
                for (auto& v : vol.data) v = uni(rng);
            }
            const CubeFrame cube{{0, 0, 0}, 1.2 / std::max({vol.d, vol.h, vol.w})};
            const Intrinsics k{1.2 * res, 1.2 * res, res * 0.5, res * 0.5, res, res};
            const FrustumSpec f{2.0, 4.0, depth};
            RenderOptions opts;
            opts.samples_per_ray = depth;

            const double amortized_ms = time_median_ms(a.repeats, [&] {
                AmortizedRenderer eng(vol, k, f, cube, opts);
                for (const Pose& p : poses) eng.render(p);
            });
            const double reference_ms = time_median_ms(a.repeats, [&] {
                for (const Pose& p : poses) reference_render(vol, p, k, f, cube, opts);
            });

            char line[160];
            std::snprintf(line, sizeof(line), "amortized, %d, %d, %d, %.4f, %.4f\n", res,
                          depth, a.views, amortized_ms / a.views, amortized_ms);
            *out << line;
            std::snprintf(line, sizeof(line), "reference, %d, %d, %d, %.4f, %.4f\n", res,
                          depth, a.views, reference_ms / a.views, reference_ms);
            *out << line;
        }
    }
    return 0;
}

int cmd_gradcheck(const GradcheckArgs& a) {
    const auto rows = run_gradient_suite(a.seed, a.size, a.corrupt);
    bool ok = true;
    for (const auto& [name, err] : rows) {
        std::printf("%-24s max_rel_err=%.3e\n", name.c_str(), err);
        ok = ok && err <= 1e-4;
    }
    std::printf("gradcheck %s\n", ok ? "PASS" : "FAIL");
    return ok ? 0 : 1;
}

int cmd_synth(const SynthArgs& a) {
    const Intrinsics k = parse_intrinsics(a.intrinsics);
    const FrustumSpec f = parse_frustum(a.frustum);

    ProceduralSpec spec;
    spec.seed = a.seed;
    spec.primitives = default_primitives();
    spec.d = spec.h = spec.w = a.grid;
    spec.voxel_size = a.voxel_size > 0.0 ? a.voxel_size : 1.0 / a.grid;

    const VoxelGrid vol = generate_scene(spec);
    fs::create_directories(a.out_dir);
    write_voxl(vol, (fs::path(a.out_dir) / "scene.voxl").string());

    RenderOptions opts;
    opts.samples_per_ray = f.depth_slices;
    const std::vector<Pose> poses = sample_sphere_poses(a.views, a.radius, a.seed);
    render_dataset(vol, poses, k, f, spec.voxel_size, opts, a.out_dir);
    std::printf("wrote %d views and scene.voxl under %s\n", a.views, a.out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"voxsyn: explicit RGBa-volume view synthesis"};
    app.require_subcommand(1);
    app.fallthrough();

    int threads = 0;
    app.add_option("--threads", threads, "cap worker threads (default: VOXSYN_THREADS or all cores)");

    RenderArgs ra;
    auto* render = app.add_subcommand("render", "render one view of a volume");
    render->add_option("--volume", ra.volume, "input .voxl volume")->required();
    render->add_option("--pose", ra.pose, "world-to-camera 4x4, 16 comma-separated row-major values");
    render->add_option("--manifest", ra.manifest, "scene manifest supplying camera and pose");
    render->add_option("--manifest-view", ra.manifest_view, "view id within --manifest");
    render->add_option("--intrinsics", ra.intrinsics, "fx,fy,cx,cy,width,height");
    render->add_option("--frustum", ra.frustum, "z_near,z_far,depth_slices");
    render->add_option("--voxel-size", ra.voxel_size, "world units per voxel");
    render->add_option("--out", ra.out, "output PPM path")->required();
    render->add_option("--engine", ra.engine, "amortized|reference");
    render->add_option("--samples", ra.samples, "samples per ray (reference engine)");
    render->add_option("--background", ra.background, "background r,g,b");
    render->add_option("--repeats", ra.repeats, "timing repeats (median reported)");

    TurntableArgs ta;
    auto* turntable = app.add_subcommand("turntable", "render equally spaced azimuth views");
    turntable->add_option("--volume", ta.volume)->required();
    turntable->add_option("--n-views", ta.n_views, "number of views");
    turntable->add_option("--radius", ta.radius, "camera distance from origin");
    turntable->add_option("--elevation", ta.elevation, "camera elevation (radians)");
    turntable->add_option("--out-dir", ta.out_dir)->required();
    turntable->add_option("--engine", ta.engine, "amortized|reference");
    turntable->add_option("--intrinsics", ta.intrinsics, "fx,fy,cx,cy,width,height");
    turntable->add_option("--frustum", ta.frustum, "z_near,z_far,depth_slices");
    turntable->add_option("--voxel-size", ta.voxel_size);
    turntable->add_option("--samples", ta.samples);
    turntable->add_option("--background", ta.background);

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "fit an RGBa volume to posed images");
    fit->add_option("--manifest", fa.manifest)->required();
    fit->add_option("--dims", fa.dims, "volume dims: d or d,h,w");
    fit->add_option("--iters", fa.iters, "optimizer iterations");
    fit->add_option("--lr", fa.lr, "Adam learning rate");
    fit->add_option("--lambda", fa.lambda, "structural-similarity loss weight");
    fit->add_option("--seed", fa.seed);
    fit->add_option("--out-volume", fa.out_volume)->required();
    fit->add_option("--holdout", fa.holdout, "hold out the last k views for evaluation");
    fit->add_option("--loss-csv", fa.loss_csv, "per-iteration loss trace CSV");

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "evaluate a volume (miou, psnr, ssim)");
    eval->add_option("--pred-volume", ea.pred_volume)->required();
    eval->add_option("--gt-volume", ea.gt_volume, "ground-truth volume (miou)");
    eval->add_option("--tau", ea.tau, "occupancy threshold, strict alpha > tau");
    eval->add_flag("--resample", ea.resample_flag, "nearest-neighbor resample pred to gt dims");
    eval->add_option("--metrics", ea.metrics, "miou|psnr|ssim");
    eval->add_option("--manifest", ea.manifest, "posed target images (psnr/ssim)");
    eval->add_option("--voxel-size", ea.voxel_size);

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "time amortized vs reference rendering");
    bench->add_option("--volume", ba.volume, "volume to render (default: seeded random)");
    bench->add_option("--resolutions", ba.resolutions, "image sizes, comma-separated");
    bench->add_option("--depth-samples", ba.depths, "depth sample counts, comma-separated");
    bench->add_option("--views", ba.views, "views per object");
    bench->add_option("--repeats", ba.repeats, "timing repeats (median reported)");
    bench->add_option("--csv", ba.csv, "output CSV path (default: stdout)");

    GradcheckArgs ga;
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    gradcheck->add_option("--seed", ga.seed);
    gradcheck->add_option("--size", ga.size, "instance edge length (<= 6)");
    gradcheck->add_flag("--corrupt-vjp", ga.corrupt)->group("");  // harness sanity, hidden

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "generate a procedural scene + posed dataset");
    synth->add_option("--out-dir", sa.out_dir)->required();
    synth->add_option("--grid", sa.grid, "volume edge length");
    synth->add_option("--views", sa.views, "number of rendered views");
    synth->add_option("--radius", sa.radius, "camera sphere radius");
    synth->add_option("--seed", sa.seed);
    synth->add_option("--intrinsics", sa.intrinsics, "fx,fy,cx,cy,width,height");
    synth->add_option("--frustum", sa.frustum, "z_near,z_far,depth_slices");
    synth->add_option("--voxel-size", sa.voxel_size);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;  // --help exits 0, usage errors exit 2
    }

    if (threads > 0) set_max_threads(threads);

    try {
        if (*render) return cmd_render(ra);
        if (*turntable) return cmd_turntable(ta);
        if (*fit) return cmd_fit(fa);
        if (*eval) return cmd_eval(ea);
        if (*bench) return cmd_bench(ba);
        if (*gradcheck) return cmd_gradcheck(ga);
        if (*synth) return cmd_synth(sa);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

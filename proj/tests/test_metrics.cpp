#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "voxsyn/errors.hpp"
#include "voxsyn/metrics.hpp"

using namespace voxsyn;

namespace {

Image random_image(int c, int h, int w, uint64_t seed) {
    Image img(c, h, w);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (auto& v : img.data) v = uni(rng);
    return img;
}

// Direct per-window SSIM oracle: explicit double loops over every valid
// window position, no separability tricks.
double oracle_ssim(const Image& a, const Image& b, const SsimConfig& cfg) {
    const auto k = cfg.kernel();
    const int n = cfg.window;
    double total = 0.0;
    size_t cnt = 0;
    for (int c = 0; c < a.c; ++c)
        for (int i = 0; i + n <= a.h; ++i)
            for (int j = 0; j + n <= a.w; ++j) {
                double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
                for (int u = 0; u < n; ++u)
                    for (int v = 0; v < n; ++v) {
                        const double wgt = k[u] * k[v];
                        const double x = a.at(c, i + u, j + v);
                        const double y = b.at(c, i + u, j + v);
                        mx += wgt * x;
                        my += wgt * y;
                        xx += wgt * x * x;
                        yy += wgt * y * y;
                        xy += wgt * x * y;
                    }
                const double vx = xx - mx * mx, vy = yy - my * my, cov = xy - mx * my;
                total += (2 * mx * my + cfg.c1()) * (2 * cov + cfg.c2()) /
                         ((mx * mx + my * my + cfg.c1()) * (vx + vy + cfg.c2()));
                ++cnt;
            }
    return total / cnt;
}

}  // namespace

TEST_CASE("l2_loss basics and oracle") {
    const Image x = random_image(3, 8, 9, 61);
    CHECK(l2_loss(x, x) == 0.0);

    Image zeros(3, 4, 4), halves(3, 4, 4);
    for (auto& v : halves.data) v = 0.5;
    CHECK(l2_loss(zeros, halves) == doctest::Approx(0.25).epsilon(1e-12));

    const Image y = random_image(3, 8, 9, 62);
    double acc = 0.0;
    for (size_t i = 0; i < x.data.size(); ++i) {
        const double e = x.data[i] - y.data[i];
        acc += e * e;
    }
    CHECK(l2_loss(x, y) == doctest::Approx(acc / x.data.size()).epsilon(1e-9));

    Image wrong(3, 9, 8);
    CHECK_THROWS_AS(l2_loss(x, wrong), DimensionMismatch);
}

TEST_CASE("ssim window weights are normalized") {
    const SsimConfig cfg;
    const auto k = cfg.kernel();
    REQUIRE(static_cast<int>(k.size()) == cfg.window);
    double s2 = 0.0;
    for (double a : k)
        for (double b : k) s2 += a * b;
    CHECK(s2 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ssim of an image with itself is 1") {
    const Image x = random_image(3, 16, 13, 63);
    CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("ssim of constant images matches the analytic formula") {
    auto run = [](double a, double b) {
        Image ia(1, 12, 12), ib(1, 12, 12);
        for (auto& v : ia.data) v = a;
        for (auto& v : ib.data) v = b;
        return ssim(ia, ib);
    };
    const SsimConfig cfg;
    // Constant images: variance terms vanish, score = (2ab+C1)/(a^2+b^2+C1).
    CHECK(run(0.0, 1.0) == doctest::Approx(cfg.c1() / (1.0 + cfg.c1())).epsilon(1e-9));
    CHECK(run(0.3, 0.7) ==
          doctest::Approx((2 * 0.3 * 0.7 + cfg.c1()) / (0.09 + 0.49 + cfg.c1()))
              .epsilon(1e-9));
}

TEST_CASE("ssim matches the brute-force window oracle and is symmetric") {
    const Image a = random_image(2, 14, 15, 64);
    const Image b = random_image(2, 14, 15, 65);
    const SsimConfig cfg;
    CHECK(ssim(a, b, cfg) == doctest::Approx(oracle_ssim(a, b, cfg)).epsilon(1e-6));
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-9));
    CHECK(std::abs(ssim(a, b)) <= 1.0);
}

TEST_CASE("ssim rejects undersized or mismatched images") {
    const Image small = random_image(1, 8, 12, 66);
    CHECK_THROWS_AS(ssim(small, small), TooSmall);
    const Image a = random_image(1, 12, 12, 67);
    const Image b = random_image(1, 12, 13, 68);
    CHECK_THROWS_AS(ssim(a, b), DimensionMismatch);
}

TEST_CASE("ssim_with_grad reports the same value as ssim") {
    const Image a = random_image(3, 13, 14, 69);
    const Image b = random_image(3, 13, 14, 70);
    const SsimResult r = ssim_with_grad(a, b);
    CHECK(r.value == doctest::Approx(ssim(a, b)).epsilon(1e-12));
    CHECK(r.grad.c == a.c);
    CHECK(r.grad.h == a.h);
    CHECK(r.grad.w == a.w);
}

TEST_CASE("render_loss combines l2 and the ssim term") {
    const Image x = random_image(3, 12, 12, 71);
    CHECK(render_loss(x, x, 0.05) == 0.0);
    const Image y = random_image(3, 12, 12, 72);
    CHECK(render_loss(x, y, 0.0) == doctest::Approx(l2_loss(x, y)).epsilon(1e-12));

    Image zeros(1, 12, 12), ones(1, 12, 12);
    for (auto& v : ones.data) v = 1.0;
    const SsimConfig cfg;
    const double want = 1.0 + 0.05 * (1.0 - cfg.c1() / (1.0 + cfg.c1()));
    CHECK(render_loss(zeros, ones, 0.05) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("psnr fixed points") {
    const Image x = random_image(3, 6, 6, 73);
    CHECK(psnr(x, x) == doctest::Approx(99.0).epsilon(1e-12));
    CHECK(psnr_from_mse(0.01) == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(psnr_from_mse(0.25) == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-9));
    CHECK(psnr_from_mse(0.01) > psnr_from_mse(0.02));
    CHECK(psnr(x, x) == psnr(x, x));

    Image y = x;
    y.data[0] += 0.1;
    CHECK(psnr(x, y) == doctest::Approx(psnr(y, x)).epsilon(1e-12));
}

TEST_CASE("binarize_alpha uses a strict threshold") {
    VoxelGrid g(4, 2, 2, 2);
    CHECK(binarize_alpha(g, 0.05).count() == 0);

    g.at(3, 0, 0, 0) = 0.05;   // exactly tau: not occupied
    g.at(3, 0, 0, 1) = 0.051;  // just above: occupied
    const OccupancyGrid occ = binarize_alpha(g, 0.05);
    CHECK(occ.at(0, 0, 0) == 0);
    CHECK(occ.at(0, 0, 1) == 1);
    CHECK(occ.count() == 1);

    CHECK_THROWS_AS(binarize_alpha(g, 0.0), InvalidRange);
    CHECK_THROWS_AS(binarize_alpha(g, 1.0), InvalidRange);
}

TEST_CASE("binarize_alpha matches a per-voxel loop and is monotone in tau") {
    std::mt19937_64 rng(74);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    VoxelGrid g(4, 4, 4, 4);
    for (auto& v : g.data) v = uni(rng);
    const OccupancyGrid occ = binarize_alpha(g, 0.3);
    size_t manual = 0;
    for (int kd = 0; kd < 4; ++kd)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                const bool want = g.at(3, kd, i, j) > 0.3;
                CHECK(occ.at(kd, i, j) == (want ? 1 : 0));
                manual += want;
            }
    CHECK(occ.count() == manual);
    CHECK(binarize_alpha(g, 0.6).count() <= binarize_alpha(g, 0.3).count());
}

TEST_CASE("miou basics") {
    OccupancyGrid a(4, 4, 4), b(4, 4, 4);
    CHECK(miou(a, b) == 1.0);  // both empty

    a.at(0, 0, 0) = 1;
    a.at(1, 2, 3) = 1;
    CHECK(miou(a, a) == 1.0);

    b.at(3, 3, 3) = 1;
    CHECK(miou(a, b) == 0.0);  // disjoint

    OccupancyGrid c(2, 2, 2);
    CHECK_THROWS_AS(miou(a, c), DimensionMismatch);
}

TEST_CASE("miou of the half-overlap box fixture is exactly 1/3") {
    // 4x4x4 box vs the same box shifted by half its width: intersection 32,
    // union 96.
    OccupancyGrid a(8, 8, 8), b(8, 8, 8);
    for (int kd = 0; kd < 4; ++kd)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                a.at(kd, i, j) = 1;
                b.at(kd, i, j + 2) = 1;
            }
    CHECK(miou(a, b) == 32.0 / 96.0);
}

TEST_CASE("occupancy_resample replication, identity and round-trip") {
    OccupancyGrid g(4, 4, 4);
    g.at(1, 2, 3) = 1;

    const OccupancyGrid up = occupancy_resample(g, 8, 8, 8);
    size_t cnt = 0;
    for (int kd = 0; kd < 8; ++kd)
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                if (up.at(kd, i, j)) {
                    ++cnt;
                    CHECK(kd / 2 == 1);
                    CHECK(i / 2 == 2);
                    CHECK(j / 2 == 3);
                }
    CHECK(cnt == 8);  // a full 2x2x2 block

    const OccupancyGrid same = occupancy_resample(g, 4, 4, 4);
    for (size_t i = 0; i < g.size(); ++i) CHECK(same.occ[i] == g.occ[i]);

    std::mt19937_64 rng(75);
    OccupancyGrid r(6, 5, 7);
    for (auto& v : r.occ) v = rng() & 1;
    const OccupancyGrid back = occupancy_resample(occupancy_resample(r, 12, 10, 14), 6, 5, 7);
    for (size_t i = 0; i < r.size(); ++i) CHECK(back.occ[i] == r.occ[i]);
}

#include "voxsyn/metrics.hpp"

#include <cmath>

#include "voxsyn/errors.hpp"

namespace voxsyn {

std::vector<double> SsimConfig::kernel() const {
    std::vector<double> k(window);
    const double half = (window - 1) * 0.5;
    double sum = 0.0;
    for (int i = 0; i < window; ++i) {
        const double x = i - half;
        k[i] = std::exp(-x * x / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

double l2_loss(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw DimensionMismatch("l2_loss: image shapes differ");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

double psnr_from_mse(double mse, double peak) {
    if (mse <= 0.0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(peak * peak / mse));
}

double psnr(const Image& a, const Image& b, double peak) {
    return psnr_from_mse(l2_loss(a, b), peak);
}

namespace {

// Valid 2D correlation with a separable symmetric kernel.
// src is h x w row-major; output (h-k+1) x (w-k+1).
std::vector<double> valid_corr(const double* src, int h, int w,
                               const std::vector<double>& k) {
    const int t = static_cast<int>(k.size());
    const int oh = h - t + 1, ow = w - t + 1;
    std::vector<double> tmp(static_cast<size_t>(h) * ow);  // horizontal pass
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < ow; ++j) {
            double s = 0.0;
            const double* row = src + static_cast<size_t>(i) * w + j;
            for (int u = 0; u < t; ++u) s += k[u] * row[u];
            tmp[static_cast<size_t>(i) * ow + j] = s;
        }
    std::vector<double> out(static_cast<size_t>(oh) * ow);
    for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
            double s = 0.0;
            for (int u = 0; u < t; ++u) s += k[u] * tmp[static_cast<size_t>(i + u) * ow + j];
            out[static_cast<size_t>(i) * ow + j] = s;
        }
    return out;
}

// Transpose of valid_corr: scatters a (h-k+1) x (w-k+1) map back through the
// window weights onto an h x w grid (full convolution; the kernel is
// symmetric so convolution equals correlation).
std::vector<double> full_conv(const double* src, int sh, int sw, int h, int w,
                              const std::vector<double>& k) {
    const int t = static_cast<int>(k.size());
    std::vector<double> tmp(static_cast<size_t>(sh) * w, 0.0);  // horizontal scatter
    for (int i = 0; i < sh; ++i)
        for (int j = 0; j < sw; ++j) {
            const double v = src[static_cast<size_t>(i) * sw + j];
            if (v == 0.0) continue;
            double* row = tmp.data() + static_cast<size_t>(i) * w + j;
            for (int u = 0; u < t; ++u) row[u] += k[u] * v;
        }
    std::vector<double> out(static_cast<size_t>(h) * w, 0.0);
    for (int i = 0; i < sh; ++i)
        for (int j = 0; j < w; ++j) {
            const double v = tmp[static_cast<size_t>(i) * w + j];
            if (v == 0.0) continue;
            for (int u = 0; u < t; ++u)
                out[static_cast<size_t>(i + u) * w + j] += k[u] * v;
        }
    return out;
}

void check_ssim_inputs(const Image& a, const Image& b, const SsimConfig& cfg) {
    if (!a.same_shape(b)) throw DimensionMismatch("ssim: image shapes differ");
    if (a.h < cfg.window || a.w < cfg.window)
        throw TooSmall("ssim: image smaller than the " + std::to_string(cfg.window) +
                       "x" + std::to_string(cfg.window) + " window");
}

}  // namespace

double ssim(const Image& a, const Image& b, const SsimConfig& cfg) {
    check_ssim_inputs(a, b, cfg);
    const auto k = cfg.kernel();
    const double C1 = cfg.c1(), C2 = cfg.c2();
    const int oh = a.h - cfg.window + 1, ow = a.w - cfg.window + 1;
    const size_t nvalid = static_cast<size_t>(oh) * ow;

    double total = 0.0;
    std::vector<double> x2(a.pixel_count()), y2(a.pixel_count()), xy(a.pixel_count());
    for (int ch = 0; ch < a.c; ++ch) {
        const double* x = a.data.data() + static_cast<size_t>(ch) * a.pixel_count();
        const double* y = b.data.data() + static_cast<size_t>(ch) * b.pixel_count();
        for (size_t i = 0; i < a.pixel_count(); ++i) {
            x2[i] = x[i] * x[i];
            y2[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mu_x = valid_corr(x, a.h, a.w, k);
        const auto mu_y = valid_corr(y, a.h, a.w, k);
        const auto m_x2 = valid_corr(x2.data(), a.h, a.w, k);
        const auto m_y2 = valid_corr(y2.data(), a.h, a.w, k);
        const auto m_xy = valid_corr(xy.data(), a.h, a.w, k);
        for (size_t i = 0; i < nvalid; ++i) {
            const double vx = m_x2[i] - mu_x[i] * mu_x[i];
            const double vy = m_y2[i] - mu_y[i] * mu_y[i];
            const double cov = m_xy[i] - mu_x[i] * mu_y[i];
            const double a1 = 2.0 * mu_x[i] * mu_y[i] + C1;
            const double a2 = 2.0 * cov + C2;
            const double b1 = mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + C1;
            const double b2 = vx + vy + C2;
            total += (a1 * a2) / (b1 * b2);
        }
    }
    return total / (static_cast<double>(nvalid) * a.c);
}

SsimResult ssim_with_grad(const Image& a, const Image& b, const SsimConfig& cfg) {
    check_ssim_inputs(a, b, cfg);
    const auto k = cfg.kernel();
    const double C1 = cfg.c1(), C2 = cfg.c2();
    const int oh = a.h - cfg.window + 1, ow = a.w - cfg.window + 1;
    const size_t nvalid = static_cast<size_t>(oh) * ow;
    const double inv_n = 1.0 / (static_cast<double>(nvalid) * a.c);

    SsimResult res;
    res.grad = Image(a.c, a.h, a.w);
    std::vector<double> x2(a.pixel_count()), y2(a.pixel_count()), xy(a.pixel_count());
    std::vector<double> g_mu(nvalid), g_m2(nvalid), g_mxy(nvalid);

    for (int ch = 0; ch < a.c; ++ch) {
        const double* x = a.data.data() + static_cast<size_t>(ch) * a.pixel_count();
        const double* y = b.data.data() + static_cast<size_t>(ch) * b.pixel_count();
        for (size_t i = 0; i < a.pixel_count(); ++i) {
            x2[i] = x[i] * x[i];
            y2[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mu_x = valid_corr(x, a.h, a.w, k);
        const auto mu_y = valid_corr(y, a.h, a.w, k);
        const auto m_x2 = valid_corr(x2.data(), a.h, a.w, k);
        const auto m_y2 = valid_corr(y2.data(), a.h, a.w, k);
        const auto m_xy = valid_corr(xy.data(), a.h, a.w, k);

        for (size_t i = 0; i < nvalid; ++i) {
            const double vx = m_x2[i] - mu_x[i] * mu_x[i];
            const double vy = m_y2[i] - mu_y[i] * mu_y[i];
            const double cov = m_xy[i] - mu_x[i] * mu_y[i];
            const double a1 = 2.0 * mu_x[i] * mu_y[i] + C1;
            const double a2 = 2.0 * cov + C2;
            const double b1 = mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + C1;
            const double b2 = vx + vy + C2;
            const double denom = b1 * b2;
            const double s = (a1 * a2) / denom;
            res.value += s;
            // Partials of s with respect to the windowed raw moments
            // (mu_x, E[x^2], E[xy]); variances expand as vx = m_x2 - mu_x^2,
            // cov = m_xy - mu_x mu_y.
            g_mu[i] = (2.0 * mu_y[i] * (a2 - a1)) / denom -
                      2.0 * mu_x[i] * s / b1 + 2.0 * mu_x[i] * s / b2;
            g_m2[i] = -s / b2;
            g_mxy[i] = 2.0 * a1 / denom;
        }
        const auto t_mu = full_conv(g_mu.data(), oh, ow, a.h, a.w, k);
        const auto t_m2 = full_conv(g_m2.data(), oh, ow, a.h, a.w, k);
        const auto t_mxy = full_conv(g_mxy.data(), oh, ow, a.h, a.w, k);
        double* g = res.grad.data.data() + static_cast<size_t>(ch) * a.pixel_count();
        for (size_t i = 0; i < a.pixel_count(); ++i)
            g[i] = inv_n * (t_mu[i] + 2.0 * x[i] * t_m2[i] + y[i] * t_mxy[i]);
    }
    res.value *= inv_n;
    return res;
}

double render_loss(const Image& pred, const Image& target, double lambda_ssim,
                   const SsimConfig& cfg) {
    double loss = l2_loss(pred, target);
    if (lambda_ssim != 0.0) loss += lambda_ssim * (1.0 - ssim(pred, target, cfg));
    return loss;
}

size_t OccupancyGrid::count() const {
    size_t n = 0;
    for (uint8_t v : occ) n += v ? 1 : 0;
    return n;
}

OccupancyGrid binarize_alpha(const VoxelGrid& vol, double tau) {
    if (vol.c != 4) throw DimensionMismatch("binarize_alpha: expected 4-channel volume");
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidRange("binarize_alpha: tau must be in (0, 1)");
    OccupancyGrid g(vol.d, vol.h, vol.w);
    const size_t n = vol.voxel_count();
    const double* a = vol.data.data() + kAlphaChannel * n;
    for (size_t i = 0; i < n; ++i) g.occ[i] = a[i] > tau ? 1 : 0;
    return g;
}

double miou(const OccupancyGrid& a, const OccupancyGrid& b) {
    if (a.d != b.d || a.h != b.h || a.w != b.w)
        throw DimensionMismatch("miou: grid dims differ");
    size_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        const bool pa = a.occ[i] != 0, pb = b.occ[i] != 0;
        inter += (pa && pb) ? 1 : 0;
        uni += (pa || pb) ? 1 : 0;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

OccupancyGrid occupancy_resample(const OccupancyGrid& g, int d, int h, int w) {
    OccupancyGrid out(d, h, w);
    auto src_index = [](int o, int out_dim, int src_dim) {
        const double c = (o + 0.5) * static_cast<double>(src_dim) / out_dim - 0.5;
        int i = static_cast<int>(std::floor(c + 0.5));
        if (i < 0) i = 0;
        if (i >= src_dim) i = src_dim - 1;
        return i;
    };
    for (int kd = 0; kd < d; ++kd) {
        const int sz = src_index(kd, d, g.d);
        for (int i = 0; i < h; ++i) {
            const int sy = src_index(i, h, g.h);
            for (int j = 0; j < w; ++j)
                out.at(kd, i, j) = g.at(sz, sy, src_index(j, w, g.w));
        }
    }
    return out;
}

}  // namespace voxsyn

#include "voxsyn/geometry.hpp"

#include <cmath>

namespace voxsyn {

double Pose::orthonormality_error() const {
    const Mat3 g = rotation.transposed() * rotation;
    double err = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            err = std::max(err, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
    err = std::max(err, std::abs(rotation.det() - 1.0));
    return err;
}

bool Pose::is_identity() const {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (rotation(i, j) != (i == j ? 1.0 : 0.0)) return false;
    return translation.x == 0.0 && translation.y == 0.0 && translation.z == 0.0;
}

Pose relative_pose(const Pose& source, const Pose& target) {
    // x_t = R_t R_s^T x_s + (t_t - R_t R_s^T t_s)
    Pose rel;
    rel.rotation = target.rotation * source.rotation.transposed();
    rel.translation = target.translation - rel.rotation * source.translation;
    return rel;
}

Pose invert_pose(const Pose& p) {
    Pose inv;
    inv.rotation = p.rotation.transposed();
    inv.translation = (inv.rotation * p.translation) * -1.0;
    return inv;
}

Pose compose(const Pose& outer, const Pose& inner) {
    Pose r;
    r.rotation = outer.rotation * inner.rotation;
    r.translation = outer.rotation * inner.translation + outer.translation;
    return r;
}

Pixel project(const Intrinsics& k, const Vec3& p) {
    if (p.z <= 1e-9)
        throw DegenerateDepth("project: point depth " + std::to_string(p.z) +
                              " is at or behind the camera");
    return {k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy};
}

SampleGrid frustum_grid(const Intrinsics& k, const FrustumSpec& f, int d, int h, int w) {
    SampleGrid g(d, h, w);
    const double su = static_cast<double>(k.width) / w;
    const double sv = static_cast<double>(k.height) / h;
    size_t o = 0;
    for (int kd = 0; kd < d; ++kd) {
        const double z = f.slice_depth(kd, d);
        for (int i = 0; i < h; ++i) {
            const double v = (i + 0.5) * sv;
            const double y = (v - k.cy) / k.fy * z;
            for (int j = 0; j < w; ++j) {
                const double u = (j + 0.5) * su;
                g.coords[o++] = (u - k.cx) / k.fx * z;
                g.coords[o++] = y;
                g.coords[o++] = z;
            }
        }
    }
    return g;
}

Mat3 rotation_x(double a) {
    Mat3 r;
    const double c = std::cos(a), s = std::sin(a);
    r.m = {1, 0, 0, 0, c, -s, 0, s, c};
    return r;
}

Mat3 rotation_y(double a) {
    Mat3 r;
    const double c = std::cos(a), s = std::sin(a);
    r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
    return r;
}

Mat3 rotation_z(double a) {
    Mat3 r;
    const double c = std::cos(a), s = std::sin(a);
    r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
    return r;
}

static Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

Pose look_at(const Vec3& eye, const Vec3& at, const Vec3& down) {
    Vec3 zaxis = at - eye;
    const double n = zaxis.norm();
    if (n < 1e-12) throw InvalidPose("look_at: eye coincides with target");
    zaxis = zaxis / n;

    Vec3 xaxis = cross(down, zaxis);
    double xn = xaxis.norm();
    if (xn < 1e-9) {
        // Viewing direction parallel to `down`; pick any perpendicular frame.
        xaxis = cross(Vec3{1, 0, 0}, zaxis);
        xn = xaxis.norm();
        if (xn < 1e-9) {
            xaxis = cross(Vec3{0, 0, 1}, zaxis);
            xn = xaxis.norm();
        }
    }
    xaxis = xaxis / xn;
    const Vec3 yaxis = cross(zaxis, xaxis);

    Pose p;
    p.rotation.m = {xaxis.x, xaxis.y, xaxis.z,
                    yaxis.x, yaxis.y, yaxis.z,
                    zaxis.x, zaxis.y, zaxis.z};
    p.translation = (p.rotation * eye) * -1.0;
    return p;
}

}  // namespace voxsyn

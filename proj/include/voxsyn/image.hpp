#pragma once

#include <cstddef>
#include <vector>

namespace voxsyn {

// Planar multi-channel image, channel-major (c, h, w), values are reals
// (typically in [0, 1]).
struct Image {
    int c = 0, h = 0, w = 0;
    std::vector<double> data;

    Image() = default;
    Image(int c_, int h_, int w_, double fill = 0.0)
        : c(c_), h(h_), w(w_), data(static_cast<size_t>(c_) * h_ * w_, fill) {}

    size_t pixel_count() const { return static_cast<size_t>(h) * w; }
    size_t size() const { return data.size(); }

    double at(int ch, int i, int j) const {
        return data[(static_cast<size_t>(ch) * h + i) * w + j];
    }
    double& at(int ch, int i, int j) {
        return data[(static_cast<size_t>(ch) * h + i) * w + j];
    }

    bool same_shape(const Image& o) const { return c == o.c && h == o.h && w == o.w; }
};

}  // namespace voxsyn

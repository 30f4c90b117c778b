#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hnseg/errors.hpp"

namespace hnseg {

// Dense 2D grid with one or more channel planes. Values are stored
// channel-planar, each plane row-major: index = (c * height + y) * width + x.
struct Grid2D {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;
    std::vector<double> values;

    Grid2D() = default;

    Grid2D(std::size_t h, std::size_t w, std::size_t c = 1, double fill = 0.0)
        : height(h), width(w), channels(c), values(h * w * c, fill) {}

    std::size_t plane_size() const { return height * width; }
    std::size_t size() const { return values.size(); }

    double& at(std::size_t y, std::size_t x, std::size_t c = 0) {
        return values[(c * height + y) * width + x];
    }
    double at(std::size_t y, std::size_t x, std::size_t c = 0) const {
        return values[(c * height + y) * width + x];
    }

    bool same_shape(const Grid2D& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// Integer-labeled grid (single plane), used for superpixel partitions.
struct IntGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<int> values;

    IntGrid() = default;

    IntGrid(std::size_t h, std::size_t w, int fill = 0)
        : height(h), width(w), values(h * w, fill) {}

    int& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
    int at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
    std::size_t size() const { return values.size(); }
};

inline std::string shape_string(const Grid2D& g) {
    return std::to_string(g.height) + "x" + std::to_string(g.width) + "x" +
           std::to_string(g.channels);
}

inline void require_same_shape(const Grid2D& a, const Grid2D& b, const char* what) {
    require(a.same_shape(b), std::string(what) + ": shape mismatch, " +
                                 shape_string(a) + " vs " + shape_string(b));
}

// Numerically stable logistic function.
inline double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Elementwise sigmoid. Saturates smoothly, never overflows.
inline Grid2D sigmoid(const Grid2D& x) {
    Grid2D out = x;
    for (double& v : out.values) v = sigmoid_scalar(v);
    return out;
}

// log(1 + e^x) without overflow.
inline double softplus(double x) {
    if (x > 30.0) return x;
    return std::log1p(std::exp(x));
}

}  // namespace hnseg

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hnseg/grid.hpp"
#include "hnseg/volume.hpp"

namespace hnseg {

inline constexpr std::size_t kNumFeatures = 39;

// 12 statistics per source map (CT intensity, interior probability, boundary
// probability): mean, central moments 2-4, percentiles 20..90 in steps of 10.
// Plus the mean pixel coordinate per axis, normalized by the candidate box
// extent. 3 * 12 + 3 = 39.
inline const std::array<std::string, kNumFeatures>& feature_names() {
    static const std::array<std::string, kNumFeatures> names = [] {
        std::array<std::string, kNumFeatures> n;
        const char* sources[3] = {"ct", "hnni", "hnnb"};
        std::size_t k = 0;
        for (const char* src : sources) {
            n[k++] = std::string(src) + "_mean";
            for (int m = 2; m <= 4; ++m)
                n[k++] = std::string(src) + "_moment" + std::to_string(m);
            for (int p = 20; p <= 90; p += 10)
                n[k++] = std::string(src) + "_pct" + std::to_string(p);
        }
        n[k++] = "x_mean_norm";
        n[k++] = "y_mean_norm";
        n[k++] = "z_mean_norm";
        return n;
    }();
    return names;
}

using FeatureVector = std::array<double, kNumFeatures>;

namespace detail {

// Percentile with linear interpolation between closest ranks:
// rank = p/100 * (n-1) over the ascending-sorted values.
inline double percentile(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double rank = p / 100.0 * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// mean + central moments 2-4 + the 8 percentiles, in feature order.
// The mean is accumulated against the first value as provisional offset, so a
// constant input yields the constant exactly and every central moment is 0.
inline void source_stats(const std::vector<double>& values, double* out) {
    const double n = static_cast<double>(values.size());
    const double offset = values.front();
    double sum = 0.0;
    for (double v : values) sum += v - offset;
    const double mean = offset + sum / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    out[0] = mean;
    out[1] = m2 / n;
    out[2] = m3 / n;
    out[3] = m4 / n;
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 8; ++i) out[4 + i] = percentile(sorted, 20.0 + 10.0 * i);
}

}  // namespace detail

// Features for one superpixel on one slice. The pixel list is in crop
// coordinates (flat row-major indices); slice_z is the absolute slice index
// so the z coordinate can be normalized against the box. Pixels are processed
// in sorted order, so any permutation of the input list yields bit-identical
// features.
inline FeatureVector extract_features(const std::vector<int>& pixels, const Grid2D& ct,
                                      const Grid2D& interior_prob,
                                      const Grid2D& boundary_prob, std::size_t slice_z,
                                      const BoundingBox& box) {
    require(!pixels.empty(), "extract_features: empty superpixel");
    require_same_shape(ct, interior_prob, "extract_features");
    require_same_shape(ct, boundary_prob, "extract_features");
    require(ct.channels == 1, "extract_features: maps must be single-channel");
    require(ct.height == box.extent(1) && ct.width == box.extent(0),
            "extract_features: slice dimensions do not match the candidate box");
    require(static_cast<std::ptrdiff_t>(slice_z) >= box.min[2] &&
                static_cast<std::ptrdiff_t>(slice_z) <= box.max[2],
            "extract_features: slice index outside the candidate box");

    std::vector<int> order(pixels);
    std::sort(order.begin(), order.end());
    require(order.front() >= 0 &&
                static_cast<std::size_t>(order.back()) < ct.plane_size(),
            "extract_features: pixel index out of range");

    const std::size_t n = order.size();
    std::vector<double> vals(n);
    FeatureVector f{};
    const Grid2D* sources[3] = {&ct, &interior_prob, &boundary_prob};
    for (int s = 0; s < 3; ++s) {
        for (std::size_t i = 0; i < n; ++i) vals[i] = sources[s]->values[order[i]];
        detail::source_stats(vals, f.data() + 12 * s);
    }

    double sum_x = 0.0, sum_y = 0.0;
    for (int idx : order) {
        sum_y += static_cast<double>(idx / static_cast<int>(ct.width));
        sum_x += static_cast<double>(idx % static_cast<int>(ct.width));
    }
    auto norm = [&](double mean_coord, std::size_t extent) {
        // Degenerate single-plane axes pin to the box midpoint.
        if (extent <= 1) return 0.5;
        return mean_coord / static_cast<double>(extent - 1);
    };
    f[36] = norm(sum_x / static_cast<double>(n), box.extent(0));
    f[37] = norm(sum_y / static_cast<double>(n), box.extent(1));
    f[38] = norm(static_cast<double>(static_cast<std::ptrdiff_t>(slice_z) - box.min[2]),
                 box.extent(2));
    return f;
}

}  // namespace hnseg

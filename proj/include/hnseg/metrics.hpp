#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "hnseg/volume.hpp"

namespace hnseg {

// Dice coefficient: 2|A n B| / (|A| + |B|). Two empty masks count as a
// perfect match; empty versus non-empty scores zero.
inline double dsc(const MaskVolume& a, const MaskVolume& b) {
    require(a.dims_match(b), "dsc: mask dimensions differ");
    std::size_t inter = 0, size_a = 0, size_b = 0;
    for (std::size_t i = 0; i < a.voxels.size(); ++i) {
        const bool fa = a.voxels[i] != 0, fb = b.voxels[i] != 0;
        inter += (fa && fb);
        size_a += fa;
        size_b += fb;
    }
    if (size_a + size_b == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(size_a + size_b);
}

// Foreground voxels with at least one background 6-neighbor; the volume
// border counts as background. Returned as (x, y, z) index triples.
inline std::vector<std::array<std::size_t, 3>> surface_voxels(const MaskVolume& m) {
    std::vector<std::array<std::size_t, 3>> surface;
    const std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(m.dims[0]);
    const std::ptrdiff_t ny = static_cast<std::ptrdiff_t>(m.dims[1]);
    const std::ptrdiff_t nz = static_cast<std::ptrdiff_t>(m.dims[2]);
    constexpr std::ptrdiff_t off[6][3] = {{-1, 0, 0}, {1, 0, 0},  {0, -1, 0},
                                          {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
    for (std::ptrdiff_t z = 0; z < nz; ++z)
        for (std::ptrdiff_t y = 0; y < ny; ++y)
            for (std::ptrdiff_t x = 0; x < nx; ++x) {
                if (m.at(x, y, z) == 0) continue;
                bool boundary = false;
                for (const auto& d : off) {
                    const std::ptrdiff_t qx = x + d[0], qy = y + d[1], qz = z + d[2];
                    if (qx < 0 || qx >= nx || qy < 0 || qy >= ny || qz < 0 || qz >= nz ||
                        m.at(qx, qy, qz) == 0) {
                        boundary = true;
                        break;
                    }
                }
                if (boundary)
                    surface.push_back({static_cast<std::size_t>(x),
                                       static_cast<std::size_t>(y),
                                       static_cast<std::size_t>(z)});
            }
    return surface;
}

namespace detail {

inline double directed_mean_distance(const std::vector<std::array<std::size_t, 3>>& from,
                                     const std::vector<std::array<std::size_t, 3>>& to,
                                     const std::array<double, 3>& spacing) {
    double sum = 0.0;
    for (const auto& a : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& b : to) {
            double d2 = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double d = (static_cast<double>(a[k]) - static_cast<double>(b[k])) *
                                 spacing[k];
                d2 += d * d;
            }
            if (d2 < best) best = d2;
        }
        sum += std::sqrt(best);
    }
    return sum / static_cast<double>(from.size());
}

}  // namespace detail

// Symmetric average surface distance in millimeters: the mean of the two
// directed mean surface-to-surface distances. Both masks must be non-empty.
inline double avg_min_distance(const MaskVolume& a, const MaskVolume& b) {
    require(a.dims_match(b), "avg_min_distance: mask dimensions differ");
    require(a.spacing == b.spacing, "avg_min_distance: voxel spacing differs");
    const auto sa = surface_voxels(a);
    const auto sb = surface_voxels(b);
    require(!sa.empty() && !sb.empty(),
            "avg_min_distance: undefined for an empty mask");
    const double d_ab = detail::directed_mean_distance(sa, sb, a.spacing);
    const double d_ba = detail::directed_mean_distance(sb, sa, a.spacing);
    return 0.5 * (d_ab + d_ba);
}

// Aggregate statistics for a batch of per-case scores. With one value the
// sample standard deviation is reported as zero and flagged.
struct Summary {
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 0;
    bool single_value = false;
};

inline Summary summarize(const std::vector<double>& values) {
    require(!values.empty(), "summarize: no values");
    Summary s;
    s.count = values.size();
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() == 1) {
        s.single_value = true;
        return s;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return s;
}

// For each level t in 0.00, 0.01, ..., 1.00: the fraction of scores >= t.
inline std::vector<std::pair<double, double>> dsc_coverage_curve(
    const std::vector<double>& scores) {
    require(!scores.empty(), "dsc_coverage_curve: no scores");
    std::vector<std::pair<double, double>> curve;
    curve.reserve(101);
    for (int i = 0; i <= 100; ++i) {
        const double level = static_cast<double>(i) / 100.0;
        std::size_t covered = 0;
        for (double s : scores) covered += (s >= level);
        curve.emplace_back(level,
                           static_cast<double>(covered) / static_cast<double>(scores.size()));
    }
    return curve;
}

}  // namespace hnseg

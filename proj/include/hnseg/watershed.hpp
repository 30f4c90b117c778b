#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "hnseg/grid.hpp"

namespace hnseg {

// A labeling of every pixel into 4-connected regions, labels 0..num_regions-1.
struct SuperpixelPartition {
    IntGrid labels;
    int num_regions = 0;
    std::string scale_tag;
};

namespace detail {

// 4-neighborhood offsets, fixed scan order.
inline constexpr int kDy[4] = {-1, 1, 0, 0};
inline constexpr int kDx[4] = {0, 0, -1, 1};

}  // namespace detail

// Watershed over a boundary probability map. Probabilities below min_prob are
// floored to zero first, merging weak-boundary plateaus into single basins.
// Regional minima (equal-valued 4-connected plateaus with strictly greater
// surroundings) become seeds, labeled in raster order of their first pixel;
// the flood is a priority queue ordered by (value, label, insertion order), so
// ridge ties go to the lower label and the result is fully deterministic.
inline SuperpixelPartition watershed(const Grid2D& boundary_prob, double min_prob = 0.10,
                                     std::string scale_tag = "") {
    require(boundary_prob.channels == 1, "watershed: map must be single-channel");
    require(boundary_prob.size() > 0, "watershed: empty map");
    for (double v : boundary_prob.values)
        require(v >= 0.0 && v <= 1.0, "watershed: probabilities must lie in [0,1]");
    require(min_prob >= 0.0 && min_prob <= 1.0, "watershed: min_prob must lie in [0,1]");

    const int h = static_cast<int>(boundary_prob.height);
    const int w = static_cast<int>(boundary_prob.width);
    std::vector<double> p(boundary_prob.values);
    for (double& v : p)
        if (v < min_prob) v = 0.0;

    SuperpixelPartition part;
    part.scale_tag = std::move(scale_tag);
    part.labels = IntGrid(boundary_prob.height, boundary_prob.width, -1);

    // Seed pass: plateau flood-fill in raster order; a plateau is a regional
    // minimum when no 4-neighbor outside it has a smaller value.
    std::vector<int> plateau;  // scratch: pixels of the current plateau
    std::vector<char> in_plateau(static_cast<std::size_t>(h) * w, 0);
    int next_label = 0;
    for (int start = 0; start < h * w; ++start) {
        if (in_plateau[start]) continue;
        const double level = p[start];
        plateau.clear();
        plateau.push_back(start);
        in_plateau[start] = 1;
        bool is_minimum = true;
        for (std::size_t head = 0; head < plateau.size(); ++head) {
            const int idx = plateau[head];
            const int y = idx / w, x = idx % w;
            for (int d = 0; d < 4; ++d) {
                const int ny = y + detail::kDy[d], nx = x + detail::kDx[d];
                if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                const int nidx = ny * w + nx;
                if (p[nidx] == level) {
                    if (!in_plateau[nidx]) {
                        in_plateau[nidx] = 1;
                        plateau.push_back(nidx);
                    }
                } else if (p[nidx] < level) {
                    is_minimum = false;
                }
            }
        }
        if (is_minimum) {
            for (int idx : plateau) part.labels.values[idx] = next_label;
            ++next_label;
        }
    }
    part.num_regions = next_label;

    // Flood: pop order (value, label, sequence) keeps ties deterministic.
    using Entry = std::tuple<double, int, std::uint64_t, int>;  // value, label, seq, pixel
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue;
    std::uint64_t seq = 0;
    auto push_neighbors = [&](int idx, int label) {
        const int y = idx / w, x = idx % w;
        for (int d = 0; d < 4; ++d) {
            const int ny = y + detail::kDy[d], nx = x + detail::kDx[d];
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            const int nidx = ny * w + nx;
            if (part.labels.values[nidx] < 0) queue.emplace(p[nidx], label, seq++, nidx);
        }
    };
    for (int idx = 0; idx < h * w; ++idx)
        if (part.labels.values[idx] >= 0) push_neighbors(idx, part.labels.values[idx]);
    while (!queue.empty()) {
        const auto [value, label, entry_seq, idx] = queue.top();
        queue.pop();
        if (part.labels.values[idx] >= 0) continue;
        part.labels.values[idx] = label;
        push_neighbors(idx, label);
    }
    return part;
}

// Grayscale PGM (P2) export for eyeballing partitions; labels are spread over
// 0..maxval so adjacent regions get distinct shades.
inline void write_partition_pgm(const SuperpixelPartition& part, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("write_partition_pgm: cannot open " + path);
    const int maxval = part.num_regions > 1 ? part.num_regions - 1 : 1;
    out << "P2\n" << part.labels.width << " " << part.labels.height << "\n" << maxval << "\n";
    for (std::size_t y = 0; y < part.labels.height; ++y) {
        for (std::size_t x = 0; x < part.labels.width; ++x) {
            if (x) out << ' ';
            out << part.labels.values[y * part.labels.width + x];
        }
        out << '\n';
    }
    if (!out) throw io_error("write_partition_pgm: write failed for " + path);
}

}  // namespace hnseg

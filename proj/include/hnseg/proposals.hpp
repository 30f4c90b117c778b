#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <tuple>
#include <vector>

#include "hnseg/grid.hpp"
#include "hnseg/watershed.hpp"

namespace hnseg {

// One candidate region: a set of pixels (flat row-major indices into the
// slice) plus the hierarchy level it came from.
struct Proposal {
    std::vector<int> pixels;
    int level = 1;
};

struct ProposalSet {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<Proposal> proposals;  // level-1 regions first, then level-2
    std::size_t num_level1 = 0;
};

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) { parent[find(b)] = find(a); }
};

}  // namespace detail

// Two-level region hierarchy. Level 1 is the finest of the given partitions
// (most regions; earliest on ties). Adjacent level-1 regions are then merged
// greedily by ascending shared-edge strength -- the mean over boundary pixel
// pairs of the average fused boundary probability -- but a merge is only
// allowed while some coarser partition has a region holding a strict pixel
// majority of both sides, so level 2 stays aligned with the coarser
// partitions. The surviving components are the level-2 regions.
inline ProposalSet build_hierarchy(const std::vector<SuperpixelPartition>& partitions,
                                   const Grid2D& boundary_prob) {
    require(!partitions.empty(), "build_hierarchy: need at least one partition");
    require(boundary_prob.channels == 1, "build_hierarchy: map must be single-channel");
    for (const auto& part : partitions)
        require(part.labels.height == boundary_prob.height &&
                    part.labels.width == boundary_prob.width,
                "build_hierarchy: partition and map dimensions differ");

    std::size_t finest = 0;
    for (std::size_t i = 1; i < partitions.size(); ++i)
        if (partitions[i].num_regions > partitions[finest].num_regions) finest = i;
    const SuperpixelPartition& base = partitions[finest];
    const int n = base.num_regions;
    const int h = static_cast<int>(base.labels.height);
    const int w = static_cast<int>(base.labels.width);

    ProposalSet set;
    set.height = base.labels.height;
    set.width = base.labels.width;
    set.proposals.resize(n);
    for (int idx = 0; idx < h * w; ++idx)
        set.proposals[base.labels.values[idx]].pixels.push_back(idx);
    for (auto& p : set.proposals) p.level = 1;
    set.num_level1 = static_cast<std::size_t>(n);

    // Shared-edge strengths between adjacent level-1 regions.
    std::map<std::pair<int, int>, std::pair<double, int>> edges;  // (sum, pair count)
    auto visit_pair = [&](int idx_a, int idx_b) {
        int la = base.labels.values[idx_a], lb = base.labels.values[idx_b];
        if (la == lb) return;
        if (la > lb) std::swap(la, lb);
        auto& e = edges[{la, lb}];
        e.first += 0.5 * (boundary_prob.values[idx_a] + boundary_prob.values[idx_b]);
        e.second += 1;
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int idx = y * w + x;
            if (x + 1 < w) visit_pair(idx, idx + 1);
            if (y + 1 < h) visit_pair(idx, idx + w);
        }

    // Ascending strength, ties by (min,max) label pair.
    std::vector<std::tuple<double, int, int>> order;
    order.reserve(edges.size());
    for (const auto& [pair, acc] : edges)
        order.emplace_back(acc.first / acc.second, pair.first, pair.second);
    std::sort(order.begin(), order.end());

    // Per-component pixel counts within each coarser partition.
    detail::UnionFind uf(n);
    std::vector<std::size_t> comp_size(n);
    const std::size_t n_coarse = partitions.size();
    std::vector<std::vector<std::map<int, std::size_t>>> hist(
        n, std::vector<std::map<int, std::size_t>>(n_coarse));
    for (int r = 0; r < n; ++r) {
        comp_size[r] = set.proposals[r].pixels.size();
        for (int idx : set.proposals[r].pixels)
            for (std::size_t k = 0; k < n_coarse; ++k) {
                if (k == finest) continue;
                hist[r][k][partitions[k].labels.values[idx]] += 1;
            }
    }

    auto majority_aligned = [&](int a, int b) {
        for (std::size_t k = 0; k < n_coarse; ++k) {
            if (k == finest) continue;
            for (const auto& [label, count_a] : hist[a][k]) {
                if (2 * count_a <= comp_size[a]) continue;
                auto it = hist[b][k].find(label);
                if (it != hist[b][k].end() && 2 * it->second > comp_size[b]) return true;
            }
        }
        return false;
    };

    for (const auto& [strength, la, lb] : order) {
        const int a = uf.find(la), b = uf.find(lb);
        if (a == b) continue;
        if (!majority_aligned(a, b)) continue;
        uf.unite(a, b);
        const int root = uf.find(a), other = (root == a) ? b : a;
        comp_size[root] += comp_size[other];
        for (std::size_t k = 0; k < n_coarse; ++k)
            for (const auto& [label, count] : hist[other][k]) hist[root][k][label] += count;
    }

    // Emit level-2 components in order of their smallest member label.
    std::map<int, std::vector<int>> components;
    for (int r = 0; r < n; ++r) components[uf.find(r)].push_back(r);
    std::vector<std::vector<int>> level2;
    for (int r = 0; r < n; ++r) {
        auto it = components.find(uf.find(r));
        if (it == components.end()) continue;
        level2.push_back(std::move(it->second));
        components.erase(it);
    }
    for (const auto& members : level2) {
        Proposal p;
        p.level = 2;
        for (int r : members)
            p.pixels.insert(p.pixels.end(), set.proposals[r].pixels.begin(),
                            set.proposals[r].pixels.end());
        std::sort(p.pixels.begin(), p.pixels.end());
        set.proposals.push_back(std::move(p));
    }
    return set;
}

// Best achievable segmentation from level-1 regions: regions sorted by
// overlap ratio |r intersect gt| / |r| (descending, ties by region order) are
// added greedily while the Dice score strictly improves. For disjoint regions
// this greedy prefix equals the exhaustive subset optimum.
struct OptimalLabeling {
    Grid2D mask;
    double dsc = 0.0;
};

inline OptimalLabeling optimal_labeling(const ProposalSet& set, const Grid2D& gt) {
    require(gt.height == set.height && gt.width == set.width && gt.channels == 1,
            "optimal_labeling: ground truth dimensions differ from proposals");
    std::size_t gt_count = 0;
    for (double v : gt.values) {
        require(v == 0.0 || v == 1.0, "optimal_labeling: ground truth must be binary");
        gt_count += (v == 1.0);
    }

    struct Scored {
        double ratio;
        std::size_t index;
    };
    std::vector<Scored> scored;
    std::vector<std::size_t> inter(set.num_level1);
    for (std::size_t r = 0; r < set.num_level1; ++r) {
        const auto& pixels = set.proposals[r].pixels;
        require(!pixels.empty(), "optimal_labeling: empty level-1 region");
        std::size_t in_gt = 0;
        for (int idx : pixels) in_gt += (gt.values[idx] == 1.0);
        inter[r] = in_gt;
        scored.push_back({static_cast<double>(in_gt) / pixels.size(), r});
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const Scored& a, const Scored& b) { return a.ratio > b.ratio; });

    OptimalLabeling out;
    out.mask = Grid2D(set.height, set.width, 1);
    std::size_t area = 0, intersection = 0;
    auto dsc_of = [&](std::size_t i, std::size_t a) {
        if (a + gt_count == 0) return 1.0;  // both empty
        return 2.0 * static_cast<double>(i) / static_cast<double>(a + gt_count);
    };
    out.dsc = dsc_of(intersection, area);
    for (const Scored& s : scored) {
        const auto& pixels = set.proposals[s.index].pixels;
        const double candidate =
            dsc_of(intersection + inter[s.index], area + pixels.size());
        if (candidate > out.dsc) {
            out.dsc = candidate;
            intersection += inter[s.index];
            area += pixels.size();
            for (int idx : pixels) out.mask.values[idx] = 1.0;
        }
    }
    return out;
}

}  // namespace hnseg

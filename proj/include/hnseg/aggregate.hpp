#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "hnseg/grid.hpp"
#include "hnseg/metrics.hpp"
#include "hnseg/proposals.hpp"
#include "hnseg/volume.hpp"

namespace hnseg {

// How per-proposal probabilities combine into a per-pixel score when
// proposals overlap (a pixel belongs to its level-1 region and to the level-2
// region containing it).
enum class PixelCombine { max, mean };

// Training label for a proposal: positive when at least positive_fraction of
// its pixels lie inside the ground truth.
inline int label_proposal(const Proposal& proposal, const Grid2D& gt,
                          double positive_fraction = 0.5) {
    require(!proposal.pixels.empty(), "label_proposal: empty proposal");
    require(positive_fraction > 0.0 && positive_fraction <= 1.0,
            "label_proposal: fraction must lie in (0,1]");
    std::size_t inside = 0;
    for (int idx : proposal.pixels) inside += (gt.values[idx] == 1.0);
    const double frac =
        static_cast<double>(inside) / static_cast<double>(proposal.pixels.size());
    return frac >= positive_fraction ? 1 : 0;
}

// Per-pixel probability map from per-proposal scores.
inline Grid2D rf_probability_map(const ProposalSet& set,
                                 const std::vector<double>& proposal_probs,
                                 PixelCombine combine = PixelCombine::max) {
    require(proposal_probs.size() == set.proposals.size(),
            "rf_probability_map: one probability per proposal required");
    Grid2D prob(set.height, set.width, 1);
    if (combine == PixelCombine::max) {
        for (std::size_t p = 0; p < set.proposals.size(); ++p)
            for (int idx : set.proposals[p].pixels)
                prob.values[idx] = std::max(prob.values[idx], proposal_probs[p]);
    } else {
        Grid2D count(set.height, set.width, 1);
        for (std::size_t p = 0; p < set.proposals.size(); ++p)
            for (int idx : set.proposals[p].pixels) {
                prob.values[idx] += proposal_probs[p];
                count.values[idx] += 1.0;
            }
        for (std::size_t i = 0; i < prob.values.size(); ++i)
            if (count.values[i] > 0.0) prob.values[i] /= count.values[i];
    }
    return prob;
}

// Binary mask from a probability map: foreground where prob >= threshold.
inline Grid2D threshold_map(const Grid2D& prob, double threshold) {
    Grid2D mask(prob.height, prob.width, prob.channels);
    for (std::size_t i = 0; i < prob.values.size(); ++i)
        mask.values[i] = prob.values[i] >= threshold ? 1.0 : 0.0;
    return mask;
}

inline MaskVolume threshold_volume(const Volume& prob, double threshold) {
    MaskVolume m(prob.dims[0], prob.dims[1], prob.dims[2]);
    m.spacing = prob.spacing;
    for (std::size_t i = 0; i < prob.voxels.size(); ++i)
        m.voxels[i] = prob.voxels[i] >= threshold ? 1 : 0;
    return m;
}

// Re-assemble per-slice crop masks into a full-size volume: zero outside the
// candidate box, the given slices inside.
inline MaskVolume stack_to_volume(const std::vector<Grid2D>& slice_masks,
                                  const BoundingBox& box,
                                  const std::array<std::size_t, 3>& dims,
                                  const std::array<double, 3>& spacing) {
    require(slice_masks.size() == box.extent(2),
            "stack_to_volume: slice count does not match the box depth");
    MaskVolume out(dims[0], dims[1], dims[2]);
    out.spacing = spacing;
    for (int a = 0; a < 3; ++a)
        require(box.min[a] >= 0 && box.max[a] < static_cast<std::ptrdiff_t>(dims[a]),
                "stack_to_volume: box exceeds the volume");
    for (std::size_t k = 0; k < slice_masks.size(); ++k) {
        const Grid2D& mask = slice_masks[k];
        require(mask.height == box.extent(1) && mask.width == box.extent(0) &&
                    mask.channels == 1,
                "stack_to_volume: slice dimensions do not match the box");
        const std::size_t z = static_cast<std::size_t>(box.min[2]) + k;
        for (std::size_t y = 0; y < mask.height; ++y)
            for (std::size_t x = 0; x < mask.width; ++x) {
                const double v = mask.at(y, x);
                require(v == 0.0 || v == 1.0, "stack_to_volume: mask must be binary");
                out.at(static_cast<std::size_t>(box.min[0]) + x,
                       static_cast<std::size_t>(box.min[1]) + y, z) =
                    v == 1.0 ? 1 : 0;
            }
    }
    return out;
}

// Same layout for probability values (used before thresholding).
inline Volume stack_probs_to_volume(const std::vector<Grid2D>& slice_probs,
                                    const BoundingBox& box,
                                    const std::array<std::size_t, 3>& dims,
                                    const std::array<double, 3>& spacing) {
    require(slice_probs.size() == box.extent(2),
            "stack_probs_to_volume: slice count does not match the box depth");
    Volume out(dims[0], dims[1], dims[2]);
    out.spacing = spacing;
    require(out.in_bounds(box), "stack_probs_to_volume: box exceeds the volume");
    for (std::size_t k = 0; k < slice_probs.size(); ++k) {
        const Grid2D& prob = slice_probs[k];
        require(prob.height == box.extent(1) && prob.width == box.extent(0) &&
                    prob.channels == 1,
                "stack_probs_to_volume: slice dimensions do not match the box");
        const std::size_t z = static_cast<std::size_t>(box.min[2]) + k;
        for (std::size_t y = 0; y < prob.height; ++y)
            for (std::size_t x = 0; x < prob.width; ++x)
                out.at(static_cast<std::size_t>(box.min[0]) + x,
                       static_cast<std::size_t>(box.min[1]) + y, z) = prob.at(y, x);
    }
    return out;
}

struct ThresholdGrid {
    double start = 0.05;
    double step = 0.05;
    std::size_t count = 19;  // 0.05 .. 0.95

    double level(std::size_t i) const { return start + step * static_cast<double>(i); }
};

struct CalibratedThreshold {
    double threshold = 0.5;
    double train_mean_dsc = 0.0;
};

// Sweep the grid on training-fold probability volumes and keep the threshold
// with the best mean Dice; ties resolve to the lowest threshold.
inline CalibratedThreshold calibrate_threshold(const std::vector<Volume>& probs,
                                               const std::vector<MaskVolume>& gts,
                                               const ThresholdGrid& grid = {}) {
    require(!probs.empty(), "calibrate_threshold: no training volumes");
    require(probs.size() == gts.size(),
            "calibrate_threshold: probability/ground-truth count mismatch");
    require(grid.count >= 1 && grid.step > 0.0, "calibrate_threshold: bad grid");

    CalibratedThreshold best;
    best.train_mean_dsc = -1.0;
    for (std::size_t i = 0; i < grid.count; ++i) {
        const double t = grid.level(i);
        double sum = 0.0;
        for (std::size_t c = 0; c < probs.size(); ++c)
            sum += dsc(threshold_volume(probs[c], t), gts[c]);
        const double mean = sum / static_cast<double>(probs.size());
        if (mean > best.train_mean_dsc) {
            best.train_mean_dsc = mean;
            best.threshold = t;
        }
    }
    return best;
}

}  // namespace hnseg

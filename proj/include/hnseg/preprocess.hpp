#pragma once

#include <cstddef>
#include <vector>

#include "hnseg/grid.hpp"
#include "hnseg/volume.hpp"

namespace hnseg {

// One axial slice cropped to the candidate box: windowed image in [0, 255]
// plus binary interior and boundary ground truth. slice_index is the absolute
// z index in the source volume, so stacking is invertible.
struct SlicePair {
    Grid2D image;
    Grid2D interior_gt;
    Grid2D boundary_gt;
    std::size_t slice_index = 0;
};

// Soft-tissue windowing: clamp to [lo, hi] and rescale to [0, 255]. Values
// stay real; quantization happens only on image export.
inline Volume hu_window(const Volume& v, double lo = -160.0, double hi = 240.0) {
    require(lo < hi, "hu_window: lo must be strictly below hi");
    Volume out = v;
    const double scale = 1.0 / (hi - lo);
    for (double& x : out.voxels) {
        double t = (x - lo) * scale;
        if (t < 0.0) t = 0.0;
        if (t > 1.0) t = 1.0;
        x = t * 255.0;
    }
    return out;
}

// Inner boundary: a pixel is boundary iff it is foreground and has at least
// one background 4-neighbor; the image border counts as background.
inline Grid2D boundary_from_mask(const Grid2D& interior) {
    for (double v : interior.values)
        require(v == 0.0 || v == 1.0, "boundary_from_mask: mask must be binary");
    Grid2D out(interior.height, interior.width, 1);
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(interior.height);
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(interior.width);
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            if (interior.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) == 0.0)
                continue;
            const std::ptrdiff_t ny[4] = {y - 1, y + 1, y, y};
            const std::ptrdiff_t nx[4] = {x, x, x - 1, x + 1};
            bool border = false;
            for (int k = 0; k < 4 && !border; ++k) {
                if (ny[k] < 0 || ny[k] >= h || nx[k] < 0 || nx[k] >= w)
                    border = true;  // outside the image counts as background
                else if (interior.at(static_cast<std::size_t>(ny[k]),
                                     static_cast<std::size_t>(nx[k])) == 0.0)
                    border = true;
            }
            if (border)
                out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = 1.0;
        }
    }
    return out;
}

// Crops the (already windowed) volume and its mask to the box and emits one
// SlicePair per axial index. Rows map to y, columns to x.
inline std::vector<SlicePair> extract_axial_slices(const Volume& v, const MaskVolume& m,
                                                   const BoundingBox& box) {
    require(v.dims == m.dims, "extract_axial_slices: volume/mask dims differ");
    require(v.in_bounds(box), "extract_axial_slices: box is empty or out of bounds");

    const std::size_t h = box.extent(1);
    const std::size_t w = box.extent(0);
    std::vector<SlicePair> slices;
    slices.reserve(box.extent(2));
    for (std::ptrdiff_t z = box.min[2]; z <= box.max[2]; ++z) {
        SlicePair s;
        s.slice_index = static_cast<std::size_t>(z);
        s.image = Grid2D(h, w, 1);
        s.interior_gt = Grid2D(h, w, 1);
        for (std::size_t row = 0; row < h; ++row) {
            const std::size_t y = static_cast<std::size_t>(box.min[1]) + row;
            for (std::size_t col = 0; col < w; ++col) {
                const std::size_t x = static_cast<std::size_t>(box.min[0]) + col;
                s.image.at(row, col) = v.at(x, y, static_cast<std::size_t>(z));
                s.interior_gt.at(row, col) =
                    m.at(x, y, static_cast<std::size_t>(z)) ? 1.0 : 0.0;
            }
        }
        s.boundary_gt = boundary_from_mask(s.interior_gt);
        slices.push_back(std::move(s));
    }
    return slices;
}

}  // namespace hnseg

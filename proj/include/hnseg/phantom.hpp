#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "hnseg/rng.hpp"
#include "hnseg/volume.hpp"

namespace hnseg {

struct PhantomSpec {
    std::array<std::size_t, 3> dims{32, 32, 24};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::size_t min_blobs = 3;
    std::size_t max_blobs = 6;
    double organ_mean_hu = 80.0;  // soft-tissue-like interior
    double organ_std_hu = 15.0;
    double background_mean_hu = -30.0;
    double background_std_hu = 40.0;
    double min_volume_fraction = 0.005;
    double max_volume_fraction = 0.05;
    double organ_radius_scale = 1.0;  // scales the ellipsoid radii band
    double surface_noise = 0.15;  // relative low-frequency boundary perturbation
    // Organ-like clutter: ellipsoids with organ intensity placed clear of the
    // organ. They stay out of the ground-truth mask, the way neighboring
    // soft-tissue structures share the target's HU range in real scans.
    std::size_t distractor_blobs = 3;
    double distractor_radius_scale = 0.7;  // relative to the organ blob radii
    std::uint64_t seed = 0;
};

namespace detail {

// Largest 6-connected foreground component, or empty when the mask is empty.
inline std::vector<std::uint8_t> largest_component(const std::vector<std::uint8_t>& mask,
                                                   const std::array<std::size_t, 3>& dims) {
    const std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(dims[0]);
    const std::ptrdiff_t ny = static_cast<std::ptrdiff_t>(dims[1]);
    const std::ptrdiff_t nz = static_cast<std::ptrdiff_t>(dims[2]);
    std::vector<int> comp(mask.size(), -1);
    std::vector<std::size_t> sizes;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (!mask[start] || comp[start] >= 0) continue;
        const int id = static_cast<int>(sizes.size());
        std::size_t count = 0;
        stack.push_back(start);
        comp[start] = id;
        while (!stack.empty()) {
            const std::size_t idx = stack.back();
            stack.pop_back();
            ++count;
            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(idx % dims[0]);
            const std::ptrdiff_t y = static_cast<std::ptrdiff_t>((idx / dims[0]) % dims[1]);
            const std::ptrdiff_t z = static_cast<std::ptrdiff_t>(idx / (dims[0] * dims[1]));
            constexpr std::ptrdiff_t off[6][3] = {{-1, 0, 0}, {1, 0, 0},  {0, -1, 0},
                                                  {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
            for (const auto& d : off) {
                const std::ptrdiff_t qx = x + d[0], qy = y + d[1], qz = z + d[2];
                if (qx < 0 || qx >= nx || qy < 0 || qy >= ny || qz < 0 || qz >= nz)
                    continue;
                const std::size_t qidx =
                    static_cast<std::size_t>((qz * ny + qy) * nx + qx);
                if (mask[qidx] && comp[qidx] < 0) {
                    comp[qidx] = id;
                    stack.push_back(qidx);
                }
            }
        }
        sizes.push_back(count);
    }
    std::vector<std::uint8_t> out(mask.size(), 0);
    if (sizes.empty()) return out;
    const int keep = static_cast<int>(
        std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    for (std::size_t i = 0; i < mask.size(); ++i) out[i] = (comp[i] == keep) ? 1 : 0;
    return out;
}

}  // namespace detail

// Synthetic organ-in-tissue volume: a connected blob built from a handful of
// overlapping ellipsoids near the volume center, with a low-frequency noise
// field perturbing the surface; interior and background intensities are drawn
// from separate Gaussians and clamped to a plausible HU range. Retries with
// derived seeds (bounded) until the blob is connected and its volume fraction
// falls inside the configured band.
inline std::pair<Volume, MaskVolume> generate_phantom(const PhantomSpec& spec) {
    for (int a = 0; a < 3; ++a)
        require(spec.dims[a] >= 8, "generate_phantom: dims must be at least 8 voxels");
    require(spec.min_blobs >= 1 && spec.min_blobs <= spec.max_blobs,
            "generate_phantom: bad blob count range");
    require(spec.min_volume_fraction > 0.0 &&
                spec.min_volume_fraction < spec.max_volume_fraction &&
                spec.max_volume_fraction < 0.5,
            "generate_phantom: bad volume fraction band");

    const double nx = static_cast<double>(spec.dims[0]);
    const double ny = static_cast<double>(spec.dims[1]);
    const double nz = static_cast<double>(spec.dims[2]);
    const std::size_t total = spec.dims[0] * spec.dims[1] * spec.dims[2];

    constexpr int kMaxAttempts = 100;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng(derive_seed(spec.seed, 0xA77 + static_cast<std::uint64_t>(attempt)));

        const std::size_t blobs =
            spec.min_blobs + rng.uniform_index(spec.max_blobs - spec.min_blobs + 1);
        struct Ellipsoid {
            std::array<double, 3> center;
            std::array<double, 3> radius;
        };
        std::vector<Ellipsoid> shapes;
        for (std::size_t b = 0; b < blobs; ++b) {
            Ellipsoid e;
            e.center = {nx * rng.uniform(0.40, 0.60), ny * rng.uniform(0.40, 0.60),
                        nz * rng.uniform(0.40, 0.60)};
            e.radius = {nx * rng.uniform(0.07, 0.14) * spec.organ_radius_scale,
                        ny * rng.uniform(0.07, 0.14) * spec.organ_radius_scale,
                        nz * rng.uniform(0.09, 0.18) * spec.organ_radius_scale};
            shapes.push_back(e);
        }

        // Low-frequency cosine field perturbing the implicit surface.
        struct Wave {
            std::array<double, 3> k;
            double phase;
            double amplitude;
        };
        std::vector<Wave> waves;
        for (int wv = 0; wv < 3; ++wv) {
            Wave w;
            for (int a = 0; a < 3; ++a)
                w.k[a] = static_cast<double>(1 + rng.uniform_index(2));
            w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            w.amplitude = rng.uniform(0.5, 1.0);
            waves.push_back(w);
        }
        auto noise = [&](double x, double y, double z) {
            double s = 0.0;
            for (const Wave& w : waves)
                s += w.amplitude *
                     std::cos(2.0 * std::numbers::pi *
                                  (w.k[0] * x / nx + w.k[1] * y / ny + w.k[2] * z / nz) +
                              w.phase);
            return spec.surface_noise * s / 3.0;
        };

        std::vector<std::uint8_t> raw(total, 0);
        std::size_t idx = 0;
        for (std::size_t z = 0; z < spec.dims[2]; ++z)
            for (std::size_t y = 0; y < spec.dims[1]; ++y)
                for (std::size_t x = 0; x < spec.dims[0]; ++x, ++idx) {
                    double q = std::numeric_limits<double>::infinity();
                    for (const Ellipsoid& e : shapes) {
                        const double dx = (static_cast<double>(x) - e.center[0]) / e.radius[0];
                        const double dy = (static_cast<double>(y) - e.center[1]) / e.radius[1];
                        const double dz = (static_cast<double>(z) - e.center[2]) / e.radius[2];
                        q = std::min(q, dx * dx + dy * dy + dz * dz);
                    }
                    if (q <= 1.0 + noise(static_cast<double>(x), static_cast<double>(y),
                                         static_cast<double>(z)))
                        raw[idx] = 1;
                }

        const std::vector<std::uint8_t> blob = detail::largest_component(raw, spec.dims);
        std::size_t fg = 0;
        for (auto v : blob) fg += v;
        const double fraction = static_cast<double>(fg) / static_cast<double>(total);
        if (fraction < spec.min_volume_fraction || fraction > spec.max_volume_fraction)
            continue;

        // Keep-out zone: the organ dilated by 3, so clutter never touches it.
        std::vector<std::uint8_t> zone = blob;
        for (int pass = 0; pass < 3; ++pass) {
            std::vector<std::uint8_t> next = zone;
            std::size_t p = 0;
            for (std::size_t z = 0; z < spec.dims[2]; ++z)
                for (std::size_t y = 0; y < spec.dims[1]; ++y)
                    for (std::size_t x = 0; x < spec.dims[0]; ++x, ++p) {
                        if (zone[p]) continue;
                        const bool near =
                            (x > 0 && zone[p - 1]) ||
                            (x + 1 < spec.dims[0] && zone[p + 1]) ||
                            (y > 0 && zone[p - spec.dims[0]]) ||
                            (y + 1 < spec.dims[1] && zone[p + spec.dims[0]]) ||
                            (z > 0 && zone[p - spec.dims[0] * spec.dims[1]]) ||
                            (z + 1 < spec.dims[2] && zone[p + spec.dims[0] * spec.dims[1]]);
                        if (near) next[p] = 1;
                    }
            zone = std::move(next);
        }

        std::vector<std::uint8_t> clutter(total, 0);
        for (std::size_t d = 0; d < spec.distractor_blobs; ++d) {
            for (int place = 0; place < 20; ++place) {
                Ellipsoid e;
                e.center = {nx * rng.uniform(0.15, 0.85), ny * rng.uniform(0.15, 0.85),
                            nz * rng.uniform(0.15, 0.85)};
                e.radius = {nx * rng.uniform(0.07, 0.14) * spec.distractor_radius_scale,
                            ny * rng.uniform(0.07, 0.14) * spec.distractor_radius_scale,
                            nz * rng.uniform(0.09, 0.18) * spec.distractor_radius_scale};
                std::vector<std::size_t> support;
                bool clear = true;
                std::size_t p = 0;
                for (std::size_t z = 0; z < spec.dims[2] && clear; ++z)
                    for (std::size_t y = 0; y < spec.dims[1] && clear; ++y)
                        for (std::size_t x = 0; x < spec.dims[0]; ++x, ++p) {
                            const double dx = (static_cast<double>(x) - e.center[0]) / e.radius[0];
                            const double dy = (static_cast<double>(y) - e.center[1]) / e.radius[1];
                            const double dz = (static_cast<double>(z) - e.center[2]) / e.radius[2];
                            if (dx * dx + dy * dy + dz * dz > 1.0) continue;
                            if (zone[p]) {
                                clear = false;
                                break;
                            }
                            support.push_back(p);
                        }
                if (!clear || support.empty()) continue;
                for (std::size_t s : support) clutter[s] = 1;
                break;  // placed; an unplaceable distractor is skipped
            }
        }

        Volume image(spec.dims[0], spec.dims[1], spec.dims[2]);
        image.spacing = spec.spacing;
        MaskVolume mask(spec.dims[0], spec.dims[1], spec.dims[2]);
        mask.spacing = spec.spacing;
        mask.voxels = blob;
        for (std::size_t i = 0; i < total; ++i) {
            const double v = (blob[i] || clutter[i])
                                 ? rng.normal(spec.organ_mean_hu, spec.organ_std_hu)
                                 : rng.normal(spec.background_mean_hu, spec.background_std_hu);
            image.voxels[i] = std::clamp(v, -1000.0, 1000.0);
        }
        return {std::move(image), std::move(mask)};
    }
    throw validation_error("generate_phantom: no admissible phantom after " +
                           std::to_string(kMaxAttempts) + " attempts");
}

// Stand-in for an upstream detector: the tight ground-truth box dilated by a
// fixed margin, each face independently jittered, clamped to the volume, then
// re-expanded where needed so the ground truth stays fully inside.
inline BoundingBox candidate_box(const MaskVolume& gt, std::size_t margin = 8,
                                 std::size_t jitter = 4, std::uint64_t seed = 0) {
    const BoundingBox tight = tight_box(gt);  // rejects empty masks
    Rng rng(derive_seed(seed, 0xB0C5));

    BoundingBox box;
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(margin);
    const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(jitter);
    for (int a = 0; a < 3; ++a) {
        box.min[a] = tight.min[a] - m + rng.uniform_int(-j, j);
        box.max[a] = tight.max[a] + m + rng.uniform_int(-j, j);
    }
    for (int a = 0; a < 3; ++a) {
        box.min[a] = std::max<std::ptrdiff_t>(box.min[a], 0);
        box.max[a] = std::min<std::ptrdiff_t>(box.max[a],
                                              static_cast<std::ptrdiff_t>(gt.dims[a]) - 1);
        // 100% recall by construction: never cut into the ground truth.
        box.min[a] = std::min(box.min[a], tight.min[a]);
        box.max[a] = std::max(box.max[a], tight.max[a]);
    }
    return box;
}

}  // namespace hnseg

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hnseg/phantom.hpp"

using namespace hnseg;

namespace {

// Connectivity oracle: BFS from any foreground voxel must reach them all.
bool mask_is_6_connected(const MaskVolume& m) {
    std::size_t first = m.voxels.size();
    std::size_t total = 0;
    for (std::size_t i = 0; i < m.voxels.size(); ++i)
        if (m.voxels[i]) {
            if (first == m.voxels.size()) first = i;
            ++total;
        }
    if (total == 0) return false;
    std::vector<char> seen(m.voxels.size(), 0);
    std::vector<std::size_t> queue = {first};
    seen[first] = 1;
    std::size_t reached = 0;
    const std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(m.dims[0]);
    const std::ptrdiff_t ny = static_cast<std::ptrdiff_t>(m.dims[1]);
    const std::ptrdiff_t nz = static_cast<std::ptrdiff_t>(m.dims[2]);
    while (!queue.empty()) {
        const std::size_t idx = queue.back();
        queue.pop_back();
        ++reached;
        const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(idx % m.dims[0]);
        const std::ptrdiff_t y = static_cast<std::ptrdiff_t>((idx / m.dims[0]) % m.dims[1]);
        const std::ptrdiff_t z = static_cast<std::ptrdiff_t>(idx / (m.dims[0] * m.dims[1]));
        const std::ptrdiff_t off[6][3] = {{-1, 0, 0}, {1, 0, 0},  {0, -1, 0},
                                          {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
        for (const auto& d : off) {
            const std::ptrdiff_t qx = x + d[0], qy = y + d[1], qz = z + d[2];
            if (qx < 0 || qx >= nx || qy < 0 || qy >= ny || qz < 0 || qz >= nz) continue;
            const std::size_t q = static_cast<std::size_t>((qz * ny + qy) * nx + qx);
            if (m.voxels[q] && !seen[q]) {
                seen[q] = 1;
                queue.push_back(q);
            }
        }
    }
    return reached == total;
}

}  // namespace

TEST(PhantomTest, DeterministicForFixedSeed) {
    PhantomSpec spec;
    spec.seed = 11;
    auto [img_a, mask_a] = generate_phantom(spec);
    auto [img_b, mask_b] = generate_phantom(spec);
    EXPECT_EQ(img_a.voxels, img_b.voxels);
    EXPECT_EQ(mask_a.voxels, mask_b.voxels);

    spec.seed = 12;
    auto [img_c, mask_c] = generate_phantom(spec);
    (void)img_c;
    EXPECT_NE(mask_a.voxels, mask_c.voxels);
}

TEST(PhantomTest, MaskIsConnectedAndInsideTheFractionBand) {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        PhantomSpec spec;
        spec.seed = seed;
        auto [img, mask] = generate_phantom(spec);
        EXPECT_TRUE(mask_is_6_connected(mask)) << "seed " << seed;
        const double fraction = static_cast<double>(mask.foreground_count()) /
                                static_cast<double>(mask.size());
        EXPECT_GE(fraction, spec.min_volume_fraction) << "seed " << seed;
        EXPECT_LE(fraction, spec.max_volume_fraction) << "seed " << seed;
        EXPECT_EQ(img.dims, spec.dims);
        EXPECT_EQ(mask.dims, spec.dims);
    }
}

TEST(PhantomTest, IntensitiesFollowTheTwoDistributions) {
    PhantomSpec spec;
    spec.dims = {40, 40, 32};
    spec.seed = 5;
    auto [img, mask] = generate_phantom(spec);

    double organ_sum = 0.0, bg_sum = 0.0;
    std::size_t organ_n = 0, bg_n = 0;
    for (std::size_t i = 0; i < img.voxels.size(); ++i) {
        if (mask.voxels[i]) {
            organ_sum += img.voxels[i];
            ++organ_n;
        } else {
            bg_sum += img.voxels[i];
            ++bg_n;
        }
        EXPECT_GE(img.voxels[i], -1000.0);
        EXPECT_LE(img.voxels[i], 1000.0);
    }
    ASSERT_GT(organ_n, 100u);
    // Means concentrate: organ sigma 15 over >100 samples, background sigma 40
    // over tens of thousands.
    EXPECT_NEAR(organ_sum / static_cast<double>(organ_n), 80.0,
                7.0 * 15.0 / std::sqrt(static_cast<double>(organ_n)) + 1.0);
    EXPECT_NEAR(bg_sum / static_cast<double>(bg_n), -30.0,
                7.0 * 40.0 / std::sqrt(static_cast<double>(bg_n)) + 1.0);
}

TEST(PhantomTest, RejectsBadSpecs) {
    PhantomSpec spec;
    spec.dims = {4, 32, 32};
    EXPECT_THROW(generate_phantom(spec), validation_error);
    spec = PhantomSpec{};
    spec.min_blobs = 0;
    EXPECT_THROW(generate_phantom(spec), validation_error);
    spec = PhantomSpec{};
    spec.min_volume_fraction = 0.05;
    spec.max_volume_fraction = 0.01;
    EXPECT_THROW(generate_phantom(spec), validation_error);
}

TEST(CandidateBoxTest, ContainsTheGroundTruthAndStaysInVolume) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        PhantomSpec spec;
        spec.seed = seed;
        auto [img, mask] = generate_phantom(spec);
        (void)img;
        const BoundingBox tight = tight_box(mask);
        const BoundingBox box = candidate_box(mask, 8, 4, seed);
        for (int a = 0; a < 3; ++a) {
            EXPECT_LE(box.min[a], tight.min[a]);
            EXPECT_GE(box.max[a], tight.max[a]);
            EXPECT_GE(box.min[a], 0);
            EXPECT_LT(box.max[a], static_cast<std::ptrdiff_t>(mask.dims[a]));
        }
    }
}

TEST(CandidateBoxTest, ZeroJitterGivesTheExactMargin) {
    MaskVolume gt(40, 40, 40);
    for (std::size_t z = 18; z <= 22; ++z)
        for (std::size_t y = 17; y <= 21; ++y)
            for (std::size_t x = 16; x <= 20; ++x) gt.at(x, y, z) = 1;
    const BoundingBox box = candidate_box(gt, 8, 0, 123);
    EXPECT_EQ(box.min[0], 8);
    EXPECT_EQ(box.max[0], 28);
    EXPECT_EQ(box.min[1], 9);
    EXPECT_EQ(box.max[1], 29);
    EXPECT_EQ(box.min[2], 10);
    EXPECT_EQ(box.max[2], 30);
}

TEST(CandidateBoxTest, ClampsToTheVolume) {
    MaskVolume gt(12, 12, 12);
    gt.at(1, 1, 1) = 1;
    gt.at(10, 10, 10) = 1;
    const BoundingBox box = candidate_box(gt, 8, 0, 0);
    for (int a = 0; a < 3; ++a) {
        EXPECT_EQ(box.min[a], 0);
        EXPECT_EQ(box.max[a], 11);
    }
}

TEST(CandidateBoxTest, DeterministicPerSeed) {
    PhantomSpec spec;
    spec.seed = 2;
    auto [img, mask] = generate_phantom(spec);
    (void)img;
    const BoundingBox a = candidate_box(mask, 8, 4, 7);
    const BoundingBox b = candidate_box(mask, 8, 4, 7);
    EXPECT_EQ(a.min, b.min);
    EXPECT_EQ(a.max, b.max);
    const BoundingBox c = candidate_box(mask, 8, 4, 8);
    EXPECT_TRUE(c.min != a.min || c.max != a.max);
}

TEST(CandidateBoxTest, RejectsEmptyMask) {
    EXPECT_THROW(candidate_box(MaskVolume(8, 8, 8)), validation_error);
}

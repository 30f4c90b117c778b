#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "hnseg/features.hpp"
#include "hnseg/rng.hpp"

using namespace hnseg;

namespace {

BoundingBox box_for(std::size_t w, std::size_t h, std::size_t d) {
    BoundingBox b;
    b.min = {0, 0, 0};
    b.max = {static_cast<std::ptrdiff_t>(w) - 1, static_cast<std::ptrdiff_t>(h) - 1,
             static_cast<std::ptrdiff_t>(d) - 1};
    return b;
}

Grid2D random_grid(std::size_t h, std::size_t w, Rng& rng, double lo, double hi) {
    Grid2D g(h, w, 1);
    for (double& v : g.values) v = rng.uniform(lo, hi);
    return g;
}

}  // namespace

TEST(FeatureTest, NamesAreCanonicalAndCount39) {
    const auto& names = feature_names();
    ASSERT_EQ(names.size(), kNumFeatures);
    ASSERT_EQ(kNumFeatures, 39u);
    EXPECT_EQ(names[0], "ct_mean");
    EXPECT_EQ(names[1], "ct_moment2");
    EXPECT_EQ(names[3], "ct_moment4");
    EXPECT_EQ(names[4], "ct_pct20");
    EXPECT_EQ(names[11], "ct_pct90");
    EXPECT_EQ(names[12], "hnni_mean");
    EXPECT_EQ(names[24], "hnnb_mean");
    EXPECT_EQ(names[35], "hnnb_pct90");
    EXPECT_EQ(names[36], "x_mean_norm");
    EXPECT_EQ(names[37], "y_mean_norm");
    EXPECT_EQ(names[38], "z_mean_norm");
    // All names are distinct.
    std::vector<std::string> sorted(names.begin(), names.end());
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(std::unique(sorted.begin(), sorted.end()), sorted.end());
}

TEST(FeatureTest, ConstantSuperpixelHasZeroMomentsAndFlatPercentiles) {
    const Grid2D ct(4, 5, 1, 123.0);
    const Grid2D pi(4, 5, 1, 0.7);
    const Grid2D pb(4, 5, 1, 0.2);
    std::vector<int> pixels = {0, 1, 5, 6, 11};
    const FeatureVector f = extract_features(pixels, ct, pi, pb, 0, box_for(5, 4, 3));

    EXPECT_DOUBLE_EQ(f[0], 123.0);
    for (int m = 1; m <= 3; ++m) EXPECT_EQ(f[m], 0.0);
    for (int p = 4; p < 12; ++p) EXPECT_DOUBLE_EQ(f[p], 123.0);
    EXPECT_DOUBLE_EQ(f[12], 0.7);
    for (int m = 13; m <= 15; ++m) EXPECT_EQ(f[m], 0.0);
    EXPECT_DOUBLE_EQ(f[24], 0.2);
    for (int p = 28; p < 36; ++p) EXPECT_DOUBLE_EQ(f[p], 0.2);
}

TEST(FeatureTest, MomentsMatchHandComputation) {
    // Values {0,1,2,3,4}: mean 2, m2 = 2, m3 = 0, m4 = 6.8.
    Grid2D ct(1, 5, 1);
    for (int x = 0; x < 5; ++x) ct.at(0, x) = x;
    const Grid2D pi(1, 5, 1, 0.5);
    const Grid2D pb(1, 5, 1, 0.5);
    const std::vector<int> pixels = {0, 1, 2, 3, 4};
    const FeatureVector f = extract_features(pixels, ct, pi, pb, 0, box_for(5, 1, 1));

    EXPECT_DOUBLE_EQ(f[0], 2.0);
    EXPECT_DOUBLE_EQ(f[1], 2.0);
    EXPECT_DOUBLE_EQ(f[2], 0.0);
    EXPECT_DOUBLE_EQ(f[3], 6.8);
    // pct20 rank = 0.2 * 4 = 0.8 -> 0 + 0.8*(1-0) = 0.8; pct50 -> 2; pct90 -> 3.6.
    EXPECT_DOUBLE_EQ(f[4], 0.8);
    EXPECT_DOUBLE_EQ(f[7], 2.0);
    EXPECT_DOUBLE_EQ(f[11], 3.6);
}

TEST(FeatureTest, PercentilesIgnoreInputOrder) {
    Rng rng(61);
    const Grid2D ct = random_grid(6, 7, rng, -100.0, 200.0);
    const Grid2D pi = random_grid(6, 7, rng, 0.0, 1.0);
    const Grid2D pb = random_grid(6, 7, rng, 0.0, 1.0);

    std::vector<int> pixels;
    for (int i = 0; i < 42; i += 2) pixels.push_back(i);
    const FeatureVector base = extract_features(pixels, ct, pi, pb, 1, box_for(7, 6, 4));

    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> shuffled = pixels;
        const std::vector<std::size_t> perm = rng.permutation(shuffled.size());
        std::vector<int> permuted(shuffled.size());
        for (std::size_t i = 0; i < perm.size(); ++i) permuted[i] = shuffled[perm[i]];
        const FeatureVector f = extract_features(permuted, ct, pi, pb, 1, box_for(7, 6, 4));
        for (std::size_t k = 0; k < kNumFeatures; ++k)
            ASSERT_EQ(f[k], base[k]) << "feature " << k << " trial " << trial;
    }
}

TEST(FeatureTest, CoordinateMeansAreBoxNormalized) {
    const Grid2D ct(5, 9, 1, 1.0);
    const Grid2D pi(5, 9, 1, 0.5);
    const Grid2D pb(5, 9, 1, 0.5);
    // Single pixel at (y=2, x=4): the exact center of a 5x9 crop.
    const std::vector<int> pixels = {2 * 9 + 4};
    BoundingBox box = box_for(9, 5, 7);
    const FeatureVector center = extract_features(pixels, ct, pi, pb, 3, box);
    EXPECT_DOUBLE_EQ(center[36], 0.5);
    EXPECT_DOUBLE_EQ(center[37], 0.5);
    EXPECT_DOUBLE_EQ(center[38], 0.5);

    const FeatureVector corner = extract_features({0}, ct, pi, pb, 0, box);
    EXPECT_DOUBLE_EQ(corner[36], 0.0);
    EXPECT_DOUBLE_EQ(corner[37], 0.0);
    EXPECT_DOUBLE_EQ(corner[38], 0.0);

    const FeatureVector far_pixel =
        extract_features({5 * 9 - 1}, ct, pi, pb, 6, box);
    EXPECT_DOUBLE_EQ(far_pixel[36], 1.0);
    EXPECT_DOUBLE_EQ(far_pixel[37], 1.0);
    EXPECT_DOUBLE_EQ(far_pixel[38], 1.0);
}

TEST(FeatureTest, OffsetBoxShiftsTheZOrigin) {
    const Grid2D ct(3, 3, 1, 1.0);
    const Grid2D pi(3, 3, 1, 0.5);
    const Grid2D pb(3, 3, 1, 0.5);
    BoundingBox box;
    box.min = {10, 20, 30};
    box.max = {12, 22, 34};
    const FeatureVector f = extract_features({4}, ct, pi, pb, 32, box);
    EXPECT_DOUBLE_EQ(f[38], 0.5);  // (32-30)/(5-1)
    EXPECT_DOUBLE_EQ(f[36], 0.5);
    EXPECT_DOUBLE_EQ(f[37], 0.5);
}

TEST(FeatureTest, DegenerateAxesPinToHalf) {
    const Grid2D ct(1, 4, 1, 1.0);
    const Grid2D pi(1, 4, 1, 0.5);
    const Grid2D pb(1, 4, 1, 0.5);
    BoundingBox box = box_for(4, 1, 1);
    const FeatureVector f = extract_features({3}, ct, pi, pb, 0, box);
    EXPECT_DOUBLE_EQ(f[36], 1.0);  // x axis has extent 4
    EXPECT_DOUBLE_EQ(f[37], 0.5);  // single-row axis
    EXPECT_DOUBLE_EQ(f[38], 0.5);  // single-slice axis
}

TEST(FeatureTest, SinglePixelPercentilesEqualTheValue) {
    Grid2D ct(2, 2, 1);
    ct.at(1, 1) = -42.0;
    const Grid2D pi(2, 2, 1, 0.5);
    const Grid2D pb(2, 2, 1, 0.5);
    const FeatureVector f = extract_features({3}, ct, pi, pb, 0, box_for(2, 2, 1));
    for (int p = 4; p < 12; ++p) EXPECT_DOUBLE_EQ(f[p], -42.0);
    EXPECT_DOUBLE_EQ(f[0], -42.0);
    EXPECT_EQ(f[1], 0.0);
}

TEST(FeatureTest, RejectsMalformedCalls) {
    const Grid2D ct(3, 3, 1, 1.0);
    const Grid2D pi(3, 3, 1, 0.5);
    const Grid2D pb(3, 3, 1, 0.5);
    const BoundingBox box = box_for(3, 3, 2);
    EXPECT_THROW(extract_features({}, ct, pi, pb, 0, box), validation_error);
    EXPECT_THROW(extract_features({9}, ct, pi, pb, 0, box), validation_error);
    EXPECT_THROW(extract_features({-1}, ct, pi, pb, 0, box), validation_error);
    EXPECT_THROW(extract_features({0}, ct, pi, pb, 5, box), validation_error);  // z outside
    EXPECT_THROW(extract_features({0}, ct, pi, Grid2D(4, 3, 1), 0, box), validation_error);
    EXPECT_THROW(extract_features({0}, Grid2D(4, 4, 1), pi, pb, 0, box), validation_error);
}

#include <gtest/gtest.h>

#include <vector>

#include "hnseg/aggregate.hpp"
#include "hnseg/preprocess.hpp"
#include "hnseg/rng.hpp"

using namespace hnseg;

namespace {

Proposal make_proposal(std::vector<int> pixels, int level = 1) {
    Proposal p;
    p.pixels = std::move(pixels);
    p.level = level;
    return p;
}

// Two level-1 halves of a 2x4 grid plus one level-2 union.
ProposalSet two_plus_union() {
    ProposalSet set;
    set.height = 2;
    set.width = 4;
    set.num_level1 = 2;
    set.proposals.push_back(make_proposal({0, 1, 4, 5}));
    set.proposals.push_back(make_proposal({2, 3, 6, 7}));
    set.proposals.push_back(make_proposal({0, 1, 2, 3, 4, 5, 6, 7}, 2));
    return set;
}

}  // namespace

TEST(LabelProposalTest, ThresholdsOnInsideFraction) {
    Grid2D gt(2, 4, 1);
    gt.at(0, 0) = gt.at(0, 1) = gt.at(1, 0) = 1.0;  // 3 of the left half
    const Proposal left = make_proposal({0, 1, 4, 5});
    EXPECT_EQ(label_proposal(left, gt, 0.5), 1);   // 0.75 >= 0.5
    EXPECT_EQ(label_proposal(left, gt, 0.75), 1);  // boundary is inclusive
    EXPECT_EQ(label_proposal(left, gt, 0.8), 0);
    const Proposal right = make_proposal({2, 3, 6, 7});
    EXPECT_EQ(label_proposal(right, gt), 0);
}

TEST(LabelProposalTest, ValidatesArguments) {
    Grid2D gt(2, 4, 1);
    EXPECT_THROW(label_proposal(make_proposal({}), gt), validation_error);
    EXPECT_THROW(label_proposal(make_proposal({0}), gt, 0.0), validation_error);
    EXPECT_THROW(label_proposal(make_proposal({0}), gt, 1.5), validation_error);
    EXPECT_EQ(label_proposal(make_proposal({0}), gt, 1.0), 0);
}

TEST(RfProbabilityMapTest, MaxCombineTakesStrongestCover) {
    const ProposalSet set = two_plus_union();
    const Grid2D prob = rf_probability_map(set, {0.2, 0.7, 0.4}, PixelCombine::max);
    // Left pixels: max(0.2, 0.4) = 0.4; right: max(0.7, 0.4) = 0.7.
    for (int idx : set.proposals[0].pixels) EXPECT_DOUBLE_EQ(prob.values[idx], 0.4);
    for (int idx : set.proposals[1].pixels) EXPECT_DOUBLE_EQ(prob.values[idx], 0.7);
}

TEST(RfProbabilityMapTest, MeanCombineAverages) {
    const ProposalSet set = two_plus_union();
    const Grid2D prob = rf_probability_map(set, {0.2, 0.7, 0.4}, PixelCombine::mean);
    for (int idx : set.proposals[0].pixels)
        EXPECT_DOUBLE_EQ(prob.values[idx], (0.2 + 0.4) / 2.0);
    for (int idx : set.proposals[1].pixels)
        EXPECT_DOUBLE_EQ(prob.values[idx], (0.7 + 0.4) / 2.0);
}

TEST(RfProbabilityMapTest, RequiresOneProbPerProposal) {
    const ProposalSet set = two_plus_union();
    EXPECT_THROW(rf_probability_map(set, {0.2, 0.7}), validation_error);
}

TEST(ThresholdTest, MapAndVolumeUseInclusiveComparison) {
    Grid2D prob(1, 3, 1);
    prob.at(0, 0) = 0.49;
    prob.at(0, 1) = 0.5;
    prob.at(0, 2) = 0.51;
    const Grid2D mask = threshold_map(prob, 0.5);
    EXPECT_EQ(mask.at(0, 0), 0.0);
    EXPECT_EQ(mask.at(0, 1), 1.0);  // prob == threshold is foreground
    EXPECT_EQ(mask.at(0, 2), 1.0);

    Volume v(3, 1, 1);
    v.at(0, 0, 0) = 0.49;
    v.at(1, 0, 0) = 0.5;
    v.at(2, 0, 0) = 0.51;
    const MaskVolume mv = threshold_volume(v, 0.5);
    EXPECT_EQ(mv.at(0, 0, 0), 0);
    EXPECT_EQ(mv.at(1, 0, 0), 1);
    EXPECT_EQ(mv.at(2, 0, 0), 1);
    EXPECT_EQ(mv.spacing, v.spacing);
}

TEST(StackTest, PlacesSlicesInsideTheBoxAndZeroElsewhere) {
    BoundingBox box;
    box.min = {1, 2, 3};
    box.max = {3, 4, 5};
    std::vector<Grid2D> slices(3, Grid2D(3, 3, 1));
    slices[1].at(0, 0) = 1.0;  // crop (row 0, col 0) of z = 4
    slices[2].at(2, 2) = 1.0;

    const MaskVolume out = stack_to_volume(slices, box, {6, 7, 8}, {1.0, 1.0, 2.0});
    EXPECT_EQ(out.dims[0], 6u);
    EXPECT_EQ(out.foreground_count(), 2u);
    EXPECT_EQ(out.at(1, 2, 4), 1);
    EXPECT_EQ(out.at(3, 4, 5), 1);
    EXPECT_EQ(out.spacing[2], 2.0);
}

TEST(StackTest, RoundTripsThroughExtraction) {
    // stack(extract(m)) == m when the box covers the whole foreground.
    Rng rng(81);
    MaskVolume m(7, 6, 5);
    for (auto& v : m.voxels) v = rng.uniform() < 0.3 ? 1 : 0;
    m.at(0, 0, 0) = 1;
    m.at(6, 5, 4) = 1;  // stretch the box to the full volume
    Volume img(7, 6, 5);
    BoundingBox box;
    box.max = {6, 5, 4};

    const auto slices = extract_axial_slices(img, m, box);
    std::vector<Grid2D> masks;
    for (const auto& s : slices) masks.push_back(s.interior_gt);
    const MaskVolume rebuilt = stack_to_volume(masks, box, m.dims, m.spacing);
    EXPECT_EQ(rebuilt.voxels, m.voxels);
}

TEST(StackTest, ValidatesShapes) {
    BoundingBox box;
    box.min = {0, 0, 0};
    box.max = {2, 2, 1};
    std::vector<Grid2D> slices(2, Grid2D(3, 3, 1));
    EXPECT_NO_THROW(stack_to_volume(slices, box, {4, 4, 4}, {1, 1, 1}));
    // Wrong slice count.
    EXPECT_THROW(stack_to_volume({slices[0]}, box, {4, 4, 4}, {1, 1, 1}), validation_error);
    // Box exceeding dims.
    EXPECT_THROW(stack_to_volume(slices, box, {2, 4, 4}, {1, 1, 1}), validation_error);
    // Wrong slice shape.
    std::vector<Grid2D> bad(2, Grid2D(3, 4, 1));
    EXPECT_THROW(stack_to_volume(bad, box, {4, 4, 4}, {1, 1, 1}), validation_error);
    // Non-binary mask value.
    slices[0].at(1, 1) = 0.5;
    EXPECT_THROW(stack_to_volume(slices, box, {4, 4, 4}, {1, 1, 1}), validation_error);
}

TEST(StackTest, ProbVolumeKeepsExactValues) {
    BoundingBox box;
    box.min = {1, 1, 1};
    box.max = {2, 2, 2};
    Rng rng(82);
    std::vector<Grid2D> slices(2, Grid2D(2, 2, 1));
    for (auto& s : slices)
        for (double& v : s.values) v = rng.uniform();

    const Volume out = stack_probs_to_volume(slices, box, {4, 4, 4}, {1, 1, 1});
    EXPECT_EQ(out.at(0, 0, 0), 0.0);
    for (std::size_t z = 0; z < 2; ++z)
        for (std::size_t y = 0; y < 2; ++y)
            for (std::size_t x = 0; x < 2; ++x)
                EXPECT_EQ(out.at(1 + x, 1 + y, 1 + z), slices[z].at(y, x));
}

TEST(StackThresholdTest, ThresholdCommutesWithStacking) {
    // threshold(stack(probs)) == stack(threshold(probs)).
    Rng rng(83);
    BoundingBox box;
    box.min = {0, 1, 0};
    box.max = {3, 4, 2};
    std::vector<Grid2D> probs(3, Grid2D(4, 4, 1));
    for (auto& s : probs)
        for (double& v : s.values) v = rng.uniform();

    const Volume pv = stack_probs_to_volume(probs, box, {5, 6, 3}, {1, 1, 1});
    const MaskVolume a = threshold_volume(pv, 0.6);

    std::vector<Grid2D> masks;
    for (const auto& s : probs) masks.push_back(threshold_map(s, 0.6));
    const MaskVolume b = stack_to_volume(masks, box, {5, 6, 3}, {1, 1, 1});
    // Outside the box the probability volume is zero and 0 < 0.6.
    EXPECT_EQ(a.voxels, b.voxels);
}

TEST(CalibrateTest, PerfectPredictorPicksLowestThreshold) {
    // Probabilities equal to the mask: every threshold in (0,1] yields Dice 1,
    // so the sweep keeps the lowest grid level.
    MaskVolume gt(4, 4, 2);
    gt.at(1, 1, 0) = gt.at(2, 2, 1) = 1;
    Volume prob(4, 4, 2);
    for (std::size_t i = 0; i < prob.voxels.size(); ++i)
        prob.voxels[i] = gt.voxels[i] ? 1.0 : 0.0;

    const CalibratedThreshold cal = calibrate_threshold({prob}, {gt});
    EXPECT_DOUBLE_EQ(cal.threshold, 0.05);
    EXPECT_DOUBLE_EQ(cal.train_mean_dsc, 1.0);
}

TEST(CalibrateTest, FindsTheSeparatingLevel) {
    // Foreground probability 0.62, background 0.41: thresholds in (0.41, 0.62]
    // are perfect, others are not. Lowest perfect grid level is 0.45.
    MaskVolume gt(3, 3, 3);
    gt.at(1, 1, 1) = gt.at(2, 1, 1) = 1;
    Volume prob(3, 3, 3, 0.41);
    prob.at(1, 1, 1) = prob.at(2, 1, 1) = 0.62;

    const CalibratedThreshold cal = calibrate_threshold({prob}, {gt});
    EXPECT_DOUBLE_EQ(cal.threshold, 0.45);
    EXPECT_DOUBLE_EQ(cal.train_mean_dsc, 1.0);
}

TEST(CalibrateTest, AveragesAcrossCases) {
    // Case 1 prefers low thresholds, case 2 high; the sweep maximizes the mean.
    MaskVolume gt1(2, 1, 1);
    gt1.voxels = {1, 1};
    Volume p1(2, 1, 1);
    p1.voxels = {0.3, 0.9};  // t <= 0.3: dsc 1; 0.3 < t <= 0.9: dsc 2/3

    MaskVolume gt2(2, 1, 1);
    gt2.voxels = {0, 1};
    Volume p2(2, 1, 1);
    p2.voxels = {0.4, 0.9};  // t <= 0.4: dsc 2/3; 0.4 < t <= 0.9: dsc 1

    const CalibratedThreshold cal = calibrate_threshold({p1, p2}, {gt1, gt2});
    // Mean is (1 + 2/3)/2 for t in [0.05, 0.3] and (2/3 + 1)/2 for (0.4, 0.9]:
    // tie at 5/6 resolves to the lowest level.
    EXPECT_DOUBLE_EQ(cal.threshold, 0.05);
    EXPECT_NEAR(cal.train_mean_dsc, 5.0 / 6.0, 1e-12);
}

TEST(CalibrateTest, ValidatesInputs) {
    EXPECT_THROW(calibrate_threshold({}, {}), validation_error);
    MaskVolume gt(2, 2, 2);
    gt.at(0, 0, 0) = 1;
    Volume prob(2, 2, 2);
    EXPECT_THROW(calibrate_threshold({prob}, {gt, gt}), validation_error);
    ThresholdGrid bad;
    bad.step = 0.0;
    EXPECT_THROW(calibrate_threshold({prob}, {gt}, bad), validation_error);
}

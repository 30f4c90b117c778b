#include <gtest/gtest.h>

#include <cstddef>
#include <filesystem>
#include <vector>

#include "hnseg/forest.hpp"
#include "hnseg/model_io.hpp"
#include "hnseg/rng.hpp"

using namespace hnseg;

namespace {

// Two point masses with a clean margin: every bootstrap that sees both
// classes splits at exactly 0.5.
void two_cluster_data(std::size_t n, std::vector<std::vector<double>>* x,
                      std::vector<int>* labels, Rng* rng) {
    for (std::size_t i = 0; i < n; ++i) {
        const int label = i % 2;
        x->push_back({label ? 0.7 : 0.3, rng ? rng->uniform() : 0.0});
        labels->push_back(label);
    }
}

bool same_tree(const DecisionTree& a, const DecisionTree& b) {
    if (a.nodes.size() != b.nodes.size()) return false;
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        const TreeNode &na = a.nodes[i], &nb = b.nodes[i];
        if (na.feature != nb.feature || na.threshold != nb.threshold ||
            na.left != nb.left || na.right != nb.right || na.prob != nb.prob)
            return false;
    }
    return true;
}

}  // namespace

TEST(ForestTest, RejectsDegenerateTrainingSets) {
    ForestConfig cfg;
    cfg.trees = 2;
    std::vector<std::vector<double>> x = {{0.1, 0.2}, {0.3, 0.4}};
    EXPECT_THROW(rf_train(x, {0, 0}, cfg), validation_error);
    EXPECT_THROW(rf_train(x, {1, 1}, cfg), validation_error);
    EXPECT_THROW(rf_train(x, {0, 2}, cfg), validation_error);
    EXPECT_THROW(rf_train(x, {0}, cfg), validation_error);
    EXPECT_THROW(rf_train({}, {}, cfg), validation_error);
    EXPECT_THROW(rf_train({{0.1}, {0.2, 0.3}}, {0, 1}, cfg), validation_error);
    cfg.trees = 0;
    EXPECT_THROW(rf_train(x, {0, 1}, cfg), validation_error);
}

TEST(ForestTest, DeterministicForFixedSeed) {
    Rng rng(71);
    std::vector<std::vector<double>> x;
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) {
        x.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
        labels.push_back(i % 2);
    }
    ForestConfig cfg;
    cfg.trees = 5;
    cfg.mtry = 2;
    cfg.seed = 17;
    const ForestModel a = rf_train(x, labels, cfg);
    const ForestModel b = rf_train(x, labels, cfg);
    ASSERT_EQ(a.trees.size(), 5u);
    for (std::size_t t = 0; t < 5; ++t) EXPECT_TRUE(same_tree(a.trees[t], b.trees[t]));

    cfg.seed = 18;
    const ForestModel c = rf_train(x, labels, cfg);
    bool any_differ = false;
    for (std::size_t t = 0; t < 5; ++t) any_differ |= !same_tree(a.trees[t], c.trees[t]);
    EXPECT_TRUE(any_differ);
}

TEST(ForestTest, SingleTreeReproducesSeparableTraining) {
    std::vector<std::vector<double>> x;
    std::vector<int> labels;
    two_cluster_data(30, &x, &labels, nullptr);
    ForestConfig cfg;
    cfg.trees = 1;
    cfg.mtry = 2;
    cfg.seed = 3;
    const ForestModel model = rf_train(x, labels, cfg);
    // Root split at the midpoint 0.5, two pure leaves.
    ASSERT_EQ(model.trees[0].nodes.size(), 3u);
    EXPECT_EQ(model.trees[0].nodes[0].feature, 0);
    EXPECT_DOUBLE_EQ(model.trees[0].nodes[0].threshold, 0.5);
    for (std::size_t i = 0; i < x.size(); ++i)
        EXPECT_EQ(rf_predict(model, x[i]), static_cast<double>(labels[i]));
}

TEST(ForestTest, BaggedForestSeparatesWithMargin) {
    Rng rng(72);
    std::vector<std::vector<double>> x;
    std::vector<int> labels;
    two_cluster_data(40, &x, &labels, &rng);
    ForestConfig cfg;
    cfg.trees = 30;
    cfg.mtry = 2;
    cfg.seed = 9;
    const ForestModel model = rf_train(x, labels, cfg);
    // Held-out points deep inside each cluster.
    EXPECT_LT(rf_predict(model, {0.1, 0.5}), 0.05);
    EXPECT_GT(rf_predict(model, {0.9, 0.5}), 0.95);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double p = rf_predict(model, x[i]);
        EXPECT_NEAR(p, static_cast<double>(labels[i]), 0.05) << "sample " << i;
    }
}

TEST(ForestTest, MtryZeroDefaultsToSqrtOfFeatureCount) {
    Rng rng(73);
    std::vector<std::vector<double>> x;
    std::vector<int> labels;
    for (int i = 0; i < 20; ++i) {
        std::vector<double> row(39);
        for (double& v : row) v = rng.uniform();
        x.push_back(std::move(row));
        labels.push_back(i % 2);
    }
    ForestConfig cfg;
    cfg.trees = 1;
    cfg.mtry = 0;
    const ForestModel model = rf_train(x, labels, cfg);
    EXPECT_EQ(model.config.mtry, 6u);  // floor(sqrt(39))
    EXPECT_EQ(model.num_features, 39u);

    // And for a 4-feature problem the default is 2.
    std::vector<std::vector<double>> x4;
    std::vector<int> l4;
    for (int i = 0; i < 10; ++i) {
        x4.push_back({rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()});
        l4.push_back(i % 2);
    }
    EXPECT_EQ(rf_train(x4, l4, cfg).config.mtry, 2u);
}

TEST(ForestTest, LearnsAnAxisAlignedConjunction) {
    Rng rng(74);
    std::vector<std::vector<double>> x;
    std::vector<int> labels;
    for (int i = 0; i < 200; ++i) {
        const double a = rng.uniform(), b = rng.uniform();
        x.push_back({a, b});
        labels.push_back(a > 0.5 && b > 0.5 ? 1 : 0);
    }
    ForestConfig cfg;
    cfg.trees = 25;
    cfg.mtry = 2;
    cfg.seed = 4;
    const ForestModel model = rf_train(x, labels, cfg);
    EXPECT_GT(rf_predict(model, {0.9, 0.9}), 0.8);
    EXPECT_LT(rf_predict(model, {0.9, 0.1}), 0.2);
    EXPECT_LT(rf_predict(model, {0.1, 0.9}), 0.2);
    EXPECT_LT(rf_predict(model, {0.1, 0.1}), 0.2);
}

TEST(ForestTest, PredictValidatesFeatureCount) {
    std::vector<std::vector<double>> x;
    std::vector<int> labels;
    two_cluster_data(10, &x, &labels, nullptr);
    ForestConfig cfg;
    cfg.trees = 1;
    const ForestModel model = rf_train(x, labels, cfg);
    EXPECT_THROW(rf_predict(model, {0.5}), validation_error);
    EXPECT_THROW(rf_predict(ForestModel{}, {0.5, 0.5}), validation_error);
}

TEST(ForestIoTest, RoundTripPreservesEveryNode) {
    Rng rng(75);
    std::vector<std::vector<double>> x;
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) {
        x.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
        labels.push_back(rng.uniform() < 0.5 ? 0 : 1);
    }
    std::size_t pos = 0;
    for (int l : labels) pos += l;
    ASSERT_GT(pos, 0u);
    ASSERT_LT(pos, labels.size());

    ForestConfig cfg;
    cfg.trees = 7;
    cfg.mtry = 2;
    cfg.seed = 99;
    const ForestModel model = rf_train(x, labels, cfg);

    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "hnseg_forest_roundtrip.bin";
    save_forest(model, path);
    const ForestModel loaded = load_forest(path);
    fs::remove(path);

    EXPECT_EQ(loaded.config.seed, model.config.seed);
    EXPECT_EQ(loaded.config.trees, model.config.trees);
    EXPECT_EQ(loaded.config.mtry, model.config.mtry);
    EXPECT_EQ(loaded.num_features, model.num_features);
    ASSERT_EQ(loaded.trees.size(), model.trees.size());
    for (std::size_t t = 0; t < model.trees.size(); ++t)
        EXPECT_TRUE(same_tree(loaded.trees[t], model.trees[t]));
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<double> q = {rng.uniform(), rng.uniform(), rng.uniform()};
        EXPECT_EQ(rf_predict(loaded, q), rf_predict(model, q));
    }
}

TEST(ForestIoTest, RejectsCorruptNodeIndices) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path();

    ForestModel bad_feature;
    bad_feature.num_features = 3;
    bad_feature.config.trees = 1;
    DecisionTree t1;
    t1.nodes.push_back({5, 0.5, -1, -1, 0.0});  // feature 5 of 3
    bad_feature.trees.push_back(t1);
    save_forest(bad_feature, dir / "hnseg_badfeat.bin");
    EXPECT_THROW(load_forest(dir / "hnseg_badfeat.bin"), validation_error);

    ForestModel bad_child;
    bad_child.num_features = 3;
    bad_child.config.trees = 1;
    DecisionTree t2;
    t2.nodes.push_back({0, 0.5, 7, 0, 0.0});  // left child out of range
    bad_child.trees.push_back(t2);
    save_forest(bad_child, dir / "hnseg_badchild.bin");
    EXPECT_THROW(load_forest(dir / "hnseg_badchild.bin"), validation_error);

    ForestModel empty_tree;
    empty_tree.num_features = 3;
    empty_tree.config.trees = 1;
    empty_tree.trees.push_back(DecisionTree{});
    save_forest(empty_tree, dir / "hnseg_emptytree.bin");
    EXPECT_THROW(load_forest(dir / "hnseg_emptytree.bin"), validation_error);

    fs::remove(dir / "hnseg_badfeat.bin");
    fs::remove(dir / "hnseg_badchild.bin");
    fs::remove(dir / "hnseg_emptytree.bin");
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "hnseg/errors.hpp"
#include "hnseg/rng.hpp"

namespace hnseg {

struct ForestConfig {
    std::size_t trees = 50;
    std::size_t mtry = 6;  // features sampled per split; 0 = floor(sqrt(d))
    std::uint64_t seed = 0;
};

// Flat binary tree; leaves carry the positive fraction of their samples.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double prob = 0.0;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;
};

struct ForestModel {
    ForestConfig config;
    std::size_t num_features = 0;
    std::vector<DecisionTree> trees;
};

namespace detail {

// Gini-best split over midpoints of consecutive distinct values. Returns the
// weighted child impurity; kNoSplit when no candidate separates the samples.
inline constexpr double kNoSplit = 2.0;

inline double best_threshold_for_feature(const std::vector<std::vector<double>>& x,
                                         const std::vector<int>& labels,
                                         const std::vector<int>& samples,
                                         std::size_t feature, double* out_threshold) {
    struct Pair {
        double value;
        int label;
    };
    std::vector<Pair> sorted;
    sorted.reserve(samples.size());
    for (int s : samples) sorted.push_back({x[s][feature], labels[s]});
    std::sort(sorted.begin(), sorted.end(),
              [](const Pair& a, const Pair& b) { return a.value < b.value; });

    const double n = static_cast<double>(sorted.size());
    double total_pos = 0.0;
    for (const Pair& p : sorted) total_pos += p.label;

    double best = kNoSplit;
    double left_n = 0.0, left_pos = 0.0;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        left_n += 1.0;
        left_pos += sorted[i].label;
        if (sorted[i].value == sorted[i + 1].value) continue;
        const double right_n = n - left_n;
        const double right_pos = total_pos - left_pos;
        const double pl = left_pos / left_n, pr = right_pos / right_n;
        const double gini_l = 1.0 - pl * pl - (1.0 - pl) * (1.0 - pl);
        const double gini_r = 1.0 - pr * pr - (1.0 - pr) * (1.0 - pr);
        const double weighted = (left_n * gini_l + right_n * gini_r) / n;
        if (weighted < best) {
            best = weighted;
            *out_threshold = 0.5 * (sorted[i].value + sorted[i + 1].value);
        }
    }
    return best;
}

inline int grow_tree(DecisionTree& tree, const std::vector<std::vector<double>>& x,
                     const std::vector<int>& labels, std::vector<int> samples,
                     std::size_t num_features, std::size_t mtry, Rng& rng) {
    double pos = 0.0;
    for (int s : samples) pos += labels[s];
    const double frac = pos / static_cast<double>(samples.size());

    auto make_leaf = [&] {
        TreeNode leaf;
        leaf.prob = frac;
        tree.nodes.push_back(leaf);
        return static_cast<int>(tree.nodes.size() - 1);
    };
    if (samples.size() < 2 || frac == 0.0 || frac == 1.0) return make_leaf();

    // Sample mtry distinct candidate features (partial Fisher-Yates).
    std::vector<std::size_t> candidates(num_features);
    for (std::size_t i = 0; i < num_features; ++i) candidates[i] = i;
    const std::size_t k = std::min(mtry, num_features);
    for (std::size_t i = 0; i < k; ++i)
        std::swap(candidates[i], candidates[i + rng.uniform_index(num_features - i)]);
    candidates.resize(k);

    std::size_t best_feature = 0;
    double best_threshold = 0.0, best_impurity = kNoSplit;
    for (std::size_t f : candidates) {
        double threshold = 0.0;
        const double impurity = best_threshold_for_feature(x, labels, samples, f, &threshold);
        if (impurity < best_impurity) {
            best_impurity = impurity;
            best_feature = f;
            best_threshold = threshold;
        }
    }
    if (best_impurity >= kNoSplit) return make_leaf();  // all candidates constant

    std::vector<int> left, right;
    for (int s : samples) (x[s][best_feature] < best_threshold ? left : right).push_back(s);
    samples.clear();
    samples.shrink_to_fit();

    const int node_index = static_cast<int>(tree.nodes.size());
    TreeNode node;
    node.feature = static_cast<int>(best_feature);
    node.threshold = best_threshold;
    tree.nodes.push_back(node);
    const int l = grow_tree(tree, x, labels, std::move(left), num_features, mtry, rng);
    const int r = grow_tree(tree, x, labels, std::move(right), num_features, mtry, rng);
    tree.nodes[node_index].left = l;
    tree.nodes[node_index].right = r;
    return node_index;
}

}  // namespace detail

// Bagged Gini forest for binary labels. Each tree draws its own bootstrap
// sample and feature subsets from a seed-derived stream, so training is
// deterministic for a fixed config.
inline ForestModel rf_train(const std::vector<std::vector<double>>& x,
                            const std::vector<int>& labels, const ForestConfig& config) {
    require(!x.empty(), "rf_train: empty training set");
    require(x.size() == labels.size(), "rf_train: feature/label count mismatch");
    const std::size_t d = x.front().size();
    require(d >= 1, "rf_train: need at least one feature");
    for (const auto& row : x)
        require(row.size() == d, "rf_train: ragged feature matrix");
    std::size_t pos = 0;
    for (int l : labels) {
        require(l == 0 || l == 1, "rf_train: labels must be 0 or 1");
        pos += l;
    }
    require(pos > 0 && pos < labels.size(),
            "rf_train: training set contains a single class");
    require(config.trees >= 1, "rf_train: need at least one tree");

    ForestModel model;
    model.config = config;
    if (model.config.mtry == 0)
        model.config.mtry = static_cast<std::size_t>(std::max(
            1.0, std::floor(std::sqrt(static_cast<double>(d)))));
    model.num_features = d;

    const std::size_t n = x.size();
    for (std::size_t t = 0; t < config.trees; ++t) {
        Rng rng(derive_seed(config.seed, 0xF0 + t));
        std::vector<int> bag(n);
        for (std::size_t i = 0; i < n; ++i)
            bag[i] = static_cast<int>(rng.uniform_index(n));
        DecisionTree tree;
        detail::grow_tree(tree, x, labels, std::move(bag), d, model.config.mtry, rng);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

// Mean leaf probability over all trees.
inline double rf_predict(const ForestModel& model, const std::vector<double>& features) {
    require(!model.trees.empty(), "rf_predict: model has no trees");
    require(features.size() == model.num_features,
            "rf_predict: feature count mismatch");
    double sum = 0.0;
    for (const DecisionTree& tree : model.trees) {
        int node = 0;
        while (tree.nodes[node].feature >= 0)
            node = features[tree.nodes[node].feature] < tree.nodes[node].threshold
                       ? tree.nodes[node].left
                       : tree.nodes[node].right;
        sum += tree.nodes[node].prob;
    }
    return sum / static_cast<double>(model.trees.size());
}

}  // namespace hnseg

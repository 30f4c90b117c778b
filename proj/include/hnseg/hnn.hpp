#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hnseg/conv.hpp"
#include "hnseg/grid.hpp"
#include "hnseg/preprocess.hpp"
#include "hnseg/resize.hpp"
#include "hnseg/rng.hpp"

namespace hnseg {

// Multi-stage convolutional trunk with per-stage side-output classifiers and
// a learned weighted fusion of the upsampled side activations.
struct HnnConfig {
    std::size_t num_stages = 3;  // M
    std::size_t convs_per_stage = 2;
    std::size_t base_channels = 8;
    std::vector<std::size_t> stage_strides = {1, 2, 4};  // cumulative scale per stage
    std::vector<double> side_loss_weights = {};          // alpha_m; empty = all ones
    double learning_rate = 0.001;
    std::size_t epochs = 30;
    std::size_t batch_size = 1;
    std::uint64_t seed = 0;
    bool balanced_fusion = true;  // class-balanced fusion loss (switchable)

    std::vector<double> alphas() const {
        if (!side_loss_weights.empty()) return side_loss_weights;
        return std::vector<double>(num_stages, 1.0);
    }
};

inline void validate_config(const HnnConfig& c) {
    require(c.num_stages >= 2, "HnnConfig: need at least 2 stages");
    require(c.convs_per_stage >= 1, "HnnConfig: need at least 1 conv per stage");
    require(c.base_channels >= 1, "HnnConfig: base_channels must be positive");
    require(c.stage_strides.size() == c.num_stages,
            "HnnConfig: stage_strides must have one entry per stage");
    std::size_t prev = 1;
    for (std::size_t s : c.stage_strides) {
        require(s == prev || s == 2 * prev,
                "HnnConfig: cumulative strides must grow by a factor of 1 or 2");
        prev = s;
    }
    require(c.learning_rate > 0.0, "HnnConfig: learning rate must be positive");
    require(c.epochs >= 1, "HnnConfig: epochs must be positive");
    require(c.batch_size >= 1, "HnnConfig: batch size must be positive");
    for (double a : c.alphas())
        require(a >= 0.0, "HnnConfig: side loss weights must be non-negative");
}

// Full parameter snapshot: trunk convolutions, one 1x1 side classifier per
// stage, and the fusion weights h.
struct NetworkParams {
    std::vector<std::vector<ConvLayer>> trunk;  // [stage][conv]
    std::vector<ConvLayer> side_classifiers;    // 1x1, one per stage
    std::vector<double> fusion_weights;         // h, one per stage

    std::size_t num_stages() const { return trunk.size(); }
};

inline NetworkParams init_network(const HnnConfig& cfg) {
    validate_config(cfg);
    Rng rng(derive_seed(cfg.seed, 0x1217));
    NetworkParams p;
    std::size_t in_ch = 1;
    std::size_t prev_stride = 1;
    for (std::size_t m = 0; m < cfg.num_stages; ++m) {
        const std::size_t ch = cfg.base_channels << m;
        const std::size_t stage_stride = cfg.stage_strides[m] / prev_stride;
        prev_stride = cfg.stage_strides[m];
        std::vector<ConvLayer> convs;
        for (std::size_t i = 0; i < cfg.convs_per_stage; ++i) {
            ConvLayer layer(ch, i == 0 ? in_ch : ch, 3, 3, i == 0 ? stage_stride : 1);
            layer.init_random(rng);
            convs.push_back(std::move(layer));
        }
        p.trunk.push_back(std::move(convs));
        ConvLayer side(1, ch, 1, 1, 1);
        side.init_random(rng);
        p.side_classifiers.push_back(std::move(side));
        in_ch = ch;
    }
    p.fusion_weights.assign(cfg.num_stages, 1.0 / static_cast<double>(cfg.num_stages));
    return p;
}

// Side and fused probability maps, all at input resolution.
struct PredictionBundle {
    std::vector<Grid2D> side_maps;  // sigma(S_m)
    Grid2D fused_map;               // sigma(sum_m h_m S_m)
};

// Everything the backward pass needs.
struct ForwardCache {
    Grid2D input;                              // rescaled to [0,1]
    std::vector<std::vector<Grid2D>> pre_act;  // per stage, per conv (pre-tanh)
    std::vector<std::vector<Grid2D>> post_act;
    std::vector<Grid2D> side_raw;  // 1x1 classifier output at stage resolution
    std::vector<Grid2D> side_up;   // S_m: upsampled to input resolution
    Grid2D fused;                  // sum_m h_m S_m
};

inline Grid2D tanh_grid(const Grid2D& x) {
    Grid2D out = x;
    for (double& v : out.values) v = std::tanh(v);
    return out;
}

inline void check_network_input(const NetworkParams& p, const Grid2D& x) {
    require(x.channels == 1, "forward: input must be single-channel");
    require(x.height >= 1 && x.width >= 1, "forward: empty input");
    for (double v : x.values)
        require(v >= 0.0 && v <= 255.0, "forward: input values must lie in [0,255]");
    // Every stage, including the deepest, must still be at least one kernel wide.
    std::size_t h = x.height, w = x.width;
    for (const auto& stage : p.trunk) {
        for (const auto& conv : stage) {
            require(h >= conv.kernel_h && w >= conv.kernel_w,
                    "forward: input " + shape_string(x) +
                        " too small for the deepest stride");
            h = conv.out_h(h);
            w = conv.out_w(w);
        }
    }
}

inline std::pair<PredictionBundle, ForwardCache> forward(const NetworkParams& params,
                                                         const Grid2D& x) {
    check_network_input(params, x);
    const std::size_t M = params.num_stages();

    ForwardCache cache;
    cache.input = x;
    for (double& v : cache.input.values) v /= 255.0;

    const Grid2D* stage_in = &cache.input;
    cache.pre_act.resize(M);
    cache.post_act.resize(M);
    for (std::size_t m = 0; m < M; ++m) {
        for (const ConvLayer& conv : params.trunk[m]) {
            Grid2D pre = conv2d_forward(*stage_in, conv);
            Grid2D post = tanh_grid(pre);
            cache.pre_act[m].push_back(std::move(pre));
            cache.post_act[m].push_back(std::move(post));
            stage_in = &cache.post_act[m].back();
        }
        Grid2D raw = conv2d_forward(cache.post_act[m].back(), params.side_classifiers[m]);
        cache.side_up.push_back(bilinear_resize(raw, x.height, x.width));
        cache.side_raw.push_back(std::move(raw));
    }

    cache.fused = Grid2D(x.height, x.width, 1);
    for (std::size_t m = 0; m < M; ++m) {
        const double h = params.fusion_weights[m];
        for (std::size_t i = 0; i < cache.fused.values.size(); ++i)
            cache.fused.values[i] += h * cache.side_up[m].values[i];
    }

    PredictionBundle bundle;
    for (std::size_t m = 0; m < M; ++m) bundle.side_maps.push_back(sigmoid(cache.side_up[m]));
    bundle.fused_map = sigmoid(cache.fused);
    return {std::move(bundle), std::move(cache)};
}

// ---------------------------------------------------------------------------
// Losses

struct LossGrad {
    double loss = 0.0;
    Grid2D grad;  // d loss / d activations
};

// Cross-entropy over pre-sigmoid activations with per-image class balancing:
//   loss = -beta * sum_{gt=1} log sigma(a) - (1-beta) * sum_{gt=0} log(1-sigma(a))
// where beta = |Y-|/|Y|. With balanced=false both weights are 1.
inline LossGrad class_balanced_bce(const Grid2D& activations, const Grid2D& gt,
                                   bool balanced = true) {
    require_same_shape(activations, gt, "class_balanced_bce");
    require(activations.size() > 0, "class_balanced_bce: empty image");

    std::size_t pos = 0;
    for (double v : gt.values) {
        require(v == 0.0 || v == 1.0, "class_balanced_bce: ground truth must be binary");
        pos += (v == 1.0);
    }
    const std::size_t total = gt.values.size();
    const double beta = static_cast<double>(total - pos) / static_cast<double>(total);
    const double w_pos = balanced ? beta : 1.0;
    const double w_neg = balanced ? 1.0 - beta : 1.0;

    LossGrad out;
    out.grad = Grid2D(activations.height, activations.width, activations.channels);
    for (std::size_t i = 0; i < activations.values.size(); ++i) {
        const double a = activations.values[i];
        if (gt.values[i] == 1.0) {
            out.loss += w_pos * softplus(-a);              // -log sigma(a)
            out.grad.values[i] = -w_pos * sigmoid_scalar(-a);
        } else {
            out.loss += w_neg * softplus(a);               // -log(1 - sigma(a))
            out.grad.values[i] = w_neg * sigmoid_scalar(a);
        }
    }
    return out;
}

// Weighted sum of the per-stage side losses (alpha_m weights).
inline double side_loss(const NetworkParams& params, const Grid2D& x, const Grid2D& gt,
                        const std::vector<double>& alpha) {
    require(alpha.size() == params.num_stages(),
            "side_loss: alpha must have one weight per stage");
    auto [bundle, cache] = forward(params, x);
    double total = 0.0;
    for (std::size_t m = 0; m < alpha.size(); ++m)
        total += alpha[m] * class_balanced_bce(cache.side_up[m], gt).loss;
    return total;
}

// Cross-entropy between the fused prediction and the ground truth.
inline double fuse_loss(const NetworkParams& params, const Grid2D& x, const Grid2D& gt,
                        bool balanced = true) {
    auto [bundle, cache] = forward(params, x);
    return class_balanced_bce(cache.fused, gt, balanced).loss;
}

// ---------------------------------------------------------------------------
// Backward pass

// Gradient container parallel to NetworkParams.
struct NetworkGrads {
    struct LayerGrads {
        std::vector<double> weights;
        std::vector<double> bias;
    };
    std::vector<std::vector<LayerGrads>> trunk;
    std::vector<LayerGrads> side;
    std::vector<double> fusion;
};

inline NetworkGrads zero_grads(const NetworkParams& p) {
    NetworkGrads g;
    g.trunk.resize(p.trunk.size());
    for (std::size_t m = 0; m < p.trunk.size(); ++m) {
        for (const auto& conv : p.trunk[m])
            g.trunk[m].push_back({std::vector<double>(conv.weights.size(), 0.0),
                                  std::vector<double>(conv.bias.size(), 0.0)});
        g.side.push_back({std::vector<double>(p.side_classifiers[m].weights.size(), 0.0),
                          std::vector<double>(p.side_classifiers[m].bias.size(), 0.0)});
    }
    g.fusion.assign(p.fusion_weights.size(), 0.0);
    return g;
}

inline void accumulate(NetworkGrads& acc, const NetworkGrads& g) {
    for (std::size_t m = 0; m < acc.trunk.size(); ++m) {
        for (std::size_t i = 0; i < acc.trunk[m].size(); ++i) {
            auto& a = acc.trunk[m][i];
            const auto& b = g.trunk[m][i];
            for (std::size_t k = 0; k < a.weights.size(); ++k) a.weights[k] += b.weights[k];
            for (std::size_t k = 0; k < a.bias.size(); ++k) a.bias[k] += b.bias[k];
        }
        auto& a = acc.side[m];
        const auto& b = g.side[m];
        for (std::size_t k = 0; k < a.weights.size(); ++k) a.weights[k] += b.weights[k];
        for (std::size_t k = 0; k < a.bias.size(); ++k) a.bias[k] += b.bias[k];
    }
    for (std::size_t k = 0; k < acc.fusion.size(); ++k) acc.fusion[k] += g.fusion[k];
}

inline void scale_grads(NetworkGrads& g, double factor) {
    for (auto& stage : g.trunk)
        for (auto& layer : stage) {
            for (double& v : layer.weights) v *= factor;
            for (double& v : layer.bias) v *= factor;
        }
    for (auto& layer : g.side) {
        for (double& v : layer.weights) v *= factor;
        for (double& v : layer.bias) v *= factor;
    }
    for (double& v : g.fusion) v *= factor;
}

// Loss (side + optional fusion) and its exact gradient w.r.t. every parameter
// for a single image.
inline std::pair<double, NetworkGrads> loss_and_gradients(const NetworkParams& params,
                                                          const Grid2D& x,
                                                          const Grid2D& gt,
                                                          const std::vector<double>& alpha,
                                                          bool include_fusion = true,
                                                          bool balanced_fusion = true) {
    require(alpha.size() == params.num_stages(),
            "loss_and_gradients: alpha must have one weight per stage");
    auto [bundle, cache] = forward(params, x);
    const std::size_t M = params.num_stages();

    NetworkGrads grads = zero_grads(params);
    double total_loss = 0.0;

    // d loss / d S_m at input resolution.
    std::vector<Grid2D> grad_side_up(M);
    for (std::size_t m = 0; m < M; ++m)
        grad_side_up[m] = Grid2D(x.height, x.width, 1);

    for (std::size_t m = 0; m < M; ++m) {
        if (alpha[m] == 0.0) continue;
        LossGrad lg = class_balanced_bce(cache.side_up[m], gt);
        total_loss += alpha[m] * lg.loss;
        for (std::size_t i = 0; i < lg.grad.values.size(); ++i)
            grad_side_up[m].values[i] += alpha[m] * lg.grad.values[i];
    }

    if (include_fusion) {
        LossGrad lg = class_balanced_bce(cache.fused, gt, balanced_fusion);
        total_loss += lg.loss;
        for (std::size_t m = 0; m < M; ++m) {
            double dh = 0.0;
            const double h = params.fusion_weights[m];
            for (std::size_t i = 0; i < lg.grad.values.size(); ++i) {
                dh += lg.grad.values[i] * cache.side_up[m].values[i];
                grad_side_up[m].values[i] += h * lg.grad.values[i];
            }
            grads.fusion[m] = dh;
        }
    }

    // Side branches and trunk, deepest stage first so the gradient flowing
    // into each stage output is complete before the stage itself runs.
    std::vector<Grid2D> grad_stage_out(M);  // d loss / d post_act[m].back()
    for (std::size_t m = 0; m < M; ++m) {
        const Grid2D& raw = cache.side_raw[m];
        Grid2D grad_raw = bilinear_resize_backward(grad_side_up[m], raw.height, raw.width);
        ConvGrads cg = conv2d_backward(cache.post_act[m].back(), params.side_classifiers[m],
                                       grad_raw);
        grads.side[m].weights = std::move(cg.weights);
        grads.side[m].bias = std::move(cg.bias);
        grad_stage_out[m] = std::move(cg.input);
    }

    for (std::size_t m = M; m-- > 0;) {
        Grid2D grad_post = std::move(grad_stage_out[m]);
        for (std::size_t i = params.trunk[m].size(); i-- > 0;) {
            // through tanh
            const Grid2D& post = cache.post_act[m][i];
            Grid2D grad_pre = std::move(grad_post);
            for (std::size_t k = 0; k < grad_pre.values.size(); ++k)
                grad_pre.values[k] *= 1.0 - post.values[k] * post.values[k];

            const Grid2D& conv_in = (i == 0)
                                        ? (m == 0 ? cache.input : cache.post_act[m - 1].back())
                                        : cache.post_act[m][i - 1];
            ConvGrads cg = conv2d_backward(conv_in, params.trunk[m][i], grad_pre);
            grads.trunk[m][i].weights = std::move(cg.weights);
            grads.trunk[m][i].bias = std::move(cg.bias);
            grad_post = std::move(cg.input);
        }
        if (m > 0) {
            // grad_post is now d loss / d (previous stage output through this
            // stage); add the previous stage's own side-branch contribution.
            for (std::size_t k = 0; k < grad_post.values.size(); ++k)
                grad_stage_out[m - 1].values[k] += grad_post.values[k];
        }
    }

    return {total_loss, std::move(grads)};
}

// ---------------------------------------------------------------------------
// Parameter flattening (used by the SGD step and by gradient checking)

inline std::vector<double> flatten_params(const NetworkParams& p) {
    std::vector<double> flat;
    for (const auto& stage : p.trunk)
        for (const auto& conv : stage) {
            flat.insert(flat.end(), conv.weights.begin(), conv.weights.end());
            flat.insert(flat.end(), conv.bias.begin(), conv.bias.end());
        }
    for (const auto& conv : p.side_classifiers) {
        flat.insert(flat.end(), conv.weights.begin(), conv.weights.end());
        flat.insert(flat.end(), conv.bias.begin(), conv.bias.end());
    }
    flat.insert(flat.end(), p.fusion_weights.begin(), p.fusion_weights.end());
    return flat;
}

inline void unflatten_params(NetworkParams& p, const std::vector<double>& flat) {
    std::size_t k = 0;
    auto take = [&](std::vector<double>& dst) {
        for (double& v : dst) v = flat[k++];
    };
    for (auto& stage : p.trunk)
        for (auto& conv : stage) {
            take(conv.weights);
            take(conv.bias);
        }
    for (auto& conv : p.side_classifiers) {
        take(conv.weights);
        take(conv.bias);
    }
    take(p.fusion_weights);
    require(k == flat.size(), "unflatten_params: size mismatch");
}

inline std::vector<double> flatten_grads(const NetworkGrads& g) {
    std::vector<double> flat;
    for (const auto& stage : g.trunk)
        for (const auto& layer : stage) {
            flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
            flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
        }
    for (const auto& layer : g.side) {
        flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
        flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    }
    flat.insert(flat.end(), g.fusion.begin(), g.fusion.end());
    return flat;
}

inline void sgd_step(NetworkParams& p, const NetworkGrads& g, double lr) {
    for (std::size_t m = 0; m < p.trunk.size(); ++m) {
        for (std::size_t i = 0; i < p.trunk[m].size(); ++i) {
            auto& conv = p.trunk[m][i];
            const auto& lg = g.trunk[m][i];
            for (std::size_t k = 0; k < conv.weights.size(); ++k)
                conv.weights[k] -= lr * lg.weights[k];
            for (std::size_t k = 0; k < conv.bias.size(); ++k)
                conv.bias[k] -= lr * lg.bias[k];
        }
        auto& side = p.side_classifiers[m];
        const auto& lg = g.side[m];
        for (std::size_t k = 0; k < side.weights.size(); ++k)
            side.weights[k] -= lr * lg.weights[k];
        for (std::size_t k = 0; k < side.bias.size(); ++k) side.bias[k] -= lr * lg.bias[k];
    }
    for (std::size_t m = 0; m < p.fusion_weights.size(); ++m)
        p.fusion_weights[m] -= lr * g.fusion[m];
}

// ---------------------------------------------------------------------------
// Training

enum class Target { interior, boundary };

struct TrainResult {
    NetworkParams params;
    std::vector<double> epoch_losses;  // mean training loss per epoch
};

// Plain SGD on L_side + L_fuse. Deterministic given the seed: weight init and
// batch composition come from seed-derived streams, not from data order.
inline TrainResult train(const HnnConfig& cfg, const std::vector<SlicePair>& data,
                         Target target) {
    validate_config(cfg);
    require(!data.empty(), "train: empty training set");
    for (const auto& s : data)
        require(s.image.height == data.front().image.height &&
                    s.image.width == data.front().image.width,
                "train: all slices must share dimensions");

    const std::vector<double> alpha = cfg.alphas();
    NetworkParams params = init_network(cfg);
    Rng order_rng(derive_seed(cfg.seed, 0x0BDE));

    TrainResult result;
    const std::size_t n = data.size();
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::vector<std::size_t> order = order_rng.permutation(n);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            NetworkGrads batch = zero_grads(params);
            double batch_loss = 0.0;
            for (std::size_t i = start; i < stop; ++i) {
                const SlicePair& s = data[order[i]];
                const Grid2D& gt =
                    (target == Target::interior) ? s.interior_gt : s.boundary_gt;
                auto [loss, grads] = loss_and_gradients(params, s.image, gt, alpha, true,
                                                        cfg.balanced_fusion);
                batch_loss += loss;
                accumulate(batch, grads);
            }
            if (!std::isfinite(batch_loss))
                throw divergence_error(
                    "train: non-finite loss at epoch " + std::to_string(epoch) +
                        " (learning rate " + std::to_string(cfg.learning_rate) + ")",
                    static_cast<int>(epoch), cfg.learning_rate);
            scale_grads(batch, 1.0 / static_cast<double>(stop - start));
            sgd_step(params, batch, cfg.learning_rate);
            epoch_loss += batch_loss;
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
    }
    result.params = std::move(params);
    return result;
}

// Test-time evaluation of both models on one slice.
inline std::pair<PredictionBundle, PredictionBundle> predict(
    const NetworkParams& params_interior, const NetworkParams& params_boundary,
    const Grid2D& x) {
    auto interior = forward(params_interior, x);
    auto boundary = forward(params_boundary, x);
    return {std::move(interior.first), std::move(boundary.first)};
}

}  // namespace hnseg

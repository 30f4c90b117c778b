#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hnseg/errors.hpp"
#include "hnseg/forest.hpp"
#include "hnseg/hnn.hpp"

namespace hnseg {

// Single binary container for trained models. Layout: 8-byte magic, u32
// format version, u32 payload type, then the payload. All integers and the
// f64 bit patterns are little-endian.
inline constexpr char kModelMagic[8] = {'H', 'N', 'S', 'E', 'G', 'M', 'D', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;
inline constexpr std::uint32_t kPayloadNetwork = 1;
inline constexpr std::uint32_t kPayloadForest = 2;

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

inline void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

inline void put_i32(std::ostream& out, std::int32_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
}

inline std::uint32_t get_u32(std::istream& in, const std::string& what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw io_error("model file truncated while reading " + what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t get_u64(std::istream& in, const std::string& what) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8))
        throw io_error("model file truncated while reading " + what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double get_f64(std::istream& in, const std::string& what) {
    const std::uint64_t bits = get_u64(in, what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline std::int32_t get_i32(std::istream& in, const std::string& what) {
    return static_cast<std::int32_t>(get_u32(in, what));
}

inline void put_conv(std::ostream& out, const ConvLayer& c) {
    put_u32(out, static_cast<std::uint32_t>(c.out_channels));
    put_u32(out, static_cast<std::uint32_t>(c.in_channels));
    put_u32(out, static_cast<std::uint32_t>(c.kernel_h));
    put_u32(out, static_cast<std::uint32_t>(c.kernel_w));
    put_u32(out, static_cast<std::uint32_t>(c.stride));
    for (double v : c.weights) put_f64(out, v);
    for (double v : c.bias) put_f64(out, v);
}

inline ConvLayer get_conv(std::istream& in) {
    const std::uint32_t oc = get_u32(in, "conv out_channels");
    const std::uint32_t ic = get_u32(in, "conv in_channels");
    const std::uint32_t kh = get_u32(in, "conv kernel_h");
    const std::uint32_t kw = get_u32(in, "conv kernel_w");
    const std::uint32_t stride = get_u32(in, "conv stride");
    ConvLayer c(oc, ic, kh, kw, stride);  // re-validates shape constraints
    for (double& v : c.weights) v = get_f64(in, "conv weight");
    for (double& v : c.bias) v = get_f64(in, "conv bias");
    return c;
}

inline std::ofstream open_model_out(const std::filesystem::path& path,
                                    std::uint32_t payload_type) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out.write(kModelMagic, 8);
    put_u32(out, kModelVersion);
    put_u32(out, payload_type);
    return out;
}

inline std::ifstream open_model_in(const std::filesystem::path& path,
                                   std::uint32_t expected_payload) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kModelMagic, 8) != 0)
        throw io_error(path.string() + ": not a model file (bad magic)");
    const std::uint32_t version = get_u32(in, "format version");
    if (version != kModelVersion)
        throw io_error(path.string() + ": unsupported model format version " +
                       std::to_string(version) + " (expected " +
                       std::to_string(kModelVersion) + ")");
    const std::uint32_t payload = get_u32(in, "payload type");
    if (payload != expected_payload)
        throw io_error(path.string() + ": wrong model payload type " +
                       std::to_string(payload) + " (expected " +
                       std::to_string(expected_payload) + ")");
    return in;
}

}  // namespace detail

inline void save_network(const NetworkParams& params, const std::filesystem::path& path) {
    auto out = detail::open_model_out(path, kPayloadNetwork);
    detail::put_u32(out, static_cast<std::uint32_t>(params.num_stages()));
    for (const auto& stage : params.trunk) {
        detail::put_u32(out, static_cast<std::uint32_t>(stage.size()));
        for (const auto& conv : stage) detail::put_conv(out, conv);
    }
    for (const auto& conv : params.side_classifiers) detail::put_conv(out, conv);
    for (double h : params.fusion_weights) detail::put_f64(out, h);
    if (!out) throw io_error("write failed for " + path.string());
}

inline NetworkParams load_network(const std::filesystem::path& path) {
    auto in = detail::open_model_in(path, kPayloadNetwork);
    NetworkParams params;
    const std::uint32_t stages = detail::get_u32(in, "stage count");
    require(stages >= 1 && stages <= 16, "load_network: implausible stage count");
    for (std::uint32_t m = 0; m < stages; ++m) {
        const std::uint32_t n_convs = detail::get_u32(in, "conv count");
        require(n_convs >= 1 && n_convs <= 16, "load_network: implausible conv count");
        std::vector<ConvLayer> stage;
        for (std::uint32_t i = 0; i < n_convs; ++i) stage.push_back(detail::get_conv(in));
        params.trunk.push_back(std::move(stage));
    }
    for (std::uint32_t m = 0; m < stages; ++m)
        params.side_classifiers.push_back(detail::get_conv(in));
    params.fusion_weights.resize(stages);
    for (double& h : params.fusion_weights) h = detail::get_f64(in, "fusion weight");
    return params;
}

inline void save_forest(const ForestModel& model, const std::filesystem::path& path) {
    auto out = detail::open_model_out(path, kPayloadForest);
    detail::put_u64(out, model.config.seed);
    detail::put_u32(out, static_cast<std::uint32_t>(model.config.trees));
    detail::put_u32(out, static_cast<std::uint32_t>(model.config.mtry));
    detail::put_u32(out, static_cast<std::uint32_t>(model.num_features));
    detail::put_u32(out, static_cast<std::uint32_t>(model.trees.size()));
    for (const DecisionTree& tree : model.trees) {
        detail::put_u32(out, static_cast<std::uint32_t>(tree.nodes.size()));
        for (const TreeNode& n : tree.nodes) {
            detail::put_i32(out, n.feature);
            detail::put_f64(out, n.threshold);
            detail::put_i32(out, n.left);
            detail::put_i32(out, n.right);
            detail::put_f64(out, n.prob);
        }
    }
    if (!out) throw io_error("write failed for " + path.string());
}

inline ForestModel load_forest(const std::filesystem::path& path) {
    auto in = detail::open_model_in(path, kPayloadForest);
    ForestModel model;
    model.config.seed = detail::get_u64(in, "forest seed");
    model.config.trees = detail::get_u32(in, "tree count");
    model.config.mtry = detail::get_u32(in, "mtry");
    model.num_features = detail::get_u32(in, "feature count");
    const std::uint32_t n_trees = detail::get_u32(in, "stored tree count");
    for (std::uint32_t t = 0; t < n_trees; ++t) {
        const std::uint32_t n_nodes = detail::get_u32(in, "node count");
        require(n_nodes >= 1, "load_forest: empty tree");
        DecisionTree tree;
        for (std::uint32_t i = 0; i < n_nodes; ++i) {
            TreeNode n;
            n.feature = detail::get_i32(in, "node feature");
            n.threshold = detail::get_f64(in, "node threshold");
            n.left = detail::get_i32(in, "node left");
            n.right = detail::get_i32(in, "node right");
            n.prob = detail::get_f64(in, "node prob");
            const int limit = static_cast<int>(n_nodes);
            require(n.feature >= -1 &&
                        n.feature < static_cast<int>(model.num_features),
                    "load_forest: node feature out of range");
            if (n.feature >= 0)
                require(n.left >= 0 && n.left < limit && n.right >= 0 && n.right < limit,
                        "load_forest: child index out of range");
            tree.nodes.push_back(n);
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

}  // namespace hnseg

#pragma once

#include <cstddef>
#include <vector>

#include "hnseg/grid.hpp"
#include "hnseg/rng.hpp"

namespace hnseg {

// 2D convolution layer with zero same-padding. Output pixel (oy, ox) is the
// kernel centered on input pixel (oy*stride, ox*stride), so the output extent
// is ceil(input/stride).
struct ConvLayer {
    std::size_t out_channels = 0;
    std::size_t in_channels = 0;
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    std::size_t stride = 1;
    std::vector<double> weights;  // [oc][ic][ky][kx]
    std::vector<double> bias;     // [oc]

    ConvLayer() = default;

    ConvLayer(std::size_t oc, std::size_t ic, std::size_t kh, std::size_t kw,
              std::size_t stride = 1)
        : out_channels(oc), in_channels(ic), kernel_h(kh), kernel_w(kw),
          stride(stride), weights(oc * ic * kh * kw, 0.0), bias(oc, 0.0) {
        require(kh % 2 == 1 && kw % 2 == 1, "ConvLayer: kernel dims must be odd");
        require(stride == 1 || stride == 2, "ConvLayer: stride must be 1 or 2");
    }

    double& w(std::size_t oc, std::size_t ic, std::size_t ky, std::size_t kx) {
        return weights[((oc * in_channels + ic) * kernel_h + ky) * kernel_w + kx];
    }
    double w(std::size_t oc, std::size_t ic, std::size_t ky, std::size_t kx) const {
        return weights[((oc * in_channels + ic) * kernel_h + ky) * kernel_w + kx];
    }

    std::size_t out_h(std::size_t in_h) const { return (in_h + stride - 1) / stride; }
    std::size_t out_w(std::size_t in_w) const { return (in_w + stride - 1) / stride; }

    // Uniform init scaled by fan-in, zero bias.
    void init_random(Rng& rng) {
        const double bound =
            1.0 / std::sqrt(static_cast<double>(in_channels * kernel_h * kernel_w));
        for (double& v : weights) v = rng.uniform(-bound, bound);
        for (double& v : bias) v = 0.0;
    }
};

struct ConvGrads {
    Grid2D input;                  // dL/d input
    std::vector<double> weights;   // dL/d weights, layer layout
    std::vector<double> bias;      // dL/d bias
};

inline void check_conv_shapes(const Grid2D& input, const ConvLayer& layer) {
    require(input.channels == layer.in_channels,
            "conv2d: input has " + std::to_string(input.channels) +
                " channels, layer expects " + std::to_string(layer.in_channels));
    require(input.height >= layer.kernel_h && input.width >= layer.kernel_w,
            "conv2d: input " + shape_string(input) + " smaller than kernel " +
                std::to_string(layer.kernel_h) + "x" + std::to_string(layer.kernel_w));
}

inline Grid2D conv2d_forward(const Grid2D& input, const ConvLayer& layer) {
    check_conv_shapes(input, layer);
    const std::size_t oh = layer.out_h(input.height);
    const std::size_t ow = layer.out_w(input.width);
    const std::ptrdiff_t cy = static_cast<std::ptrdiff_t>(layer.kernel_h / 2);
    const std::ptrdiff_t cx = static_cast<std::ptrdiff_t>(layer.kernel_w / 2);

    Grid2D out(oh, ow, layer.out_channels);
    for (std::size_t oc = 0; oc < layer.out_channels; ++oc) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = layer.bias[oc];
                for (std::size_t ic = 0; ic < layer.in_channels; ++ic) {
                    for (std::size_t ky = 0; ky < layer.kernel_h; ++ky) {
                        const std::ptrdiff_t iy =
                            static_cast<std::ptrdiff_t>(oy * layer.stride + ky) - cy;
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(input.height))
                            continue;
                        for (std::size_t kx = 0; kx < layer.kernel_w; ++kx) {
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(ox * layer.stride + kx) - cx;
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(input.width))
                                continue;
                            acc += layer.w(oc, ic, ky, kx) *
                                   input.at(static_cast<std::size_t>(iy),
                                            static_cast<std::size_t>(ix), ic);
                        }
                    }
                }
                out.at(oy, ox, oc) = acc;
            }
        }
    }
    return out;
}

// Exact gradients of a scalar loss w.r.t. input, weights and bias, given the
// loss gradient at the layer output.
inline ConvGrads conv2d_backward(const Grid2D& input, const ConvLayer& layer,
                                 const Grid2D& grad_out) {
    check_conv_shapes(input, layer);
    const std::size_t oh = layer.out_h(input.height);
    const std::size_t ow = layer.out_w(input.width);
    require(grad_out.height == oh && grad_out.width == ow &&
                grad_out.channels == layer.out_channels,
            "conv2d_backward: grad_out shape " + shape_string(grad_out) +
                " does not match forward output " + std::to_string(oh) + "x" +
                std::to_string(ow) + "x" + std::to_string(layer.out_channels));

    const std::ptrdiff_t cy = static_cast<std::ptrdiff_t>(layer.kernel_h / 2);
    const std::ptrdiff_t cx = static_cast<std::ptrdiff_t>(layer.kernel_w / 2);

    ConvGrads g;
    g.input = Grid2D(input.height, input.width, input.channels);
    g.weights.assign(layer.weights.size(), 0.0);
    g.bias.assign(layer.bias.size(), 0.0);

    for (std::size_t oc = 0; oc < layer.out_channels; ++oc) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const double go = grad_out.at(oy, ox, oc);
                if (go == 0.0) continue;
                g.bias[oc] += go;
                for (std::size_t ic = 0; ic < layer.in_channels; ++ic) {
                    for (std::size_t ky = 0; ky < layer.kernel_h; ++ky) {
                        const std::ptrdiff_t iy =
                            static_cast<std::ptrdiff_t>(oy * layer.stride + ky) - cy;
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(input.height))
                            continue;
                        for (std::size_t kx = 0; kx < layer.kernel_w; ++kx) {
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(ox * layer.stride + kx) - cx;
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(input.width))
                                continue;
                            const std::size_t uy = static_cast<std::size_t>(iy);
                            const std::size_t ux = static_cast<std::size_t>(ix);
                            g.weights[((oc * layer.in_channels + ic) * layer.kernel_h +
                                       ky) * layer.kernel_w + kx] +=
                                go * input.at(uy, ux, ic);
                            g.input.at(uy, ux, ic) += go * layer.w(oc, ic, ky, kx);
                        }
                    }
                }
            }
        }
    }
    return g;
}

}  // namespace hnseg

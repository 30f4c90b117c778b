#pragma once

#include <cstddef>

#include "hnseg/grid.hpp"

namespace hnseg {

namespace detail {

// Align-corners source coordinate for output index i.
inline double resize_scale(std::size_t in_dim, std::size_t out_dim) {
    if (out_dim <= 1) return 0.0;
    return static_cast<double>(in_dim - 1) / static_cast<double>(out_dim - 1);
}

}  // namespace detail

// Align-corners bilinear interpolation. Resizing to the input size is the
// exact identity (interpolation weights collapse to 1 and 0).
inline Grid2D bilinear_resize(const Grid2D& input, std::size_t target_h,
                              std::size_t target_w) {
    require(target_h >= 1 && target_w >= 1, "bilinear_resize: zero target dimension");
    require(input.height >= 1 && input.width >= 1, "bilinear_resize: empty input");
    if (target_h == input.height && target_w == input.width) return input;

    const double sy = detail::resize_scale(input.height, target_h);
    const double sx = detail::resize_scale(input.width, target_w);

    Grid2D out(target_h, target_w, input.channels);
    for (std::size_t c = 0; c < input.channels; ++c) {
        for (std::size_t oy = 0; oy < target_h; ++oy) {
            const double fy = static_cast<double>(oy) * sy;
            const std::size_t y0 = static_cast<std::size_t>(fy);
            const std::size_t y1 = (y0 + 1 < input.height) ? y0 + 1 : y0;
            const double wy = fy - static_cast<double>(y0);
            for (std::size_t ox = 0; ox < target_w; ++ox) {
                const double fx = static_cast<double>(ox) * sx;
                const std::size_t x0 = static_cast<std::size_t>(fx);
                const std::size_t x1 = (x0 + 1 < input.width) ? x0 + 1 : x0;
                const double wx = fx - static_cast<double>(x0);
                // a + w*(b - a): exact at w = 0 and for constant inputs.
                const double top = input.at(y0, x0, c) +
                                   wx * (input.at(y0, x1, c) - input.at(y0, x0, c));
                const double bot = input.at(y1, x0, c) +
                                   wx * (input.at(y1, x1, c) - input.at(y1, x0, c));
                out.at(oy, ox, c) = top + wy * (bot - top);
            }
        }
    }
    return out;
}

// Adjoint of bilinear_resize: scatters the output gradient back through the
// same interpolation weights.
inline Grid2D bilinear_resize_backward(const Grid2D& grad_out, std::size_t input_h,
                                       std::size_t input_w) {
    require(input_h >= 1 && input_w >= 1, "bilinear_resize_backward: empty input shape");
    Grid2D grad_in(input_h, input_w, grad_out.channels);
    if (grad_out.height == input_h && grad_out.width == input_w) {
        grad_in.values = grad_out.values;
        return grad_in;
    }

    const double sy = detail::resize_scale(input_h, grad_out.height);
    const double sx = detail::resize_scale(input_w, grad_out.width);

    for (std::size_t c = 0; c < grad_out.channels; ++c) {
        for (std::size_t oy = 0; oy < grad_out.height; ++oy) {
            const double fy = static_cast<double>(oy) * sy;
            const std::size_t y0 = static_cast<std::size_t>(fy);
            const std::size_t y1 = (y0 + 1 < input_h) ? y0 + 1 : y0;
            const double wy = fy - static_cast<double>(y0);
            for (std::size_t ox = 0; ox < grad_out.width; ++ox) {
                const double fx = static_cast<double>(ox) * sx;
                const std::size_t x0 = static_cast<std::size_t>(fx);
                const std::size_t x1 = (x0 + 1 < input_w) ? x0 + 1 : x0;
                const double wx = fx - static_cast<double>(x0);
                const double g = grad_out.at(oy, ox, c);
                grad_in.at(y0, x0, c) += g * (1.0 - wx) * (1.0 - wy);
                grad_in.at(y0, x1, c) += g * wx * (1.0 - wy);
                grad_in.at(y1, x0, c) += g * (1.0 - wx) * wy;
                grad_in.at(y1, x1, c) += g * wx * wy;
            }
        }
    }
    return grad_in;
}

}  // namespace hnseg

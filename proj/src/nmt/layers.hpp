#pragma once

// Building blocks shared by the training graph and the incremental decoder,
// so both paths evaluate identical expressions.

#include "arforge/nmt/model.hpp"
#include "arforge/numerics/ops.hpp"

namespace arforge::nmt::layers {

inline constexpr double kNormEps = 1e-6;

inline Tensor linear(const Tensor &x, const Tensor &w, const Tensor &b) {
    return numerics::add(numerics::matmul(x, w), b);
}

inline Tensor norm(const Tensor &x, const LayerNormParams &p) {
    return numerics::layer_norm(x, p.gain, p.bias, kNormEps);
}

inline Tensor feed_forward(const Tensor &x, const FeedForwardParams &p) {
    return linear(numerics::relu(linear(x, p.w1, p.b1)), p.w2, p.b2);
}

} // namespace arforge::nmt::layers

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "arforge/numerics/tensor.hpp"

namespace arforge::numerics {

/// Adam moments for a fixed list of parameters.
struct AdamState {
    std::uint64_t step = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double epsilon = 1e-9;

    /// Zero moments shaped like `params`; validates the hyperparameters.
    static AdamState for_params(std::span<const Tensor> params, double beta1 = 0.9, double beta2 = 0.98,
                                double epsilon = 1e-9);
};

/// One bias-corrected Adam update:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(std::span<std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState &state, double lr);

/// Same, reading gradients from the tensors themselves.
void adam_step(std::span<Tensor> params, AdamState &state, double lr);

} // namespace arforge::numerics

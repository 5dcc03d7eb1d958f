#include "arforge/numerics/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace arforge::numerics {

AdamState AdamState::for_params(std::span<const Tensor> params, double beta1, double beta2, double epsilon) {
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0) || !(epsilon > 0.0))
        throw std::invalid_argument("adam: require 0 < beta1, beta2 < 1 and epsilon > 0");
    AdamState state;
    state.beta1 = beta1;
    state.beta2 = beta2;
    state.epsilon = epsilon;
    for (const Tensor &p : params) {
        state.first_moment.emplace_back(p.size(), 0.0);
        state.second_moment.emplace_back(p.size(), 0.0);
    }
    return state;
}

void adam_step(std::span<std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState &state, double lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
    if (params.size() != grads.size() || params.size() != state.first_moment.size())
        throw ShapeError("adam: " + std::to_string(params.size()) + " parameters, " + std::to_string(grads.size()) +
                         " gradients, " + std::to_string(state.first_moment.size()) + " moment slots");
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i].size() != grads[i].size() || params[i].size() != state.first_moment[i].size())
            throw ShapeError("adam: size mismatch at parameter " + std::to_string(i));

    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto &m = state.first_moment[i];
        auto &v = state.second_moment[i];
        auto p = params[i];
        auto g = grads[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
            const double m_hat = m[j] / c1;
            const double v_hat = v[j] / c2;
            p[j] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    }
}

void adam_step(std::span<Tensor> params, AdamState &state, double lr) {
    std::vector<std::span<double>> values;
    std::vector<std::span<const double>> grads;
    values.reserve(params.size());
    grads.reserve(params.size());
    for (Tensor &p : params) {
        if (!p.requires_grad()) throw std::invalid_argument("adam: parameter does not require gradients");
        values.push_back(p.mutable_values());
        grads.push_back(p.grad());
    }
    adam_step(values, grads, state, lr);
}

} // namespace arforge::numerics

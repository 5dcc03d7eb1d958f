#include "arforge/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "arforge/numerics/rng.hpp"

namespace arforge::numerics {

double check_gradients(const std::function<Tensor()> &loss_fn, std::span<Tensor> params,
                       const GradCheckOptions &options) {
    constexpr double kFail = std::numeric_limits<double>::infinity();
    for (Tensor &p : params) p.zero_grad();
    const Tensor loss = loss_fn();
    if (!std::isfinite(loss.item())) return kFail;
    backward(loss);

    std::vector<std::pair<std::size_t, std::size_t>> coords;
    for (std::size_t t = 0; t < params.size(); ++t)
        for (std::size_t i = 0; i < params[t].size(); ++i) coords.emplace_back(t, i);
    if (options.max_coordinates > 0 && coords.size() > options.max_coordinates) {
        SplitMix64 rng(options.seed);
        shuffle(coords.begin(), coords.end(), rng);
        coords.resize(options.max_coordinates);
    }

    double worst = 0.0;
    for (auto [t, i] : coords) {
        auto values = params[t].mutable_values();
        const double analytic = params[t].grad()[i];
        const double original = values[i];
        values[i] = original + options.step;
        const double plus = loss_fn().item();
        values[i] = original - options.step;
        const double minus = loss_fn().item();
        values[i] = original;
        if (!std::isfinite(plus) || !std::isfinite(minus) || !std::isfinite(analytic)) return kFail;
        const double numeric = (plus - minus) / (2.0 * options.step);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), options.floor});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
    return worst;
}

} // namespace arforge::numerics

#include "arforge/numerics/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace arforge::numerics {

double learning_rate(const LrSchedule &schedule, std::uint64_t step) {
    if (step == 0) throw std::invalid_argument("learning_rate: step must be >= 1");
    if (schedule.model_dim == 0 || schedule.warmup_steps == 0)
        throw std::invalid_argument("learning_rate: model_dim and warmup_steps must be positive");
    const double s = static_cast<double>(step);
    const double w = static_cast<double>(schedule.warmup_steps);
    return std::pow(static_cast<double>(schedule.model_dim), -0.5) * std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

} // namespace arforge::numerics

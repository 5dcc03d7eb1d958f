#pragma once

#include <cstdint>

namespace arforge::numerics {

/// Inverse-square-root schedule with linear warmup.
struct LrSchedule {
    std::uint64_t model_dim = 512;
    std::uint64_t warmup_steps = 4000;
};

/// model_dim^-0.5 * min(step^-0.5, step * warmup^-1.5); step >= 1.
double learning_rate(const LrSchedule &schedule, std::uint64_t step);

} // namespace arforge::numerics

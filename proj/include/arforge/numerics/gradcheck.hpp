#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "arforge/numerics/tensor.hpp"

namespace arforge::numerics {

struct GradCheckOptions {
    double step = 1e-6;              // central-difference h
    double floor = 1e-8;             // denominator floor for relative error
    std::size_t max_coordinates = 0; // 0: every coordinate; else a seeded sample
    std::uint64_t seed = 0;
};

/// Compares backward() of `loss_fn` against central finite differences over
/// every coordinate of `params` (or a seeded sample of them). Returns the
/// worst |analytic - numeric| / max(|analytic|, |numeric|, floor); a
/// non-finite loss or gradient yields +infinity.
///
/// `loss_fn` must rebuild the graph from the current parameter values on
/// every call. Parameter values are restored before returning.
double check_gradients(const std::function<Tensor()> &loss_fn, std::span<Tensor> params,
                       const GradCheckOptions &options = {});

} // namespace arforge::numerics

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "arforge/numerics/tensor.hpp"

namespace arforge::numerics {

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

/// Writes `<prefix>.manifest` (one "name<TAB>d0,d1,...<TAB>f64" line per
/// tensor, in the given order) and `<prefix>.bin` (little-endian float64
/// values concatenated in manifest order).
void save_checkpoint(const std::filesystem::path &prefix, const std::vector<NamedTensor> &tensors);

/// Reads a checkpoint written by save_checkpoint. Tensors come back without
/// gradient tracking.
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path &prefix);

} // namespace arforge::numerics

#pragma once

#include <span>
#include <string>

namespace arforge::metrics {

/// Fraction of positions where outputs[i] != inputs[i] after trimming
/// trailing whitespace (exact code point comparison).
double change_rate(std::span<const std::string> inputs, std::span<const std::string> outputs);

/// Fraction of positions where sentence_bleu(repaired, ref) is strictly
/// greater than sentence_bleu(noisy, ref).
double better_rate(std::span<const std::string> noisy, std::span<const std::string> repaired,
                   std::span<const std::string> references);

} // namespace arforge::metrics

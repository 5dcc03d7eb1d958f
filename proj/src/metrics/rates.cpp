#include "arforge/metrics/rates.hpp"

#include "arforge/metrics/bleu.hpp"
#include "arforge/util/utf8.hpp"

namespace arforge::metrics {

double change_rate(std::span<const std::string> inputs, std::span<const std::string> outputs) {
    if (inputs.size() != outputs.size())
        throw MetricError("change_rate: " + std::to_string(inputs.size()) + " inputs vs " +
                          std::to_string(outputs.size()) + " outputs");
    if (inputs.empty()) throw MetricError("change_rate: no sentences");
    std::size_t changed = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i)
        if (util::trim_right(inputs[i]) != util::trim_right(outputs[i])) ++changed;
    return static_cast<double>(changed) / static_cast<double>(inputs.size());
}

double better_rate(std::span<const std::string> noisy, std::span<const std::string> repaired,
                   std::span<const std::string> references) {
    if (noisy.size() != repaired.size() || noisy.size() != references.size())
        throw MetricError("better_rate: corpora of " + std::to_string(noisy.size()) + ", " +
                          std::to_string(repaired.size()) + " and " + std::to_string(references.size()) + " lines");
    if (noisy.empty()) throw MetricError("better_rate: no sentences");
    std::size_t better = 0;
    for (std::size_t i = 0; i < noisy.size(); ++i)
        if (sentence_bleu(repaired[i], references[i]) > sentence_bleu(noisy[i], references[i])) ++better;
    return static_cast<double>(better) / static_cast<double>(noisy.size());
}

} // namespace arforge::metrics

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace arforge::metrics {

class MetricError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kMaxOrder = 4;

struct BleuBreakdown {
    std::array<double, kMaxOrder> precisions{}; // p_1..p_4 (0 for unused orders)
    std::array<std::size_t, kMaxOrder> matches{};
    std::array<std::size_t, kMaxOrder> totals{};
    double brevity_penalty = 0.0;
    std::size_t candidate_length = 0;
    std::size_t reference_length = 0;
    double score = 0.0; // 0..100
};

/// Lowercase (simple Unicode mapping) and split on whitespace.
std::vector<std::string> bleu_tokens(const std::string &line);

/// Case-insensitive corpus BLEU-4 against one reference per line. Clipped
/// n-gram counts are pooled over the corpus; orders with no candidate n-grams
/// drop out of the uniform geometric mean; any used order with zero matches
/// gives 0. BP = min(1, exp(1 - r / c)).
BleuBreakdown corpus_bleu(std::span<const std::string> candidates, std::span<const std::string> references);

enum class Smoothing { none, add_one };

/// Sentence BLEU on one pair. With add_one, orders n >= 2 use
/// (matches + 1) / (total + 1); orders longer than the candidate are skipped
/// and the mean renormalizes over the rest. An empty candidate scores 0.
double sentence_bleu(const std::string &candidate, const std::string &reference,
                     Smoothing smoothing = Smoothing::add_one);

} // namespace arforge::metrics

#include "arforge/metrics/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "arforge/util/utf8.hpp"

namespace arforge::metrics {

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> count_ngrams(const std::vector<std::string> &tokens, std::size_t order) {
    std::map<Ngram, std::size_t> counts;
    if (tokens.size() < order) return counts;
    for (std::size_t i = 0; i + order <= tokens.size(); ++i)
        ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                       tokens.begin() + static_cast<std::ptrdiff_t>(i + order))];
    return counts;
}

// Adds clipped matches and candidate n-gram totals of one pair.
void accumulate(const std::vector<std::string> &cand, const std::vector<std::string> &ref, BleuBreakdown &stats) {
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
        const auto c = count_ngrams(cand, n);
        const auto r = count_ngrams(ref, n);
        for (const auto &[gram, count] : c) {
            stats.totals[n - 1] += count;
            if (auto it = r.find(gram); it != r.end()) stats.matches[n - 1] += std::min(count, it->second);
        }
    }
    stats.candidate_length += cand.size();
    stats.reference_length += ref.size();
}

double brevity_penalty(std::size_t c, std::size_t r) {
    if (c == 0) return 0.0;
    if (c >= r) return 1.0;
    return std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
}

} // namespace

std::vector<std::string> bleu_tokens(const std::string &line) {
    return util::split_whitespace(util::lowercase_utf8(line));
}

BleuBreakdown corpus_bleu(std::span<const std::string> candidates, std::span<const std::string> references) {
    if (candidates.size() != references.size())
        throw MetricError("corpus_bleu: " + std::to_string(candidates.size()) + " candidates vs " +
                          std::to_string(references.size()) + " references");
    if (candidates.empty()) throw MetricError("corpus_bleu: empty corpus");
    BleuBreakdown stats;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        accumulate(bleu_tokens(candidates[i]), bleu_tokens(references[i]), stats);

    stats.brevity_penalty = brevity_penalty(stats.candidate_length, stats.reference_length);
    double log_sum = 0.0;
    std::size_t used = 0;
    bool zero = stats.candidate_length == 0;
    for (std::size_t n = 0; n < kMaxOrder; ++n) {
        if (stats.totals[n] == 0) continue;
        stats.precisions[n] = static_cast<double>(stats.matches[n]) / static_cast<double>(stats.totals[n]);
        ++used;
        if (stats.matches[n] == 0) zero = true;
        else log_sum += std::log(stats.precisions[n]);
    }
    stats.score = (zero || used == 0) ? 0.0 : 100.0 * stats.brevity_penalty * std::exp(log_sum / static_cast<double>(used));
    return stats;
}

double sentence_bleu(const std::string &candidate, const std::string &reference, Smoothing smoothing) {
    const auto ref = bleu_tokens(reference);
    if (ref.empty()) throw MetricError("sentence_bleu: empty reference");
    const auto cand = bleu_tokens(candidate);
    if (cand.empty()) return 0.0;
    BleuBreakdown stats;
    accumulate(cand, ref, stats);
    double log_sum = 0.0;
    std::size_t used = 0;
    for (std::size_t n = 0; n < kMaxOrder; ++n) {
        if (stats.totals[n] == 0) continue;
        double num = static_cast<double>(stats.matches[n]);
        double den = static_cast<double>(stats.totals[n]);
        if (smoothing == Smoothing::add_one && n >= 1) {
            num += 1.0;
            den += 1.0;
        }
        if (num == 0.0) return 0.0;
        log_sum += std::log(num / den);
        ++used;
    }
    return 100.0 * brevity_penalty(cand.size(), ref.size()) * std::exp(log_sum / static_cast<double>(used));
}

} // namespace arforge::metrics

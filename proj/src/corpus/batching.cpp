#include "arforge/corpus/batching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace arforge::corpus {

std::vector<Batch> batch_by_length(std::span<const TokenizedPair> pairs, std::size_t source_budget,
                                   std::size_t target_budget) {
    if (source_budget == 0 || target_budget == 0) throw std::invalid_argument("batch_by_length: budgets must be > 0");
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (pairs[a].source.size() != pairs[b].source.size()) return pairs[a].source.size() < pairs[b].source.size();
        return pairs[a].target.size() < pairs[b].target.size();
    });

    std::vector<Batch> batches;
    Batch current;
    std::size_t src_tokens = 0, tgt_tokens = 0;
    for (std::size_t idx : order) {
        const std::size_t s = pairs[idx].source.size(), t = pairs[idx].target.size();
        if (!current.empty() && (src_tokens + s > source_budget || tgt_tokens + t > target_budget)) {
            batches.push_back(std::move(current));
            current.clear();
            src_tokens = tgt_tokens = 0;
        }
        current.push_back(idx);
        src_tokens += s;
        tgt_tokens += t;
    }
    if (!current.empty()) batches.push_back(std::move(current));
    return batches;
}

void shuffle_batches(std::vector<Batch> &batches, numerics::SplitMix64 &rng) {
    numerics::shuffle(batches.begin(), batches.end(), rng);
}

ParallelCorpus subsample_to_ratio(const ParallelCorpus &synthetic, std::size_t authentic_size, double ratio,
                                  std::uint64_t seed) {
    if (!(ratio > 0.0)) throw std::invalid_argument("subsample_to_ratio: ratio must be > 0");
    const auto requested = static_cast<std::size_t>(std::floor(static_cast<double>(authentic_size) * ratio));
    if (synthetic.size() <= requested) return synthetic;

    // Partial Fisher-Yates: the first `requested` slots are the sample.
    std::vector<std::size_t> index(synthetic.size());
    std::iota(index.begin(), index.end(), std::size_t{0});
    numerics::SplitMix64 rng(seed);
    for (std::size_t i = 0; i < requested; ++i) std::swap(index[i], index[i + rng.below(index.size() - i)]);
    index.resize(requested);
    std::sort(index.begin(), index.end());

    ParallelCorpus out = synthetic;
    out.source.lines.clear();
    out.target.lines.clear();
    for (std::size_t i : index) {
        out.source.lines.push_back(synthetic.source.lines[i]);
        out.target.lines.push_back(synthetic.target.lines[i]);
    }
    return out;
}

} // namespace arforge::corpus

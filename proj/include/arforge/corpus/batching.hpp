#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "arforge/corpus/corpus.hpp"
#include "arforge/numerics/rng.hpp"

namespace arforge::corpus {

struct TokenizedPair {
    std::vector<int> source;
    std::vector<int> target;
};

/// Indices into the tokenized corpus.
using Batch = std::vector<std::size_t>;

/// Sorts pairs by (source length, target length, index) and packs them in
/// that order; a batch closes when the next pair would push its raw token
/// count past either budget. A pair that alone exceeds a budget becomes a
/// singleton batch. Every pair lands in exactly one batch.
std::vector<Batch> batch_by_length(std::span<const TokenizedPair> pairs, std::size_t source_budget,
                                   std::size_t target_budget);

/// Epoch-level reshuffle of batch order (pairs stay in their buckets).
void shuffle_batches(std::vector<Batch> &batches, numerics::SplitMix64 &rng);

/// Uniform sample without replacement of min(|synthetic|, authentic_size *
/// ratio) pairs, original order kept. The whole corpus comes back when it is
/// smaller than the request.
ParallelCorpus subsample_to_ratio(const ParallelCorpus &synthetic, std::size_t authentic_size, double ratio,
                                  std::uint64_t seed);

} // namespace arforge::corpus

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace arforge::pipeline {

/// Synthetic translation task with a domain shift between the bilingual data
/// and everything else.
///
/// Sentences are sequences of concepts. Each source word maps to one target
/// word; the target sentence lists the mapped words in reverse order. Some
/// concepts have two surface forms on one side: source "ta"/"to" both mean
/// target "et" (and "sa"/"so" mean "es"), while source "mo" becomes "em" or
/// "im" (and "no" becomes "en" or "in"). In the bilingual data the second
/// form is drawn with probability `bilingual_variant_rate`, independently per
/// word. In monolingual and test text the second form is used exactly when
/// the preceding word of the same sentence exists and is not a blocker (ka
/// and la on the source side, ek and el on the target side).
struct ToyTaskOptions {
    std::size_t authentic_pairs = 2000;
    std::size_t monolingual_lines = 10000; // per side
    std::size_t dev_pairs = 200;           // same domain as test
    std::size_t test_pairs = 500;          // monolingual domain
    std::size_t min_words = 4;
    std::size_t max_words = 8;
    double bilingual_variant_rate = 0.2;
    std::uint64_t seed = 2024;
};

struct ToyTask {
    std::vector<std::string> train_source, train_target;
    std::vector<std::string> dev_source, dev_target;
    std::vector<std::string> test_source, test_target;
    std::vector<std::string> mono_source, mono_target;
};

ToyTask make_toy_task(const ToyTaskOptions &options);

/// Writes train/dev/test .src/.tgt and mono.src/mono.tgt into `dir`.
void write_toy_task(const std::filesystem::path &dir, const ToyTask &task);

} // namespace arforge::pipeline

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arforge/corpus/corpus.hpp"

namespace arforge::corpus {

/// Training-corpus compositions, one per row of the strategy table.
enum class Strategy { base, bt, ft, bt_ft, btr_rep, ftr_rep, btr_add, ftr_add, btr_add_ftr_add };

inline constexpr Strategy kAllStrategies[] = {Strategy::base,    Strategy::bt,      Strategy::ft,
                                              Strategy::bt_ft,   Strategy::btr_rep, Strategy::ftr_rep,
                                              Strategy::btr_add, Strategy::ftr_add, Strategy::btr_add_ftr_add};

/// Config identifier, e.g. "BTR_ADD".
std::string_view strategy_id(Strategy strategy);
/// Table label, e.g. "BASE + BTR-ADD".
std::string_view strategy_label(Strategy strategy);
std::optional<Strategy> parse_strategy(std::string_view id);

struct Phase {
    std::vector<ParallelCorpus> corpora;
    std::size_t steps = 0;

    std::size_t pairs() const;
};

struct MixturePlan {
    Strategy strategy = Strategy::base;
    std::vector<Phase> phases;
    double ratio = 1.0; // authentic : synthetic, in sentences
};

/// Corpora available to the builder; strategies name which they need.
struct MixtureInputs {
    const ParallelCorpus *authentic = nullptr;
    const ParallelCorpus *bt = nullptr;
    const ParallelCorpus *ft = nullptr;
    const ParallelCorpus *btr = nullptr;
    const ParallelCorpus *ftr = nullptr;
};

struct MixtureOptions {
    double ratio = 1.0;
    std::uint64_t seed = 0;
    std::size_t single_phase_steps = 0;   // steps of one-phase plans
    std::size_t first_phase_steps = 0;    // FT-first phase of two-phase plans
    std::size_t finetune_phase_steps = 0; // authentic fine-tune phase
};

/// Builds the phase layout of `strategy`. Each synthetic corpus is
/// subsampled to |authentic| * ratio on its own; a corpus and its repaired
/// counterpart (bt/btr, ft/ftr) share a sampling seed so they cover the same
/// monolingual lines. Plans that use FT-style data train on it first and
/// fine-tune on authentic data second.
/// Throws CorpusError when a corpus the strategy needs is missing.
MixturePlan build_mixture(Strategy strategy, const MixtureInputs &inputs, const MixtureOptions &options);

/// Stable JSON document describing the plan (kinds, notation, sizes, steps).
std::string plan_to_json(const MixturePlan &plan);

} // namespace arforge::corpus

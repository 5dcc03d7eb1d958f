#include "arforge/corpus/mixture.hpp"

#include "json.hpp"

#include "arforge/corpus/batching.hpp"
#include "arforge/numerics/rng.hpp"

namespace arforge::corpus {

namespace {

struct StrategyNames {
    Strategy strategy;
    std::string_view id;
    std::string_view label;
};

constexpr StrategyNames kNames[] = {
    {Strategy::base, "BASE", "BASE"},
    {Strategy::bt, "BT", "BASE + BT"},
    {Strategy::ft, "FT", "BASE + FT"},
    {Strategy::bt_ft, "BT_FT", "BASE + BT + FT"},
    {Strategy::btr_rep, "BTR_REP", "BASE + BTR-REP"},
    {Strategy::ftr_rep, "FTR_REP", "BASE + FTR-REP"},
    {Strategy::btr_add, "BTR_ADD", "BASE + BTR-ADD"},
    {Strategy::ftr_add, "FTR_ADD", "BASE + FTR-ADD"},
    {Strategy::btr_add_ftr_add, "BTR_ADD_FTR_ADD", "BASE + BTR-ADD + FTR-ADD"},
};

const StrategyNames &names(Strategy s) {
    for (const auto &n : kNames)
        if (n.strategy == s) return n;
    return kNames[0];
}

} // namespace

std::string_view strategy_id(Strategy strategy) { return names(strategy).id; }
std::string_view strategy_label(Strategy strategy) { return names(strategy).label; }

std::optional<Strategy> parse_strategy(std::string_view id) {
    for (const auto &n : kNames)
        if (n.id == id) return n.strategy;
    return std::nullopt;
}

std::size_t Phase::pairs() const {
    std::size_t n = 0;
    for (const auto &c : corpora) n += c.size();
    return n;
}

MixturePlan build_mixture(Strategy strategy, const MixtureInputs &inputs, const MixtureOptions &options) {
    auto require = [&](const ParallelCorpus *corpus, const char *name) -> const ParallelCorpus & {
        if (!corpus)
            throw CorpusError("strategy " + std::string(strategy_id(strategy)) + " needs the " + name + " corpus");
        return *corpus;
    };
    const ParallelCorpus &authentic = require(inputs.authentic, "authentic");
    const auto bt_seed = numerics::derive_seed(options.seed, "bt");
    const auto ft_seed = numerics::derive_seed(options.seed, "ft");
    auto sample = [&](const ParallelCorpus *corpus, const char *name, std::uint64_t seed) {
        return subsample_to_ratio(require(corpus, name), authentic.size(), options.ratio, seed);
    };
    auto bt = [&] { return sample(inputs.bt, "bt", bt_seed); };
    auto btr = [&] { return sample(inputs.btr, "btr", bt_seed); };
    auto ft = [&] { return sample(inputs.ft, "ft", ft_seed); };
    auto ftr = [&] { return sample(inputs.ftr, "ftr", ft_seed); };

    MixturePlan plan;
    plan.strategy = strategy;
    plan.ratio = options.ratio;
    auto one_phase = [&](std::vector<ParallelCorpus> corpora) {
        plan.phases.push_back({std::move(corpora), options.single_phase_steps});
    };
    auto two_phase = [&](std::vector<ParallelCorpus> first, std::vector<ParallelCorpus> second) {
        plan.phases.push_back({std::move(first), options.first_phase_steps});
        plan.phases.push_back({std::move(second), options.finetune_phase_steps});
    };
    switch (strategy) {
    case Strategy::base: one_phase({authentic}); break;
    case Strategy::bt: one_phase({authentic, bt()}); break;
    case Strategy::ft: two_phase({ft()}, {authentic}); break;
    case Strategy::bt_ft: two_phase({ft()}, {authentic, bt()}); break;
    case Strategy::btr_rep: one_phase({authentic, btr()}); break;
    case Strategy::ftr_rep: two_phase({ftr()}, {authentic}); break;
    case Strategy::btr_add: one_phase({authentic, bt(), btr()}); break;
    case Strategy::ftr_add: two_phase({ft(), ftr()}, {authentic}); break;
    case Strategy::btr_add_ftr_add: two_phase({ft(), ftr()}, {authentic, bt(), btr()}); break;
    }
    for (const auto &phase : plan.phases)
        if (phase.pairs() == 0)
            throw CorpusError("strategy " + std::string(strategy_id(strategy)) + " has an empty training phase");
    return plan;
}

std::string plan_to_json(const MixturePlan &plan) {
    nlohmann::json doc;
    doc["strategy"] = strategy_id(plan.strategy);
    doc["label"] = strategy_label(plan.strategy);
    doc["ratio"] = plan.ratio;
    doc["phases"] = nlohmann::json::array();
    for (const auto &phase : plan.phases) {
        nlohmann::json p;
        p["steps"] = phase.steps;
        p["pairs"] = phase.pairs();
        p["corpora"] = nlohmann::json::array();
        for (const auto &c : phase.corpora)
            p["corpora"].push_back({{"kind", to_string(c.kind)},
                                    {"source", notation(c.source)},
                                    {"target", notation(c.target)},
                                    {"pairs", c.size()}});
        doc["phases"].push_back(std::move(p));
    }
    return doc.dump(2) + "\n";
}

} // namespace arforge::corpus

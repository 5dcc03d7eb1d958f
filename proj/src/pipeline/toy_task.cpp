#include "arforge/pipeline/toy_task.hpp"

#include <array>
#include <stdexcept>

#include "arforge/corpus/corpus.hpp"
#include "arforge/numerics/rng.hpp"

namespace arforge::pipeline {

namespace {

struct Concept {
    const char *source_a;
    const char *source_b; // nullptr: single form
    const char *target_a;
    const char *target_b;
    bool source_blocker;
    bool target_blocker;
};

// Indices: 0-1 blockers, 2-5 plain, 6-7 source-ambiguous, 8-9 target-ambiguous.
constexpr std::array<Concept, 10> kConcepts{{
    {"ka", nullptr, "ek", nullptr, true, true},
    {"la", nullptr, "el", nullptr, true, true},
    {"ko", nullptr, "ik", nullptr, false, false},
    {"lo", nullptr, "il", nullptr, false, false},
    {"ma", nullptr, "it", nullptr, false, false},
    {"na", nullptr, "is", nullptr, false, false},
    {"ta", "to", "et", nullptr, false, false},
    {"sa", "so", "es", nullptr, false, false},
    {"mo", nullptr, "em", "im", false, false},
    {"no", nullptr, "en", "in", false, false},
}};

std::size_t draw_concept(numerics::SplitMix64 &rng) {
    const double u = rng.uniform();
    if (u < 0.3) return 6 + rng.below(2);
    if (u < 0.6) return 8 + rng.below(2);
    if (u < 0.8) return rng.below(2);
    return 2 + rng.below(4);
}

std::vector<std::size_t> draw_sentence(const ToyTaskOptions &o, numerics::SplitMix64 &rng) {
    const std::size_t n = o.min_words + rng.below(o.max_words - o.min_words + 1);
    std::vector<std::size_t> concepts(n);
    for (auto &c : concepts) c = draw_concept(rng);
    return concepts;
}

enum class Domain { bilingual, monolingual };

std::string join(const std::vector<std::string> &words) {
    std::string out;
    for (const auto &w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

// Surface form of a side; `order` lists concept indices in that side's word order.
std::string render(const std::vector<std::size_t> &order, bool source_side, Domain domain, double variant_rate,
                   numerics::SplitMix64 &rng) {
    std::vector<std::string> words;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Concept &c = kConcepts[order[i]];
        const char *a = source_side ? c.source_a : c.target_a;
        const char *b = source_side ? c.source_b : c.target_b;
        bool use_b = false;
        if (b) {
            if (domain == Domain::bilingual) {
                use_b = rng.uniform() < variant_rate;
            } else {
                const Concept &prev = kConcepts[order[i == 0 ? 0 : i - 1]];
                use_b = i > 0 && !(source_side ? prev.source_blocker : prev.target_blocker);
            }
        }
        words.emplace_back(use_b ? b : a);
    }
    return join(words);
}

std::pair<std::string, std::string> render_pair(const std::vector<std::size_t> &concepts, Domain domain,
                                                double variant_rate, numerics::SplitMix64 &rng) {
    std::vector<std::size_t> reversed(concepts.rbegin(), concepts.rend());
    std::string src = render(concepts, true, domain, variant_rate, rng);
    std::string tgt = render(reversed, false, domain, variant_rate, rng);
    return {std::move(src), std::move(tgt)};
}

} // namespace

ToyTask make_toy_task(const ToyTaskOptions &o) {
    if (o.min_words == 0 || o.max_words < o.min_words) throw std::invalid_argument("toy task: bad sentence lengths");
    ToyTask task;
    numerics::SplitMix64 pair_rng(numerics::derive_seed(o.seed, "authentic"));
    for (std::size_t i = 0; i < o.authentic_pairs; ++i) {
        auto [s, t] = render_pair(draw_sentence(o, pair_rng), Domain::bilingual, o.bilingual_variant_rate, pair_rng);
        task.train_source.push_back(std::move(s));
        task.train_target.push_back(std::move(t));
    }
    numerics::SplitMix64 dev_rng(numerics::derive_seed(o.seed, "dev"));
    for (std::size_t i = 0; i < o.dev_pairs; ++i) {
        auto [s, t] = render_pair(draw_sentence(o, dev_rng), Domain::monolingual, 0.0, dev_rng);
        task.dev_source.push_back(std::move(s));
        task.dev_target.push_back(std::move(t));
    }
    numerics::SplitMix64 test_rng(numerics::derive_seed(o.seed, "test"));
    for (std::size_t i = 0; i < o.test_pairs; ++i) {
        auto [s, t] = render_pair(draw_sentence(o, test_rng), Domain::monolingual, 0.0, test_rng);
        task.test_source.push_back(std::move(s));
        task.test_target.push_back(std::move(t));
    }
    numerics::SplitMix64 src_rng(numerics::derive_seed(o.seed, "mono.source"));
    numerics::SplitMix64 tgt_rng(numerics::derive_seed(o.seed, "mono.target"));
    for (std::size_t i = 0; i < o.monolingual_lines; ++i) {
        task.mono_source.push_back(render(draw_sentence(o, src_rng), true, Domain::monolingual, 0.0, src_rng));
        auto concepts = draw_sentence(o, tgt_rng);
        std::vector<std::size_t> reversed(concepts.rbegin(), concepts.rend());
        task.mono_target.push_back(render(reversed, false, Domain::monolingual, 0.0, tgt_rng));
    }
    return task;
}

void write_toy_task(const std::filesystem::path &dir, const ToyTask &task) {
    std::filesystem::create_directories(dir);
    corpus::write_lines(dir / "train.src", task.train_source);
    corpus::write_lines(dir / "train.tgt", task.train_target);
    corpus::write_lines(dir / "dev.src", task.dev_source);
    corpus::write_lines(dir / "dev.tgt", task.dev_target);
    corpus::write_lines(dir / "test.src", task.test_source);
    corpus::write_lines(dir / "test.tgt", task.test_target);
    corpus::write_lines(dir / "mono.src", task.mono_source);
    corpus::write_lines(dir / "mono.tgt", task.mono_target);
}

} // namespace arforge::pipeline

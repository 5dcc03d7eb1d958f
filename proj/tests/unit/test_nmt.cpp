#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "doctest.h"

#include "arforge/metrics/bleu.hpp"
#include "arforge/nmt/decode.hpp"
#include "arforge/nmt/model.hpp"
#include "arforge/nmt/train.hpp"
#include "arforge/numerics/ops.hpp"
#include "arforge/tokenizer/bpe.hpp"
#include "nmt_fixtures.hpp"

using namespace arforge::nmt;
using arforge::corpus::TokenizedPair;
using arforge::numerics::SplitMix64;
using arforge::tokenizer::kEosId;

namespace {

ModelConfig tiny() {
    ModelConfig c;
    c.num_layers = 2;
    c.model_dim = 16;
    c.num_heads = 2;
    c.ffn_dim = 24;
    c.dropout = 0.0;
    c.max_positions = 32;
    return c;
}

// Written out per block rather than derived from the model's tensors.
std::size_t count_by_hand(const ModelConfig &c, std::size_t sv, std::size_t tv) {
    const std::size_t d = c.model_dim, f = c.ffn_dim;
    const std::size_t norm = 2 * d;
    const std::size_t attn = 4 * (d * d + d);
    const std::size_t ffn = d * f + f + f * d + d;
    const std::size_t enc = 2 * norm + attn + ffn;
    const std::size_t dec = 3 * norm + 2 * attn + ffn;
    return sv * d + tv * d + c.num_layers * (enc + dec) + 2 * norm + d * tv + tv;
}

std::vector<double> log_softmax_row(std::span<const double> row) {
    const double m = *std::max_element(row.begin(), row.end());
    double z = 0;
    for (double v : row) z += std::exp(v - m);
    std::vector<double> out(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i] - m - std::log(z);
    return out;
}

// Two decoding steps: the first draws from `first`, the second forces EOS.
class TwoStepScorer : public Scorer {
  public:
    explicit TwoStepScorer(std::vector<double> first) : first_(std::move(first)) {}
    std::size_t vocab_size() const override { return first_.size(); }
    std::vector<double> advance(std::span<const std::size_t> parents, std::span<const int>) override {
        std::vector<double> out;
        const bool initial = step_++ == 0;
        for (std::size_t r = 0; r < parents.size(); ++r) {
            if (initial) {
                out.insert(out.end(), first_.begin(), first_.end());
            } else {
                for (std::size_t v = 0; v < first_.size(); ++v)
                    out.push_back(static_cast<int>(v) == kEosId ? 0.0 : -std::numeric_limits<double>::infinity());
            }
        }
        return out;
    }

  private:
    std::vector<double> first_;
    int step_ = 0;
};

} // namespace

TEST_CASE("parameter count matches the closed form") {
    for (std::size_t layers : {1u, 2u, 3u}) {
        auto c = tiny();
        c.num_layers = layers;
        const auto model = init_model(c, ModelRole::s2t, 11, 13, 1);
        CHECK(model.parameter_count() == count_by_hand(c, 11, 13));
        CHECK(expected_parameter_count(c, 11, 13) == count_by_hand(c, 11, 13));
    }
}

TEST_CASE("initialization is seeded and bounded") {
    const auto a = init_model(tiny(), ModelRole::s2t, 10, 10, 5);
    const auto b = init_model(tiny(), ModelRole::s2t, 10, 10, 5);
    const auto c = init_model(tiny(), ModelRole::s2t, 10, 10, 6);
    CHECK(std::equal(a.output_weight.values().begin(), a.output_weight.values().end(),
                     b.output_weight.values().begin()));
    CHECK_FALSE(std::equal(a.output_weight.values().begin(), a.output_weight.values().end(),
                           c.output_weight.values().begin()));
    const double bound = std::sqrt(6.0 / (16 + 16));
    for (double v : a.encoder[0].self_attention.wq.values()) CHECK(std::abs(v) <= bound);
    for (double v : a.encoder[0].self_norm.gain.values()) CHECK(v == 1.0);
}

TEST_CASE("config validation and roles") {
    auto c = tiny();
    c.num_heads = 3;
    CHECK_THROWS_AS(c.validate(), ModelError);
    CHECK(parse_role(to_string(ModelRole::t2t_ar)) == ModelRole::t2t_ar);
    CHECK(to_string(ModelRole::s2s_ar) == "S2S_AR");
}

TEST_CASE("decoder logits at a position ignore later prefix tokens") {
    const auto model = init_model(tiny(), ModelRole::s2t, 12, 12, 3);
    const std::vector<std::vector<int>> src{{5, 6, 7, kEosId}};
    const std::vector<std::vector<int>> p1{{1, 4, 5, 6}}, p2{{1, 4, 9, 10}};
    const auto a = forward_logits(model, src, p1), b = forward_logits(model, src, p2);
    for (std::size_t i = 0; i < 2 * 12; ++i) CHECK(a.values()[i] == doctest::Approx(b.values()[i]).epsilon(1e-12));
    bool differs = false;
    for (std::size_t i = 2 * 12; i < 4 * 12; ++i) differs = differs || a.values()[i] != b.values()[i];
    CHECK(differs);
}

TEST_CASE("padding a batch does not change a sentence's logits") {
    const auto model = init_model(tiny(), ModelRole::s2t, 12, 12, 3);
    const std::vector<std::vector<int>> one{{5, 6, kEosId}};
    const std::vector<std::vector<int>> two{{5, 6, kEosId}, {7, 8, 9, 10, 11, kEosId}};
    const std::vector<std::vector<int>> p1{{1, 4}}, p2{{1, 4}, {1, 5}};
    const auto a = forward_logits(model, one, p1), b = forward_logits(model, two, p2);
    for (std::size_t i = 0; i < 2 * 12; ++i) CHECK(a.values()[i] == doctest::Approx(b.values()[i]).epsilon(1e-12));
}

TEST_CASE("incremental scorer agrees with the full forward pass") {
    const auto model = init_model(tiny(), ModelRole::s2t, 12, 12, 9);
    const std::vector<std::vector<int>> src{{5, 6, 7, kEosId}, {8, kEosId}};
    const std::vector<int> prefix{1, 9, 4, 11};
    TransformerScorer scorer(model, src);
    std::vector<std::size_t> parents{0, 1};
    std::vector<int> tokens{1, 1};
    for (std::size_t t = 0; t < prefix.size(); ++t) {
        tokens = {prefix[t], prefix[t]};
        const auto inc = scorer.advance(parents, tokens);
        const std::vector<std::vector<int>> prefixes{{prefix.begin(), prefix.begin() + t + 1},
                                                     {prefix.begin(), prefix.begin() + t + 1}};
        const auto full = forward_logits(model, src, prefixes);
        for (std::size_t b = 0; b < 2; ++b) {
            const auto row = log_softmax_row(full.values().subspan((b * (t + 1) + t) * 12, 12));
            for (std::size_t v = 0; v < 12; ++v) CHECK(inc[b * 12 + v] == doctest::Approx(row[v]).epsilon(1e-9));
        }
        parents = {0, 1};
    }
}

TEST_CASE("beam over the whole vocabulary finds the enumerated optimum") {
    SplitMix64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t vocab = 6;
        std::vector<double> logits(vocab);
        for (double &v : logits) v = rng.uniform(-3, 3);
        const auto first = log_softmax_row(logits);
        const double alpha = trial % 2 ? 0.6 : 1.0;
        // Candidates: [EOS] or [t, EOS].
        double best = -1e300;
        std::vector<int> best_seq;
        for (std::size_t t = 0; t < vocab; ++t) {
            const bool eos = static_cast<int>(t) == kEosId;
            const std::size_t len = eos ? 1 : 2;
            const double s = first[t] / length_penalty(len, alpha);
            if (s > best) {
                best = s;
                best_seq = eos ? std::vector<int>{kEosId} : std::vector<int>{static_cast<int>(t), kEosId};
            }
        }
        TwoStepScorer scorer(first);
        const std::vector<std::size_t> max_lens{2};
        const auto hyps = beam_search(scorer, max_lens, {vocab, alpha});
        REQUIRE(hyps.size() == 1);
        CHECK(hyps[0].tokens == best_seq);
        CHECK(hyps[0].score == doctest::Approx(best));
    }
}

TEST_CASE("beam 1 equals greedy decoding") {
    const auto model = init_model(tiny(), ModelRole::s2t, 12, 12, 13);
    SplitMix64 rng(2);
    for (int i = 0; i < 20; ++i) {
        std::vector<int> src(1 + rng.below(6));
        for (int &t : src) t = 4 + static_cast<int>(rng.below(8));
        CHECK(beam_decode(model, src, 1, 0.6, 12) == greedy_decode(model, src, 12));
    }
}

TEST_CASE("batched decoding matches one-at-a-time decoding") {
    const auto model = init_model(tiny(), ModelRole::s2t, 12, 12, 14);
    const std::vector<std::vector<int>> sources{{4, 5}, {6, 7, 8, 9}, {10}};
    DecodeSettings s;
    s.batch_sentences = 3;
    const auto batched = decode_batch(model, sources, s);
    for (std::size_t i = 0; i < sources.size(); ++i)
        CHECK(batched[i] == beam_decode(model, sources[i], s.beam_size, s.length_alpha,
                                        s.max_len_for(sources[i].size())));
}

TEST_CASE("length penalty") {
    CHECK(length_penalty(1, 0.6) == doctest::Approx(1.0));
    CHECK(length_penalty(7, 1.0) == doctest::Approx(2.0));
}

TEST_CASE("teacher batch layout") {
    const std::vector<TokenizedPair> pairs{{{4, 5}, {6}}, {{7}, {8, 9}}};
    const std::vector<std::size_t> idx{0, 1};
    const auto b = make_teacher_batch(pairs, idx);
    CHECK(b.sources[0] == std::vector<int>{4, 5, kEosId});
    CHECK(b.inputs[0] == std::vector<int>{1, 6}); // forward_logits pads
    CHECK(b.inputs[1] == std::vector<int>{1, 8, 9});
    CHECK(b.gold == std::vector<int>{6, kEosId, 0, 8, 9, kEosId});
}

TEST_CASE("a tiny model memorizes its training pairs") {
    const auto pairs = fixtures::reversal_pairs(12, 7);
    auto model = init_model(tiny(), ModelRole::s2t, fixtures::kVocab, fixtures::kVocab, 2);
    TrainingSchedule s;
    s.max_steps = 400;
    s.warmup_steps = 60;
    s.source_budget = s.target_budget = 200;
    s.dropout = 0.0;
    s.label_smoothing = 0.0;
    s.checkpoint_interval = 100;
    s.lr_scale = 2.0;
    const auto log = train(model, pairs, pairs, s);
    const double nll = evaluate_loss(model, pairs, 200, 200);
    CHECK(nll < 0.1);
    CHECK(std::exp(nll) < 1.1);
    CHECK(log.best_dev_loss <= log.dev_losses.back().second);
    for (const auto &p : pairs) CHECK(greedy_decode(model, p.source, 20) == p.target);
}

TEST_CASE("training is deterministic and keeps the best checkpoint") {
    const auto pairs = fixtures::reversal_pairs(8, 3);
    TrainingSchedule s;
    s.max_steps = 30;
    s.warmup_steps = 10;
    s.checkpoint_interval = 10;
    s.source_budget = s.target_budget = 20;
    auto a = init_model(tiny(), ModelRole::s2t, fixtures::kVocab, fixtures::kVocab, 1);
    auto b = a.clone();
    const auto la = train(a, pairs, pairs, s);
    const auto lb = train(b, pairs, pairs, s);
    CHECK(la.losses == lb.losses);
    CHECK(la.steps == 30);
    CHECK(std::equal(a.output_bias.values().begin(), a.output_bias.values().end(), b.output_bias.values().begin()));
    double best = 1e300;
    for (auto [step, loss] : la.dev_losses) best = std::min(best, loss);
    CHECK(la.best_dev_loss == best);
    CHECK(la.dev_losses.back().first == 30);
    s.max_steps = 0;
    auto c = a.clone();
    CHECK(train(c, pairs, pairs, s).steps == 0);
}

TEST_CASE("model save and load round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "arforge_model_test";
    std::filesystem::create_directories(dir);
    const auto model = init_model(tiny(), ModelRole::t2t_ar, 9, 9, 4);
    save_model(dir / "m", model);
    const auto back = load_model(dir / "m");
    CHECK(back.role() == ModelRole::t2t_ar);
    CHECK(back.config() == model.config());
    const auto a = model.named_parameters(), b = back.named_parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].name == b[i].name);
        CHECK(std::equal(a[i].tensor.values().begin(), a[i].tensor.values().end(), b[i].tensor.values().begin()));
    }
    std::filesystem::remove_all(dir);
}

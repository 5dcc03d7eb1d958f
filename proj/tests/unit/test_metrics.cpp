#include <cmath>

#include "doctest.h"

#include "arforge/metrics/bleu.hpp"
#include "arforge/metrics/rates.hpp"
#include "arforge/metrics/report.hpp"
#include "oracles.hpp"

using namespace arforge::metrics;
using arforge::numerics::SplitMix64;

TEST_CASE("hand case: four of five reference words") {
    const std::vector<std::string> c{"a b c d"}, r{"a b c d e"};
    CHECK(corpus_bleu(c, r).score == doctest::Approx(100.0 * std::exp(-0.25)).epsilon(1e-12));
    CHECK(std::abs(corpus_bleu(c, r).score - 77.88) <= 0.01);
}

TEST_CASE("identical corpora score 100, disjoint ones 0") {
    const std::vector<std::string> c{"the cat sat down", "on the mat today"};
    CHECK(corpus_bleu(c, c).score == doctest::Approx(100.0));
    const std::vector<std::string> d{"x y z w", "q r s t"};
    CHECK(corpus_bleu(d, c).score == 0.0);
}

TEST_CASE("bleu is case-insensitive and clips repeated n-grams") {
    const std::vector<std::string> c{"The THE the the"}, r{"the cat"};
    const auto b = corpus_bleu(c, r);
    CHECK(b.matches[0] == 1);
    CHECK(b.totals[0] == 4);
}

TEST_CASE("corpus bleu agrees with the brute-force oracle") {
    SplitMix64 rng(99);
    for (int t = 0; t < 40; ++t) {
        std::vector<std::string> cands, refs;
        const std::size_t n = 1 + rng.below(20);
        for (std::size_t i = 0; i < n; ++i) {
            refs.push_back(oracle::random_sentence(rng, 15, 10));
            cands.push_back(rng.below(2) ? oracle::perturb(rng, refs.back(), 10)
                                         : oracle::random_sentence(rng, 15, 10));
        }
        CHECK(std::abs(corpus_bleu(cands, refs).score - oracle::corpus_bleu(cands, refs)) < 1e-9);
    }
}

TEST_CASE("sentence bleu agrees with the oracle and handles short candidates") {
    SplitMix64 rng(5);
    for (int t = 0; t < 200; ++t) {
        const auto ref = oracle::random_sentence(rng, 8, 6);
        const auto cand = oracle::perturb(rng, ref, 6);
        CHECK(std::abs(sentence_bleu(cand, ref) - oracle::sentence_bleu(cand, ref)) < 1e-9);
    }
    CHECK(sentence_bleu("", "a b") == 0.0);
    CHECK(sentence_bleu("a b c d", "a b c d") == doctest::Approx(100.0));
    CHECK(sentence_bleu("a", "a") == doctest::Approx(100.0));
}

TEST_CASE("bleu input errors") {
    const std::vector<std::string> one{"a"}, none;
    CHECK_THROWS_AS(corpus_bleu(one, none), MetricError);
    CHECK_THROWS_AS(corpus_bleu(none, none), MetricError);
}

TEST_CASE("change and better rates against brute force") {
    SplitMix64 rng(123);
    for (int t = 0; t < 50; ++t) {
        std::vector<std::string> noisy, repaired, clean;
        const std::size_t n = 1 + rng.below(12);
        for (std::size_t i = 0; i < n; ++i) {
            clean.push_back(oracle::random_sentence(rng, 8, 6));
            noisy.push_back(oracle::perturb(rng, clean.back(), 6));
            repaired.push_back(rng.below(3) == 0 ? noisy.back() : oracle::perturb(rng, clean.back(), 6));
        }
        CHECK(change_rate(noisy, repaired) == doctest::Approx(oracle::change_rate(noisy, repaired)));
        CHECK(better_rate(noisy, repaired, clean) == doctest::Approx(oracle::better_rate(noisy, repaired, clean)));
        CHECK(change_rate(noisy, noisy) == 0.0);
        CHECK(better_rate(noisy, noisy, clean) == 0.0);
    }
}

TEST_CASE("change rate ignores trailing whitespace only") {
    const std::vector<std::string> a{"x y", "x y"}, b{"x y  ", "x  y"};
    CHECK(change_rate(a, b) == doctest::Approx(0.5));
}

TEST_CASE("repair row reproduces the published formatting") {
    ArQualityReport r{"EN2EN", 47.02, 58.47, 0.7940, 0.7217, 1000};
    CHECK(format_repair_row(r) == "EN2EN | 47.02 | 58.47 | 79.40% | 72.17%");
}

TEST_CASE("strategy rows and tables") {
    StrategyRow base{"BASE", "BASE", 27.52, 0.0};
    StrategyRow add{"BTR_ADD", "BASE + BTR-ADD", 29.29, 1.77};
    CHECK(format_strategy_row(add) == "BASE + BTR-ADD | 29.29 | +1.77");
    CHECK(format_strategy_row(base) == "BASE | 27.52 | +0.00");
    ExperimentReport report{{base, add}, {{"S2S", 40.0, 45.0, 0.5, 0.4, 10}}};
    const auto table = render_table(report);
    CHECK(table.find("BLEU") != std::string::npos);
    CHECK(table.find("Δ") != std::string::npos);
    CHECK(table.find("CR") != std::string::npos);
    CHECK(table.find("BR") != std::string::npos);
}

TEST_CASE("report json round trip is byte-identical") {
    ExperimentReport report{{{"BASE", "BASE", 27.52, 0.0}, {"BT", "BASE + BT", 28.1, 0.58}},
                            {{"S2S", 40.123456789, 45.5, 0.5, 0.25, 10}}};
    const auto text = render_json(report);
    const auto again = render_json(report_from_json(nlohmann::json::parse(text)));
    CHECK(text == again);
}

TEST_CASE("assess_repair combines the metrics") {
    const std::vector<std::string> noisy{"a b c x", "a b c d"}, fixed{"a b c d", "a b c d"}, clean{"a b c d", "a b c d"};
    const auto r = assess_repair("S2S", noisy, fixed, clean);
    CHECK(r.change_rate == doctest::Approx(0.5));
    CHECK(r.better_rate == doctest::Approx(0.5));
    CHECK(r.bleu_after == doctest::Approx(100.0));
    CHECK(r.bleu_before < r.bleu_after);
    CHECK(r.sentences == 2);
}

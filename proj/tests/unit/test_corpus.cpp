#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"

#include "arforge/corpus/batching.hpp"
#include "arforge/corpus/corpus.hpp"
#include "arforge/corpus/mixture.hpp"

using namespace arforge::corpus;
using arforge::numerics::SplitMix64;

namespace {

std::filesystem::path scratch(const std::string &name) {
    const auto dir = std::filesystem::temp_directory_path() / "arforge_corpus_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write_raw(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::vector<TokenizedPair> random_pairs(SplitMix64 &rng, std::size_t n, std::size_t max_len) {
    std::vector<TokenizedPair> pairs(n);
    for (auto &p : pairs) {
        p.source.assign(1 + rng.below(max_len), 5);
        p.target.assign(1 + rng.below(max_len), 6);
    }
    return pairs;
}

ParallelCorpus numbered(std::size_t n, PairKind kind, const std::string &tag) {
    std::vector<std::string> s, t;
    for (std::size_t i = 0; i < n; ++i) {
        s.push_back(tag + "s" + std::to_string(i));
        t.push_back(tag + "t" + std::to_string(i));
    }
    return make_parallel(s, t, kind);
}

} // namespace

TEST_CASE("notation and tags") {
    const auto bt = make_parallel({"a"}, {"b"}, PairKind::bt);
    CHECK(notation(bt.source) == "S_s^m");
    CHECK(notation(bt.target) == "T_a^m");
    const auto btr = make_parallel({"a"}, {"b"}, PairKind::btr);
    CHECK(notation(btr.source) == "S_sr^m");
    const auto auth = make_parallel({"a"}, {"b"}, PairKind::authentic);
    CHECK(notation(auth.target) == "T_a^b");
    auto broken = bt;
    broken.source.provenance = Provenance::authentic;
    CHECK_THROWS_AS(validate(broken), CorpusError);
    CHECK_THROWS_AS(make_parallel({"a", "b"}, {"c"}, PairKind::authentic), CorpusError);
}

TEST_CASE("parallel loading drops blank pairs and reports misalignment") {
    write_raw(scratch("a.src"), "one\n\nthree\nfour\n");
    write_raw(scratch("a.tgt"), "uno\ndos\ntres\n\n");
    const auto pc = load_parallel(scratch("a.src"), scratch("a.tgt"), PairKind::authentic);
    CHECK(pc.source.lines == std::vector<std::string>{"one", "three"});
    CHECK(pc.target.lines == std::vector<std::string>{"uno", "tres"});
    write_raw(scratch("b.tgt"), "x\n");
    CHECK_THROWS_AS(load_parallel(scratch("a.src"), scratch("b.tgt"), PairKind::authentic), CorpusError);
    write_raw(scratch("bad.txt"), "ok\n\xC3\x28\n");
    try {
        load_monolingual(scratch("bad.txt"), Language::source, Provenance::authentic, Origin::monolingual);
        FAIL("expected an error");
    } catch (const CorpusError &e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("read_lines keeps blank lines") {
    write_lines(scratch("lines.txt"), {"a", "", "c"});
    CHECK(read_lines(scratch("lines.txt")) == std::vector<std::string>{"a", "", "c"});
}

TEST_CASE("batches respect budgets and partition the corpus") {
    SplitMix64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        const auto pairs = random_pairs(rng, 1 + rng.below(200), 40);
        const std::size_t sb = 10 + rng.below(100), tb = 10 + rng.below(100);
        const auto batches = batch_by_length(pairs, sb, tb);
        std::vector<int> seen(pairs.size(), 0);
        for (const auto &b : batches) {
            REQUIRE_FALSE(b.empty());
            std::size_t s = 0, t = 0;
            for (auto i : b) {
                ++seen[i];
                s += pairs[i].source.size();
                t += pairs[i].target.size();
            }
            if (b.size() > 1) {
                CHECK(s <= sb);
                CHECK(t <= tb);
            }
        }
        for (int c : seen) CHECK(c == 1);
    }
}

TEST_CASE("an oversize pair becomes a singleton batch") {
    std::vector<TokenizedPair> pairs{{std::vector<int>(50, 5), {6}}, {{5}, {6}}, {{5}, {6}}};
    const auto batches = batch_by_length(pairs, 10, 10);
    REQUIRE(batches.size() == 2);
    CHECK(batches[1] == Batch{0});
}

TEST_CASE("subsample keeps order and is seeded") {
    const auto bt = numbered(100, PairKind::bt, "");
    const auto a = subsample_to_ratio(bt, 20, 1.0, 3);
    const auto b = subsample_to_ratio(bt, 20, 1.0, 3);
    CHECK(a.size() == 20);
    CHECK(a.source.lines == b.source.lines);
    for (std::size_t i = 1; i < a.size(); ++i)
        CHECK(std::stoi(a.source.lines[i].substr(1)) > std::stoi(a.source.lines[i - 1].substr(1)));
    CHECK(subsample_to_ratio(bt, 500, 1.0, 3).size() == 100);
}

TEST_CASE("mixture layouts") {
    const auto auth = numbered(10, PairKind::authentic, "a");
    const auto bt = numbered(30, PairKind::bt, "b");
    const auto btr = numbered(30, PairKind::btr, "r");
    const auto ft = numbered(30, PairKind::ft, "f");
    const auto ftr = numbered(30, PairKind::ftr, "g");
    const MixtureInputs in{&auth, &bt, &ft, &btr, &ftr};
    MixtureOptions o;
    o.seed = 4;
    o.single_phase_steps = 100;
    o.first_phase_steps = 60;
    o.finetune_phase_steps = 40;

    const auto base = build_mixture(Strategy::base, in, o);
    REQUIRE(base.phases.size() == 1);
    CHECK(base.phases[0].pairs() == 10);
    CHECK(base.phases[0].steps == 100);

    const auto add = build_mixture(Strategy::btr_add, in, o);
    REQUIRE(add.phases.size() == 1);
    REQUIRE(add.phases[0].corpora.size() == 3);
    CHECK(add.phases[0].corpora[1].size() == 10);
    // bt and btr sample the same monolingual lines (same line numbers).
    const auto &sampled_bt = add.phases[0].corpora[1].source.lines, &sampled_btr = add.phases[0].corpora[2].source.lines;
    REQUIRE(sampled_bt.size() == sampled_btr.size());
    for (std::size_t i = 0; i < sampled_bt.size(); ++i) CHECK(sampled_bt[i].substr(2) == sampled_btr[i].substr(2));

    const auto ftp = build_mixture(Strategy::ft, in, o);
    REQUIRE(ftp.phases.size() == 2);
    CHECK(ftp.phases[0].corpora[0].kind == PairKind::ft);
    CHECK(ftp.phases[1].corpora[0].kind == PairKind::authentic);
    CHECK(ftp.phases[0].steps == 60);
    CHECK(ftp.phases[1].steps == 40);

    const auto all = build_mixture(Strategy::btr_add_ftr_add, in, o);
    CHECK(all.phases[0].corpora.size() == 2);
    CHECK(all.phases[1].corpora.size() == 3);

    const MixtureInputs missing{&auth, nullptr, nullptr, nullptr, nullptr};
    CHECK_THROWS_AS(build_mixture(Strategy::bt, missing, o), CorpusError);
    CHECK(plan_to_json(add) == plan_to_json(build_mixture(Strategy::btr_add, in, o)));
}

TEST_CASE("strategy names round trip") {
    std::set<std::string> labels;
    for (auto s : kAllStrategies) {
        CHECK(parse_strategy(strategy_id(s)) == s);
        labels.insert(std::string(strategy_label(s)));
    }
    CHECK(labels.size() == 9);
    CHECK(strategy_label(Strategy::btr_add_ftr_add) == "BASE + BTR-ADD + FTR-ADD");
    CHECK_FALSE(parse_strategy("NOPE").has_value());
}

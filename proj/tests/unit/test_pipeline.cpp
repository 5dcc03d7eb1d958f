#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"

#include "arforge/metrics/bleu.hpp"
#include "arforge/pipeline/config.hpp"
#include "arforge/pipeline/ledger.hpp"
#include "arforge/pipeline/pipeline.hpp"
#include "arforge/pipeline/toy_task.hpp"

using namespace arforge;
using namespace arforge::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string &name) {
    const auto dir = fs::temp_directory_path() / ("arforge_pipeline_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

corpus::ParallelCorpus numbered(std::size_t n) {
    std::vector<std::string> s, t;
    for (std::size_t i = 0; i < n; ++i) {
        s.push_back("n" + std::to_string(i));
        t.push_back("c" + std::to_string(i));
    }
    return corpus::make_parallel(s, t, corpus::PairKind::ar_source);
}

nmt::TrainingSchedule short_schedule(std::size_t steps) {
    nmt::TrainingSchedule s;
    s.max_steps = steps;
    s.warmup_steps = 10;
    s.checkpoint_interval = 10;
    s.source_budget = s.target_budget = 200;
    return s;
}

// A whole experiment small enough for a unit test.
ExperimentConfig tiny_experiment(const fs::path &root) {
    ToyTaskOptions o;
    o.authentic_pairs = 60;
    o.monolingual_lines = 80;
    o.dev_pairs = 10;
    o.test_pairs = 10;
    write_toy_task(root / "data", make_toy_task(o));
    nlohmann::json doc = {
        {"run_dir", "run"},
        {"seed", 3},
        {"data",
         {{"train_source", "data/train.src"}, {"train_target", "data/train.tgt"}, {"dev_source", "data/dev.src"},
          {"dev_target", "data/dev.tgt"},     {"test_source", "data/test.src"},   {"test_target", "data/test.tgt"},
          {"mono_source", "data/mono.src"},   {"mono_target", "data/mono.tgt"}}},
        {"tokenizer", {{"num_merges", 10}, {"vocab_cap", 0}}},
        {"nmt_model", {{"model_dim", 8}, {"num_heads", 2}, {"ffn_dim", 8}, {"num_layers", 1}, {"max_positions", 40}}},
        {"ar_model", {{"model_dim", 8}, {"num_heads", 2}, {"ffn_dim", 8}, {"num_layers", 1}, {"max_positions", 40}}},
        {"nmt_training", {{"max_steps", 6}, {"warmup_steps", 3}, {"checkpoint_interval", 3}}},
        {"ar_training", {{"max_steps", 6}, {"warmup_steps", 3}, {"checkpoint_interval", 3}}},
        {"strategy_training", {{"warmup_steps", 2}, {"checkpoint_interval", 2}}},
        {"strategy_steps", {{"single_phase", 4}, {"first_phase", 2}, {"finetune_phase", 2}}},
        {"decode", {{"beam", 2}, {"max_len_factor", 1.0}, {"max_len_offset", 3}}},
        {"ar_dev_size", 5},
    };
    return config_from_json(doc, root);
}

} // namespace

TEST_CASE("AR dev split partitions the pairs") {
    const auto pairs = numbered(50);
    const auto a = split_ar_dev(pairs, 5, 9);
    const auto b = split_ar_dev(pairs, 5, 9);
    CHECK(a.dev.size() == 5);
    CHECK(a.train.size() + a.dev.size() == 50);
    CHECK(a.dev.source.lines == b.dev.source.lines);
    std::set<std::string> all(a.train.source.lines.begin(), a.train.source.lines.end());
    for (const auto &line : a.dev.source.lines) CHECK(all.insert(line).second);
    CHECK(all.size() == 50);
    CHECK(a.dev.kind == corpus::PairKind::ar_source);
    CHECK_THROWS(split_ar_dev(pairs, 50, 9));
}

TEST_CASE("AR dev size is clamped to the configured share") {
    CHECK(effective_ar_dev_size(10000, 1000, 0.1) == 1000);
    CHECK(effective_ar_dev_size(5000, 1000, 0.1) == 500);
    CHECK(effective_ar_dev_size(100, 3, 0.1) == 3);
}

TEST_CASE("ledger detects changed inputs, seeds, settings and outputs") {
    const auto dir = fresh_dir("ledger");
    {
        std::ofstream(dir / "in.txt") << "hello\n";
        std::ofstream(dir / "out.txt") << "world\n";
    }
    StageLedger ledger(dir / "ledger.json");
    ledger.record("s", {dir / "in.txt"}, {dir / "out.txt"}, 5, "abc", 0.1);
    StageLedger reloaded(dir / "ledger.json");
    reloaded.load();
    CHECK(reloaded.is_current("s", {dir / "in.txt"}, 5, "abc"));
    CHECK_FALSE(reloaded.is_current("s", {dir / "in.txt"}, 6, "abc"));
    CHECK_FALSE(reloaded.is_current("s", {dir / "in.txt"}, 5, "abd"));
    CHECK_FALSE(reloaded.is_current("t", {dir / "in.txt"}, 5, "abc"));
    std::ofstream(dir / "out.txt") << "changed\n";
    CHECK_FALSE(reloaded.is_current("s", {dir / "in.txt"}, 5, "abc"));
    std::ofstream(dir / "out.txt") << "world\n";
    std::ofstream(dir / "in.txt") << "hello again\n";
    CHECK_FALSE(reloaded.is_current("s", {dir / "in.txt"}, 5, "abc"));
    CHECK(hash_file(dir / "in.txt").size() == 16);
}

TEST_CASE("config rejects unknown keys and resolves relative paths") {
    const nlohmann::json bad = {{"seed", 1}, {"sed", 2}};
    CHECK_THROWS_WITH_AS(config_from_json(bad, "/x"), doctest::Contains("sed"), ConfigError);
    const nlohmann::json nested = {{"decode", {{"beam", 3}, {"beams", 2}}}};
    CHECK_THROWS_AS(config_from_json(nested, "/x"), ConfigError);
    const nlohmann::json wrong = {{"seed", "one"}};
    CHECK_THROWS_AS(config_from_json(wrong, "/x"), ConfigError);
    const nlohmann::json ok = {{"run_dir", "runs/a"}, {"data", {{"train_source", "/abs/t.src"}}}, {"decode", {{"beam", 2}}}};
    const auto c = config_from_json(ok, "/base");
    CHECK(c.run_dir == fs::path("/base/runs/a"));
    CHECK(c.data.train_source == fs::path("/abs/t.src"));
    CHECK(c.decode.beam_size == 2);
    const auto again = config_from_json(config_to_json(c), "/elsewhere");
    CHECK(config_to_json(again) == config_to_json(c));
    const nlohmann::json strategies = {{"strategies", {"BASE", "WHAT"}}};
    CHECK_THROWS_AS(config_from_json(strategies, "/x"), ConfigError);
}

TEST_CASE("building blocks check model roles") {
    const auto bpe = tokenizer::learn_merges(std::vector<std::vector<std::string>>{{"ka ek"}}, {2, std::nullopt});
    const tokenizer::Encoder enc(bpe.table, bpe.vocab);
    nmt::ModelConfig c;
    c.model_dim = 8;
    c.num_heads = 2;
    c.ffn_dim = 8;
    c.num_layers = 1;
    const auto s2t = nmt::init_model(c, nmt::ModelRole::s2t, bpe.vocab.size(), bpe.vocab.size(), 1);
    const auto t2s = nmt::init_model(c, nmt::ModelRole::t2s, bpe.vocab.size(), bpe.vocab.size(), 2);
    corpus::MonolingualCorpus mono_t{{"ek", "ek ek"}, corpus::Language::target, corpus::Provenance::authentic,
                                     corpus::Origin::monolingual};
    nmt::DecodeSettings d;
    d.max_len_offset = 3;
    CHECK_THROWS(generate_synthetic(SyntheticDirection::bt, s2t, mono_t, enc, d));
    const auto bt = generate_synthetic(SyntheticDirection::bt, t2s, mono_t, enc, d);
    CHECK(bt.kind == corpus::PairKind::bt);
    CHECK(bt.size() == 2);
    CHECK(bt.target.lines == mono_t.lines);
    CHECK(bt.target.provenance == corpus::Provenance::authentic);
    const auto ar = generate_ar_pairs(corpus::Language::target, s2t, t2s, mono_t, enc, d);
    CHECK(ar.target.lines == mono_t.lines);
    CHECK(ar.kind == corpus::PairKind::ar_target);
    auto synthetic = bt.source;
    CHECK_THROWS(repair_corpus(s2t, synthetic, enc, d));
}

TEST_CASE("an identity repair model copies held-out text") {
    // Copy task over the toy vocabulary: noisy == clean.
    ToyTaskOptions o;
    o.monolingual_lines = 600;
    const auto task = make_toy_task(o);
    std::vector<std::string> train(task.mono_source.begin(), task.mono_source.begin() + 550);
    std::vector<std::string> held(task.mono_source.begin() + 550, task.mono_source.end());
    const auto bpe = tokenizer::learn_merges(std::vector<std::vector<std::string>>{train}, {0, std::nullopt});
    const tokenizer::Encoder enc(bpe.table, bpe.vocab);
    const auto pairs = tokenize_pairs(corpus::make_parallel(train, train, corpus::PairKind::ar_source), enc);
    nmt::ModelConfig c;
    c.model_dim = 32;
    c.num_heads = 4;
    c.ffn_dim = 64;
    c.dropout = 0.0;
    c.max_positions = 40;
    auto model = nmt::init_model(c, nmt::ModelRole::s2s_ar, bpe.vocab.size(), bpe.vocab.size(), 7);
    auto s = short_schedule(500);
    s.warmup_steps = 100;
    s.checkpoint_interval = 100;
    s.source_budget = s.target_budget = 300;
    s.dropout = 0.0;
    nmt::train(model, pairs, {}, s);
    corpus::MonolingualCorpus noisy{held, corpus::Language::source, corpus::Provenance::synthetic,
                                    corpus::Origin::monolingual};
    const auto repaired = repair_corpus(model, noisy, enc, {});
    CHECK(repaired.provenance == corpus::Provenance::repaired);
    CHECK(repaired.size() == held.size());
    CHECK(metrics::corpus_bleu(repaired.lines, held).score > 95.0);
}

TEST_CASE("a stage without its inputs names itself") {
    const auto root = fresh_dir("missing");
    auto config = tiny_experiment(root);
    Pipeline p(config);
    CHECK_THROWS_WITH_AS(p.pretrain(), doctest::Contains("pretrain.s2t"), StageError);
    CHECK_THROWS_WITH_AS(p.evaluate(), doctest::Contains("evaluate.BASE"), StageError);
}

TEST_CASE("full run resumes from the ledger and is reproducible") {
    const auto root = fresh_dir("full");
    auto config = tiny_experiment(root);
    const auto first = full_run(config);
    CHECK(first.training_steps > 0);
    CHECK(first.report.strategies.size() == 9);
    CHECK(first.report.repairs.size() == 2);
    CHECK(first.report.strategies[0].delta == 0.0);
    const std::string report = metrics::render_json(first.report);
    CHECK(fs::exists(config.run_dir / "report.txt"));
    CHECK(fs::exists(config.run_dir / "config.effective.json"));
    CHECK(fs::exists(config.run_dir / "corpora/src.repaired.bt.txt"));

    // Lineage: every synthetic and repaired corpus matches its monolingual origin.
    const auto mono = corpus::read_lines(config.data.mono_target);
    for (const char *f : {"corpora/src.synthetic.bt.txt", "corpora/src.repaired.bt.txt", "corpora/tgt.synthetic.ft.txt",
                          "corpora/tgt.repaired.ft.txt"})
        CHECK(corpus::read_lines(config.run_dir / f).size() == mono.size());

    const auto second = full_run(config);
    CHECK(second.training_steps == 0);
    CHECK(second.executed_stages.empty());
    CHECK(metrics::render_json(second.report) == report);

    auto other = config;
    other.run_dir = root / "run2";
    CHECK(metrics::render_json(full_run(other).report) == report);

    // A changed decode setting reruns decoding stages but no training.
    auto beam = config;
    beam.decode.beam_size = 1;
    Pipeline p(beam);
    p.learn_bpe();
    p.pretrain();
    p.synthesize();
    CHECK(p.training_steps() == 0);
    CHECK(p.executed_stages() == std::vector<std::string>{"synth.ft", "synth.bt"});
}

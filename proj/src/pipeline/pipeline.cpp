#include "arforge/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "arforge/metrics/bleu.hpp"
#include "arforge/numerics/rng.hpp"

namespace arforge::pipeline {

namespace fs = std::filesystem;
using corpus::Language;
using corpus::MonolingualCorpus;
using corpus::Origin;
using corpus::PairKind;
using corpus::ParallelCorpus;
using corpus::Provenance;
using corpus::Strategy;
using corpus::TokenizedPair;
using nlohmann::json;
using nmt::ModelRole;
using nmt::TransformerModel;

std::vector<TokenizedPair> tokenize_pairs(const ParallelCorpus &pairs, const tokenizer::Encoder &encoder) {
    std::vector<TokenizedPair> out;
    out.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
        out.push_back({encoder.encode(pairs.source.lines[i]), encoder.encode(pairs.target.lines[i])});
    return out;
}

namespace {

void require_role(const TransformerModel &model, ModelRole role, const char *what) {
    if (model.role() != role)
        throw std::invalid_argument(std::string(what) + " needs a " + nmt::to_string(role) + " model, got " +
                                    nmt::to_string(model.role()));
}

std::vector<std::string> translate(const TransformerModel &model, const std::vector<std::string> &lines,
                                   const tokenizer::Encoder &encoder, const nmt::DecodeSettings &settings) {
    return nmt::translate_corpus(model, encoder, encoder.vocab(), lines, settings);
}

} // namespace

ParallelCorpus generate_synthetic(SyntheticDirection direction, const TransformerModel &model,
                                  const MonolingualCorpus &mono, const tokenizer::Encoder &encoder,
                                  const nmt::DecodeSettings &settings) {
    if (mono.provenance != Provenance::authentic || mono.origin != Origin::monolingual)
        throw std::invalid_argument("generate_synthetic: expected authentic monolingual text, got " +
                                    corpus::notation(mono));
    if (direction == SyntheticDirection::bt) {
        require_role(model, ModelRole::t2s, "back-translation");
        if (mono.language != Language::target) throw std::invalid_argument("back-translation reads target text");
        return corpus::make_parallel(translate(model, mono.lines, encoder, settings), mono.lines, PairKind::bt);
    }
    require_role(model, ModelRole::s2t, "forward translation");
    if (mono.language != Language::source) throw std::invalid_argument("forward translation reads source text");
    return corpus::make_parallel(mono.lines, translate(model, mono.lines, encoder, settings), PairKind::ft);
}

ParallelCorpus generate_ar_pairs(Language side, const TransformerModel &s2t, const TransformerModel &t2s,
                                 const MonolingualCorpus &mono, const tokenizer::Encoder &encoder,
                                 const nmt::DecodeSettings &settings, const MonolingualCorpus *first_hop) {
    require_role(s2t, ModelRole::s2t, "round trip");
    require_role(t2s, ModelRole::t2s, "round trip");
    if (mono.language != side) throw std::invalid_argument("generate_ar_pairs: monolingual text in the wrong language");
    const TransformerModel &there = side == Language::source ? s2t : t2s;
    const TransformerModel &back = side == Language::source ? t2s : s2t;
    std::vector<std::string> middle;
    if (first_hop) {
        if (first_hop->size() != mono.size())
            throw std::invalid_argument("generate_ar_pairs: first hop has " + std::to_string(first_hop->size()) +
                                        " lines for " + std::to_string(mono.size()) + " monolingual lines");
        middle = first_hop->lines;
    } else {
        middle = translate(there, mono.lines, encoder, settings);
    }
    auto noisy = translate(back, middle, encoder, settings);
    return corpus::make_parallel(std::move(noisy), mono.lines,
                                 side == Language::source ? PairKind::ar_source : PairKind::ar_target);
}

std::size_t effective_ar_dev_size(std::size_t total, std::size_t requested, double max_fraction) {
    const auto cap = static_cast<std::size_t>(std::floor(max_fraction * static_cast<double>(total)));
    return std::min(requested, cap);
}

ArSplit split_ar_dev(const ParallelCorpus &pairs, std::size_t dev_size, std::uint64_t seed) {
    if (dev_size >= pairs.size())
        throw std::invalid_argument("split_ar_dev: dev size " + std::to_string(dev_size) +
                                    " is not smaller than the corpus (" + std::to_string(pairs.size()) + ")");
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    numerics::SplitMix64 rng(seed);
    numerics::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> in_dev(pairs.size(), false);
    for (std::size_t i = 0; i < dev_size; ++i) in_dev[order[i]] = true;
    ArSplit split{pairs, pairs};
    for (auto *part : {&split.train, &split.dev}) {
        part->source.lines.clear();
        part->target.lines.clear();
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        ParallelCorpus &part = in_dev[i] ? split.dev : split.train;
        part.source.lines.push_back(pairs.source.lines[i]);
        part.target.lines.push_back(pairs.target.lines[i]);
    }
    return split;
}

MonolingualCorpus repair_corpus(const TransformerModel &ar_model, const MonolingualCorpus &synthetic,
                                const tokenizer::Encoder &encoder, const nmt::DecodeSettings &settings) {
    require_role(ar_model, synthetic.language == Language::source ? ModelRole::s2s_ar : ModelRole::t2t_ar, "repair");
    if (synthetic.provenance != Provenance::synthetic)
        throw std::invalid_argument("repair_corpus: expected synthetic text, got " + corpus::notation(synthetic));
    MonolingualCorpus out = synthetic;
    out.lines = translate(ar_model, synthetic.lines, encoder, settings);
    out.provenance = Provenance::repaired;
    return out;
}

std::size_t train_mixture(TransformerModel &model, const corpus::MixturePlan &plan, std::span<const TokenizedPair> dev,
                          const tokenizer::Encoder &encoder, const nmt::TrainingSchedule &schedule,
                          std::uint64_t seed) {
    std::size_t steps = 0;
    for (std::size_t p = 0; p < plan.phases.size(); ++p) {
        const auto &phase = plan.phases[p];
        std::vector<TokenizedPair> pairs;
        for (const auto &part : phase.corpora) {
            auto tokenized = tokenize_pairs(part, encoder);
            pairs.insert(pairs.end(), tokenized.begin(), tokenized.end());
        }
        nmt::TrainingSchedule s = schedule;
        s.max_steps = phase.steps;
        s.seed = numerics::derive_seed(seed, "phase." + std::to_string(p));
        steps += nmt::train(model, pairs, dev, s).steps;
    }
    return steps;
}

// ---------------------------------------------------------------------------

namespace {

std::string settings_hash(const json &slice) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(numerics::fnv1a64(slice.dump())));
    return buf;
}

std::vector<fs::path> model_files(const fs::path &prefix) {
    return {prefix.string() + ".manifest", prefix.string() + ".bin", prefix.string() + ".config"};
}

template <typename... Lists>
std::vector<fs::path> concat(Lists &&...lists) {
    std::vector<fs::path> out;
    (out.insert(out.end(), lists.begin(), lists.end()), ...);
    return out;
}

MonolingualCorpus tagged(std::vector<std::string> lines, Language language, Provenance provenance, Origin origin) {
    return {std::move(lines), language, provenance, origin};
}

json report_json(const metrics::ArQualityReport &r) { return metrics::to_json(r); }

metrics::ArQualityReport read_ar_report(const fs::path &path) {
    std::ifstream in(path);
    const json doc = json::parse(in);
    return {doc.at("name").get<std::string>(),   doc.at("bleu_before").get<double>(),
            doc.at("bleu_after").get<double>(),  doc.at("change_rate").get<double>(),
            doc.at("better_rate").get<double>(), doc.at("sentences").get<std::size_t>()};
}

void write_text(const fs::path &path, const std::string &text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

} // namespace

struct Pipeline::Stage {
    std::string name;
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
    json settings;
};

Pipeline::Pipeline(ExperimentConfig config, Logger logger)
    : config_(std::move(config)), logger_(std::move(logger)), ledger_(config_.run_dir / "ledger.json") {
    config_.validate();
    fs::create_directories(config_.run_dir);
    ledger_.load();
    write_text(path("config.effective.json"), config_to_json(config_).dump(2) + "\n");
}

void Pipeline::log(const std::string &line) const {
    if (logger_) logger_(line);
}

std::uint64_t Pipeline::seed_for(const std::string &stage) const { return numerics::derive_seed(config_.seed, stage); }

bool Pipeline::run_stage(const Stage &stage, const std::function<void()> &body) {
    const std::uint64_t seed = seed_for(stage.name);
    const std::string settings = settings_hash(stage.settings);
    for (const auto &input : stage.inputs)
        if (!fs::exists(input))
            throw StageError(stage.name, "missing input " + input.string());
    if (ledger_.is_current(stage.name, stage.inputs, seed, settings)) {
        log("[skip] " + stage.name);
        skipped_.push_back(stage.name);
        return false;
    }
    log("[run ] " + stage.name);
    const auto start = std::chrono::steady_clock::now();
    try {
        body();
    } catch (const StageError &) {
        throw;
    } catch (const std::exception &e) {
        throw StageError(stage.name, e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto &output : stage.outputs)
        if (!fs::exists(output)) throw StageError(stage.name, "did not produce " + output.string());
    ledger_.record(stage.name, stage.inputs, stage.outputs, seed, settings, secs);
    executed_.push_back(stage.name);
    return true;
}

tokenizer::BpeModel Pipeline::load_bpe(const std::string &stage) const {
    const fs::path merges = path("bpe/merges.txt"), vocab = path("bpe/vocab.txt");
    if (!fs::exists(merges) || !fs::exists(vocab))
        throw StageError(stage, "tokenizer not found in " + path("bpe").string() + " (run learn-bpe first)");
    tokenizer::BpeModel model;
    model.table = tokenizer::load_merges(merges);
    model.vocab = tokenizer::load_vocabulary(vocab);
    return model;
}

TransformerModel Pipeline::load_model_for(const std::string &stage, const std::string &name) const {
    const fs::path prefix = path("models/" + name);
    for (const auto &file : model_files(prefix))
        if (!fs::exists(file)) throw StageError(stage, "model " + name + " not found at " + prefix.string());
    return nmt::load_model(prefix);
}

MonolingualCorpus Pipeline::mono(Language language) const {
    const fs::path &file = language == Language::source ? config_.data.mono_source : config_.data.mono_target;
    auto corpus = corpus::load_monolingual(file, language, Provenance::authentic, Origin::monolingual);
    if (config_.data.mono_cap > 0 && corpus.lines.size() > config_.data.mono_cap)
        corpus.lines.resize(config_.data.mono_cap);
    return corpus;
}

ParallelCorpus Pipeline::authentic(const std::string &which) const {
    const auto &d = config_.data;
    if (which == "train") return corpus::load_parallel(d.train_source, d.train_target, PairKind::authentic);
    if (which == "dev") return corpus::load_parallel(d.dev_source, d.dev_target, PairKind::authentic);
    return corpus::load_parallel(d.test_source, d.test_target, PairKind::authentic);
}

ParallelCorpus Pipeline::synthetic_pairs(PairKind kind) const {
    switch (kind) {
    case PairKind::bt:
        return corpus::make_parallel(corpus::read_lines(path("corpora/src.synthetic.bt.txt")),
                                     mono(Language::target).lines, kind);
    case PairKind::btr:
        return corpus::make_parallel(corpus::read_lines(path("corpora/src.repaired.bt.txt")),
                                     mono(Language::target).lines, kind);
    case PairKind::ft:
        return corpus::make_parallel(mono(Language::source).lines,
                                     corpus::read_lines(path("corpora/tgt.synthetic.ft.txt")), kind);
    case PairKind::ftr:
        return corpus::make_parallel(mono(Language::source).lines,
                                     corpus::read_lines(path("corpora/tgt.repaired.ft.txt")), kind);
    default: throw std::invalid_argument("synthetic_pairs: not a synthetic pair kind");
    }
}

void Pipeline::train_model(const std::string &stage, ModelRole role, const nmt::ModelConfig &model_config,
                           const nmt::TrainingSchedule &schedule, const ParallelCorpus &train,
                           const ParallelCorpus &dev, const std::string &name) {
    const auto bpe = load_bpe(stage);
    const tokenizer::Encoder encoder(bpe.table, bpe.vocab);
    const auto train_pairs = tokenize_pairs(train, encoder);
    const auto dev_pairs = tokenize_pairs(dev, encoder);
    const std::uint64_t seed = seed_for(stage);
    auto model = nmt::init_model(model_config, role, bpe.vocab.size(), bpe.vocab.size(),
                                 numerics::derive_seed(seed, "init"));
    nmt::TrainingSchedule s = schedule;
    s.seed = numerics::derive_seed(seed, "train");
    nmt::TrainOptions options;
    options.on_checkpoint = [&](std::size_t step, double loss, double dev_loss) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "       %s step %zu loss %.4f dev %.4f", name.c_str(), step, loss, dev_loss);
        log(buf);
    };
    const auto result = nmt::train(model, train_pairs, dev_pairs, s, options);
    training_steps_ += result.steps;
    fs::create_directories(path("models"));
    nmt::save_model(path("models/" + name), model);
    std::string tsv = "step\tloss\n";
    for (std::size_t i = 0; i < result.losses.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%zu\t%.17g\n", i + 1, result.losses[i]);
        tsv += buf;
    }
    write_text(path("logs/" + name + ".loss.tsv"), tsv);
}

void Pipeline::learn_bpe() {
    const auto &d = config_.data;
    Stage stage{"learn_bpe",
                {d.train_source, d.train_target, d.mono_source, d.mono_target},
                {path("bpe/merges.txt"), path("bpe/vocab.txt")},
                {{"tokenizer", config_to_json(config_)["tokenizer"]}, {"mono_cap", d.mono_cap}}};
    run_stage(stage, [&] {
        const auto train = authentic("train");
        const std::vector<std::vector<std::string>> corpora{train.source.lines, train.target.lines,
                                                            mono(Language::source).lines,
                                                            mono(Language::target).lines};
        const auto bpe = tokenizer::learn_merges(corpora, config_.tokenizer);
        fs::create_directories(path("bpe"));
        tokenizer::save_merges(path("bpe/merges.txt"), bpe.table);
        tokenizer::save_vocabulary(path("bpe/vocab.txt"), bpe.vocab);
    });
}

void Pipeline::pretrain() {
    const auto &d = config_.data;
    const json cfg = config_to_json(config_);
    const json settings{{"model", cfg["nmt_model"]}, {"training", cfg["nmt_training"]}};
    const std::vector<fs::path> inputs{path("bpe/merges.txt"), path("bpe/vocab.txt"), d.train_source,
                                       d.train_target,         d.dev_source,          d.dev_target};
    for (auto [name, role] : {std::pair{"s2t", ModelRole::s2t}, std::pair{"t2s", ModelRole::t2s}}) {
        const std::string stage_name = std::string("pretrain.") + name;
        load_bpe(stage_name);
        Stage stage{stage_name, inputs, model_files(path(std::string("models/") + name)), settings};
        run_stage(stage, [&] {
            auto train = authentic("train");
            auto dev = authentic("dev");
            if (role == ModelRole::t2s) {
                std::swap(train.source.lines, train.target.lines);
                std::swap(dev.source.lines, dev.target.lines);
            }
            train_model(stage_name, role, config_.nmt_model, config_.nmt_training, train, dev, name);
        });
    }
}

void Pipeline::synthesize() {
    const auto &d = config_.data;
    const json settings{{"decode", config_to_json(config_)["decode"]}, {"mono_cap", d.mono_cap}};
    const std::vector<fs::path> bpe_files{path("bpe/merges.txt"), path("bpe/vocab.txt")};
    {
        Stage stage{"synth.ft", concat(bpe_files, model_files(path("models/s2t")), std::vector{d.mono_source}),
                    {path("corpora/tgt.synthetic.ft.txt")}, settings};
        load_model_for(stage.name, "s2t");
        run_stage(stage, [&] {
            const auto bpe = load_bpe(stage.name);
            const tokenizer::Encoder encoder(bpe.table, bpe.vocab);
            const auto ft = generate_synthetic(SyntheticDirection::ft, load_model_for(stage.name, "s2t"),
                                               mono(Language::source), encoder, config_.decode);
            fs::create_directories(path("corpora"));
            corpus::write_lines(path("corpora/tgt.synthetic.ft.txt"), ft.target.lines);
        });
    }
    {
        Stage stage{"synth.bt", concat(bpe_files, model_files(path("models/t2s")), std::vector{d.mono_target}),
                    {path("corpora/src.synthetic.bt.txt")}, settings};
        load_model_for(stage.name, "t2s");
        run_stage(stage, [&] {
            const auto bpe = load_bpe(stage.name);
            const tokenizer::Encoder encoder(bpe.table, bpe.vocab);
            const auto bt = generate_synthetic(SyntheticDirection::bt, load_model_for(stage.name, "t2s"),
                                               mono(Language::target), encoder, config_.decode);
            fs::create_directories(path("corpora"));
            corpus::write_lines(path("corpora/src.synthetic.bt.txt"), bt.source.lines);
        });
    }
}

void Pipeline::make_ar_data() {
    const auto &d = config_.data;
    const json cfg = config_to_json(config_);
    const json settings{{"decode", cfg["decode"]},
                        {"mono_cap", d.mono_cap},
                        {"ar_dev_size", config_.ar_dev_size},
                        {"ar_dev_max_fraction", config_.ar_dev_max_fraction}};
    const std::vector<fs::path> bpe_files{path("bpe/merges.txt"), path("bpe/vocab.txt")};
    for (Language side : {Language::source, Language::target}) {
        const bool src = side == Language::source;
        const std::string tag = src ? "src" : "tgt";
        const std::string stage_name = src ? "ar_data.source" : "ar_data.target";
        // The first hop of the round trip is exactly the FT (source side) or
        // BT (target side) synthetic text.
        const fs::path first_hop = path(src ? "corpora/tgt.synthetic.ft.txt" : "corpora/src.synthetic.bt.txt");
        const std::string back_model = src ? "t2s" : "s2t";
        Stage stage{stage_name,
                    concat(bpe_files, model_files(path("models/" + back_model)),
                           std::vector{src ? d.mono_source : d.mono_target, first_hop}),
                    {path("corpora/" + tag + ".roundtrip.txt"), path("ar/" + tag + ".train.noisy.txt"),
                     path("ar/" + tag + ".train.clean.txt"), path("ar/" + tag + ".dev.noisy.txt"),
                     path("ar/" + tag + ".dev.clean.txt")},
                    settings};
        run_stage(stage, [&] {
            const auto bpe = load_bpe(stage_name);
            const tokenizer::Encoder encoder(bpe.table, bpe.vocab);
            const auto s2t = load_model_for(stage_name, "s2t");
            const auto t2s = load_model_for(stage_name, "t2s");
            const auto clean = mono(side);
            const auto hop = tagged(corpus::read_lines(first_hop), src ? Language::target : Language::source,
                                    Provenance::synthetic, Origin::monolingual);
            const auto pairs = generate_ar_pairs(side, s2t, t2s, clean, encoder, config_.decode, &hop);
            const std::size_t dev_size =
                effective_ar_dev_size(pairs.size(), config_.ar_dev_size, config_.ar_dev_max_fraction);
            const auto split = split_ar_dev(pairs, dev_size, seed_for(stage_name + ".split"));
            fs::create_directories(path("ar"));
            corpus::write_lines(path("corpora/" + tag + ".roundtrip.txt"), pairs.source.lines);
            corpus::write_lines(path("ar/" + tag + ".train.noisy.txt"), split.train.source.lines);
            corpus::write_lines(path("ar/" + tag + ".train.clean.txt"), split.train.target.lines);
            corpus::write_lines(path("ar/" + tag + ".dev.noisy.txt"), split.dev.source.lines);
            corpus::write_lines(path("ar/" + tag + ".dev.clean.txt"), split.dev.target.lines);
        });
    }
}

void Pipeline::train_ar() {
    const json cfg = config_to_json(config_);
    const json settings{{"model", cfg["ar_model"]}, {"training", cfg["ar_training"]}};
    for (Language side : {Language::source, Language::target}) {
        const bool src = side == Language::source;
        const std::string tag = src ? "src" : "tgt";
        const std::string name = src ? "s2s_ar" : "t2t_ar";
        const std::string stage_name = "train_ar." + std::string(src ? "s2s" : "t2t");
        const fs::path tn = path("ar/" + tag + ".train.noisy.txt"), tc = path("ar/" + tag + ".train.clean.txt");
        const fs::path dn = path("ar/" + tag + ".dev.noisy.txt"), dc = path("ar/" + tag + ".dev.clean.txt");
        Stage stage{stage_name, {path("bpe/merges.txt"), path("bpe/vocab.txt"), tn, tc, dn, dc},
                    model_files(path("models/" + name)), settings};
        run_stage(stage, [&] {
            const PairKind kind = src ? PairKind::ar_source : PairKind::ar_target;
            const auto train = corpus::make_parallel(corpus::read_lines(tn), corpus::read_lines(tc), kind);
            const auto dev = corpus::make_parallel(corpus::read_lines(dn), corpus::read_lines(dc), kind);
            train_model(stage_name, src ? ModelRole::s2s_ar : ModelRole::t2t_ar, config_.ar_model,
                        config_.ar_training, train, dev, name);
        });
    }
}

void Pipeline::repair() {
    const json settings{{"decode", config_to_json(config_)["decode"]}};
    const std::vector<fs::path> bpe_files{path("bpe/merges.txt"), path("bpe/vocab.txt")};
    for (Language side : {Language::source, Language::target}) {
        const bool src = side == Language::source;
        const std::string stage_name = src ? "repair.bt" : "repair.ft";
        const std::string name = src ? "s2s_ar" : "t2t_ar";
        const fs::path input = path(src ? "corpora/src.synthetic.bt.txt" : "corpora/tgt.synthetic.ft.txt");
        const fs::path output = path(src ? "corpora/src.repaired.bt.txt" : "corpora/tgt.repaired.ft.txt");
        Stage stage{stage_name, concat(bpe_files, model_files(path("models/" + name)), std::vector{input}),
                    {output}, settings};
        run_stage(stage, [&] {
            const auto bpe = load_bpe(stage_name);
            const tokenizer::Encoder encoder(bpe.table, bpe.vocab);
            const auto synthetic =
                tagged(corpus::read_lines(input), side, Provenance::synthetic, Origin::monolingual);
            const auto repaired = repair_corpus(load_model_for(stage_name, name), synthetic, encoder, config_.decode);
            corpus::write_lines(output, repaired.lines);
        });
    }
}

std::vector<metrics::ArQualityReport> Pipeline::ar_report() {
    const json settings{{"decode", config_to_json(config_)["decode"]}};
    std::vector<metrics::ArQualityReport> reports;
    for (Language side : {Language::source, Language::target}) {
        const bool src = side == Language::source;
        const std::string tag = src ? "src" : "tgt";
        const std::string stage_name = src ? "ar_report.source" : "ar_report.target";
        const std::string name = src ? "s2s_ar" : "t2t_ar";
        const fs::path noisy = path("ar/" + tag + ".dev.noisy.txt"), clean = path("ar/" + tag + ".dev.clean.txt");
        const fs::path repaired = path("ar/" + tag + ".dev.repaired.txt");
        const fs::path report = path("ar/" + tag + ".report.json");
        Stage stage{stage_name,
                    concat(std::vector{path("bpe/merges.txt"), path("bpe/vocab.txt"), noisy, clean},
                           model_files(path("models/" + name))),
                    {repaired, report}, settings};
        run_stage(stage, [&] {
            const auto bpe = load_bpe(stage_name);
            const tokenizer::Encoder encoder(bpe.table, bpe.vocab);
            const auto noisy_lines =
                tagged(corpus::read_lines(noisy), side, Provenance::synthetic, Origin::monolingual);
            const auto fixed = repair_corpus(load_model_for(stage_name, name), noisy_lines, encoder, config_.decode);
            corpus::write_lines(repaired, fixed.lines);
            const auto clean_lines = corpus::read_lines(clean);
            const auto r = metrics::assess_repair(src ? "S2S" : "T2T", noisy_lines.lines, fixed.lines, clean_lines);
            write_text(report, report_json(r).dump(2) + "\n");
        });
        reports.push_back(read_ar_report(report));
    }
    return reports;
}

std::vector<metrics::ArQualityReport> Pipeline::stored_ar_reports() const {
    std::vector<metrics::ArQualityReport> reports;
    for (const char *file : {"ar/src.report.json", "ar/tgt.report.json"})
        if (fs::exists(path(file))) reports.push_back(read_ar_report(path(file)));
    return reports;
}

namespace {

corpus::MixtureOptions mixture_options(const ExperimentConfig &c, std::uint64_t seed) {
    corpus::MixtureOptions o;
    o.ratio = c.ratio;
    o.seed = seed;
    o.single_phase_steps = c.strategy_steps.single_phase;
    o.first_phase_steps = c.strategy_steps.first_phase;
    o.finetune_phase_steps = c.strategy_steps.finetune_phase;
    return o;
}

// Files behind each synthetic corpus a strategy may use.
std::vector<std::string> strategy_corpora(Strategy s) {
    switch (s) {
    case Strategy::base: return {};
    case Strategy::bt: return {"corpora/src.synthetic.bt.txt"};
    case Strategy::ft: return {"corpora/tgt.synthetic.ft.txt"};
    case Strategy::bt_ft: return {"corpora/src.synthetic.bt.txt", "corpora/tgt.synthetic.ft.txt"};
    case Strategy::btr_rep: return {"corpora/src.repaired.bt.txt"};
    case Strategy::ftr_rep: return {"corpora/tgt.repaired.ft.txt"};
    case Strategy::btr_add: return {"corpora/src.synthetic.bt.txt", "corpora/src.repaired.bt.txt"};
    case Strategy::ftr_add: return {"corpora/tgt.synthetic.ft.txt", "corpora/tgt.repaired.ft.txt"};
    case Strategy::btr_add_ftr_add:
        return {"corpora/src.synthetic.bt.txt", "corpora/src.repaired.bt.txt", "corpora/tgt.synthetic.ft.txt",
                "corpora/tgt.repaired.ft.txt"};
    }
    return {};
}

} // namespace

void Pipeline::write_plans() {
    const auto train = authentic("train");
    std::optional<ParallelCorpus> bt, ft, btr, ftr;
    auto load_if = [&](std::optional<ParallelCorpus> &slot, PairKind kind, const char *file) {
        if (fs::exists(path(file))) slot = synthetic_pairs(kind);
    };
    load_if(bt, PairKind::bt, "corpora/src.synthetic.bt.txt");
    load_if(ft, PairKind::ft, "corpora/tgt.synthetic.ft.txt");
    load_if(btr, PairKind::btr, "corpora/src.repaired.bt.txt");
    load_if(ftr, PairKind::ftr, "corpora/tgt.repaired.ft.txt");
    const corpus::MixtureInputs inputs{&train, bt ? &*bt : nullptr, ft ? &*ft : nullptr, btr ? &*btr : nullptr,
                                       ftr ? &*ftr : nullptr};
    for (Strategy s : config_.strategies) {
        const std::string id(corpus::strategy_id(s));
        try {
            const auto plan = corpus::build_mixture(s, inputs, mixture_options(config_, seed_for("mixture")));
            write_text(path("plans/" + id + ".json"), corpus::plan_to_json(plan));
        } catch (const corpus::CorpusError &e) {
            throw StageError("mix." + id, e.what());
        }
    }
}

void Pipeline::train_strategies(std::optional<Strategy> only) {
    const auto &d = config_.data;
    const json cfg = config_to_json(config_);
    const json settings{{"model", cfg["nmt_model"]},   {"training", cfg["strategy_training"]},
                        {"steps", cfg["strategy_steps"]}, {"ratio", config_.ratio},
                        {"mono_cap", d.mono_cap}};
    for (Strategy s : config_.strategies) {
        if (only && *only != s) continue;
        const std::string id(corpus::strategy_id(s));
        const std::string stage_name = "strategy." + id;
        std::vector<fs::path> inputs = concat(
            std::vector{path("bpe/merges.txt"), path("bpe/vocab.txt"), d.train_source, d.train_target, d.dev_source,
                        d.dev_target},
            model_files(path("models/s2t")));
        for (const auto &file : strategy_corpora(s)) inputs.push_back(path(file));
        if (s != Strategy::base) inputs.push_back(s == Strategy::bt || s == Strategy::btr_rep || s == Strategy::btr_add
                                                      ? d.mono_target
                                                      : d.mono_source);
        if (s == Strategy::bt_ft || s == Strategy::btr_add_ftr_add) inputs.push_back(d.mono_target);
        const std::string model_name = "strategy." + id;
        Stage stage{stage_name, inputs,
                    concat(model_files(path("models/" + model_name)), std::vector{path("plans/" + id + ".json")}),
                    settings};
        run_stage(stage, [&] {
            const auto bpe = load_bpe(stage_name);
            const tokenizer::Encoder encoder(bpe.table, bpe.vocab);
            const auto train = authentic("train");
            std::optional<ParallelCorpus> bt, ft, btr, ftr;
            for (const auto &file : strategy_corpora(s)) {
                if (file == "corpora/src.synthetic.bt.txt") bt = synthetic_pairs(PairKind::bt);
                if (file == "corpora/tgt.synthetic.ft.txt") ft = synthetic_pairs(PairKind::ft);
                if (file == "corpora/src.repaired.bt.txt") btr = synthetic_pairs(PairKind::btr);
                if (file == "corpora/tgt.repaired.ft.txt") ftr = synthetic_pairs(PairKind::ftr);
            }
            const corpus::MixtureInputs inputs{&train, bt ? &*bt : nullptr, ft ? &*ft : nullptr,
                                               btr ? &*btr : nullptr, ftr ? &*ftr : nullptr};
            const auto plan = corpus::build_mixture(s, inputs, mixture_options(config_, seed_for("mixture")));
            write_text(path("plans/" + id + ".json"), corpus::plan_to_json(plan));
            auto model = load_model_for(stage_name, "s2t");
            const auto dev = tokenize_pairs(authentic("dev"), encoder);
            const std::size_t steps =
                train_mixture(model, plan, dev, encoder, config_.strategy_training, seed_for(stage_name));
            training_steps_ += steps;
            nmt::save_model(path("models/" + model_name), model);
            log("       " + id + " trained for " + std::to_string(steps) + " steps");
        });
    }
}

metrics::ExperimentReport Pipeline::evaluate(std::optional<Strategy> only) {
    const auto &d = config_.data;
    const json settings{{"decode", config_to_json(config_)["decode"]}};
    metrics::ExperimentReport report;
    std::optional<double> base_bleu;
    for (Strategy s : config_.strategies) {
        if (only && *only != s) continue;
        const std::string id(corpus::strategy_id(s));
        const std::string stage_name = "evaluate." + id;
        const fs::path hyp = path("eval/" + id + ".test.hyp.txt");
        const fs::path result = path("eval/" + id + ".json");
        Stage stage{stage_name,
                    concat(std::vector{path("bpe/merges.txt"), path("bpe/vocab.txt"), d.test_source, d.test_target},
                           model_files(path("models/strategy." + id))),
                    {hyp, result}, settings};
        run_stage(stage, [&] {
            const auto bpe = load_bpe(stage_name);
            const tokenizer::Encoder encoder(bpe.table, bpe.vocab);
            const auto model = load_model_for(stage_name, "strategy." + id);
            const auto test = authentic("test");
            const auto out = translate(model, test.source.lines, encoder, config_.decode);
            corpus::write_lines(hyp, out);
            const double bleu = metrics::corpus_bleu(out, test.target.lines).score;
            write_text(result, json{{"strategy", id}, {"bleu", bleu}}.dump(2) + "\n");
        });
        std::ifstream in(result);
        const double bleu = json::parse(in).at("bleu").get<double>();
        if (s == Strategy::base) base_bleu = bleu;
        report.strategies.push_back({id, std::string(corpus::strategy_label(s)), bleu, 0.0});
    }
    if (!base_bleu && !only) {
        // Without a BASE row the deltas are measured against BASE's stored result when present.
        const fs::path stored = path("eval/BASE.json");
        if (fs::exists(stored)) {
            std::ifstream in(stored);
            base_bleu = json::parse(in).at("bleu").get<double>();
        }
    }
    if (base_bleu)
        for (auto &row : report.strategies) row.delta = row.bleu - *base_bleu;
    return report;
}

void Pipeline::write_report(const metrics::ExperimentReport &report) const {
    write_text(path("report.json"), metrics::render_json(report));
    write_text(path("report.txt"), metrics::render_table(report));
}

RunResult Pipeline::run_all() {
    learn_bpe();
    pretrain();
    synthesize();
    make_ar_data();
    train_ar();
    repair();
    auto repairs = ar_report();
    write_plans();
    train_strategies();
    RunResult result;
    result.report = evaluate();
    result.report.repairs = std::move(repairs);
    write_report(result.report);
    result.training_steps = training_steps_;
    result.executed_stages = executed_;
    result.skipped_stages = skipped_;
    return result;
}

RunResult full_run(const ExperimentConfig &config, Pipeline::Logger logger) {
    Pipeline pipeline(config, std::move(logger));
    return pipeline.run_all();
}

} // namespace arforge::pipeline

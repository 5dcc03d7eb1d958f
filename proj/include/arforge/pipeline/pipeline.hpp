#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "arforge/corpus/batching.hpp"
#include "arforge/corpus/corpus.hpp"
#include "arforge/corpus/mixture.hpp"
#include "arforge/metrics/report.hpp"
#include "arforge/nmt/decode.hpp"
#include "arforge/nmt/model.hpp"
#include "arforge/nmt/train.hpp"
#include "arforge/pipeline/config.hpp"
#include "arforge/pipeline/ledger.hpp"
#include "arforge/tokenizer/bpe.hpp"

namespace arforge::pipeline {

/// A stage failed or its preconditions are not met. `stage()` names it.
class StageError : public std::runtime_error {
  public:
    StageError(std::string stage, const std::string &message)
        : std::runtime_error("stage " + stage + ": " + message), stage_(std::move(stage)) {}
    const std::string &stage() const { return stage_; }

  private:
    std::string stage_;
};

// Building blocks. Each works on in-memory data so it can be exercised
// without a run directory; the Pipeline class below wires them to files.

std::vector<corpus::TokenizedPair> tokenize_pairs(const corpus::ParallelCorpus &pairs,
                                                  const tokenizer::Encoder &encoder);

enum class SyntheticDirection { bt, ft };

/// BT: target monolingual text through the T2S model gives (S_s^m, T_a^m).
/// FT: source monolingual text through the S2T model gives (S_a^m, T_s^m).
corpus::ParallelCorpus generate_synthetic(SyntheticDirection direction, const nmt::TransformerModel &model,
                                          const corpus::MonolingualCorpus &mono, const tokenizer::Encoder &encoder,
                                          const nmt::DecodeSettings &settings);

/// Round trip of authentic monolingual text into (noisy, clean) pairs. The
/// source side goes S_a -> S2T -> T2S, the target side T_a -> T2S -> S2T.
/// `first_hop`, when given, is the already computed output of the first
/// model on `mono` (the FT or BT synthetic side) and is reused.
corpus::ParallelCorpus generate_ar_pairs(corpus::Language side, const nmt::TransformerModel &s2t,
                                         const nmt::TransformerModel &t2s, const corpus::MonolingualCorpus &mono,
                                         const tokenizer::Encoder &encoder, const nmt::DecodeSettings &settings,
                                         const corpus::MonolingualCorpus *first_hop = nullptr);

struct ArSplit {
    corpus::ParallelCorpus train;
    corpus::ParallelCorpus dev;
};

/// Dev size actually used: min(requested, floor(max_fraction * total)).
std::size_t effective_ar_dev_size(std::size_t total, std::size_t requested, double max_fraction);

/// Seeded uniform dev sample; the rest (original order) is the training
/// part. Throws when the dev size is not smaller than the corpus.
ArSplit split_ar_dev(const corpus::ParallelCorpus &pairs, std::size_t dev_size, std::uint64_t seed);

/// Beam-decodes every synthetic line through the repair model matching its
/// language; the result is tagged as repaired.
corpus::MonolingualCorpus repair_corpus(const nmt::TransformerModel &ar_model,
                                        const corpus::MonolingualCorpus &synthetic,
                                        const tokenizer::Encoder &encoder, const nmt::DecodeSettings &settings);

/// Trains a copy of `initial` through every phase of `plan` (a fresh warmup
/// and optimizer per phase, each continuing from the previous one). Returns
/// the steps executed.
std::size_t train_mixture(nmt::TransformerModel &model, const corpus::MixturePlan &plan,
                          std::span<const corpus::TokenizedPair> dev, const tokenizer::Encoder &encoder,
                          const nmt::TrainingSchedule &schedule, std::uint64_t seed);

struct RunResult {
    metrics::ExperimentReport report;
    std::size_t training_steps = 0; // steps executed by this invocation
    std::vector<std::string> executed_stages;
    std::vector<std::string> skipped_stages;
};

/// Orchestrates the whole experiment in a run directory, one ledger-tracked
/// stage at a time. Each public step requires the outputs of the previous
/// ones and raises StageError naming the stage when they are missing.
class Pipeline {
  public:
    using Logger = std::function<void(const std::string &)>;

    explicit Pipeline(ExperimentConfig config, Logger logger = {});

    const ExperimentConfig &config() const { return config_; }
    const std::filesystem::path &run_dir() const { return config_.run_dir; }

    void learn_bpe();
    void pretrain();
    void synthesize();
    void make_ar_data();
    void train_ar();
    void repair();
    std::vector<metrics::ArQualityReport> ar_report();
    /// Repair reports already written by ar_report, in source, target order.
    std::vector<metrics::ArQualityReport> stored_ar_reports() const;
    void write_plans();
    void train_strategies(std::optional<corpus::Strategy> only = std::nullopt);
    metrics::ExperimentReport evaluate(std::optional<corpus::Strategy> only = std::nullopt);

    /// Every stage in dependency order, then report.{json,txt}.
    RunResult run_all();

    /// Writes the report documents into the run directory.
    void write_report(const metrics::ExperimentReport &report) const;

    std::size_t training_steps() const { return training_steps_; }
    const std::vector<std::string> &executed_stages() const { return executed_; }
    const std::vector<std::string> &skipped_stages() const { return skipped_; }

    /// Artifact paths inside the run directory.
    std::filesystem::path path(const std::string &relative) const { return config_.run_dir / relative; }

  private:
    struct Stage;
    bool run_stage(const Stage &stage, const std::function<void()> &body);
    std::uint64_t seed_for(const std::string &stage) const;

    tokenizer::BpeModel load_bpe(const std::string &stage) const;
    nmt::TransformerModel load_model_for(const std::string &stage, const std::string &name) const;
    corpus::MonolingualCorpus mono(corpus::Language language) const;
    corpus::ParallelCorpus authentic(const std::string &file_stem) const;
    corpus::ParallelCorpus synthetic_pairs(corpus::PairKind kind) const;
    void train_model(const std::string &stage, nmt::ModelRole role, const nmt::ModelConfig &model_config,
                     const nmt::TrainingSchedule &schedule, const corpus::ParallelCorpus &train,
                     const corpus::ParallelCorpus &dev, const std::string &name);
    void log(const std::string &line) const;

    ExperimentConfig config_;
    Logger logger_;
    StageLedger ledger_;
    std::size_t training_steps_ = 0;
    std::vector<std::string> executed_;
    std::vector<std::string> skipped_;
};

/// Runs every stage with ledger-based resume and returns the report.
RunResult full_run(const ExperimentConfig &config, Pipeline::Logger logger = {});

} // namespace arforge::pipeline

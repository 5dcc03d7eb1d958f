#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "arforge/corpus/mixture.hpp"
#include "arforge/nmt/decode.hpp"
#include "arforge/nmt/model.hpp"
#include "arforge/nmt/train.hpp"
#include "arforge/tokenizer/bpe.hpp"

namespace arforge::pipeline {

/// Malformed, incomplete or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct DataPaths {
    std::filesystem::path train_source, train_target; // authentic bilingual pairs
    std::filesystem::path dev_source, dev_target;     // checkpoint selection for NMT models
    std::filesystem::path test_source, test_target;   // final evaluation only
    std::filesystem::path mono_source, mono_target;   // authentic monolingual text
    std::size_t mono_cap = 0;                         // 0: use every monolingual line
};

struct StrategySteps {
    std::size_t single_phase = 800;
    std::size_t first_phase = 600;
    std::size_t finetune_phase = 400;
};

struct ExperimentConfig {
    std::filesystem::path run_dir = "runs/default";
    std::uint64_t seed = 1;
    DataPaths data;
    tokenizer::BpeOptions tokenizer;
    nmt::ModelConfig nmt_model;
    nmt::TrainingSchedule nmt_training;
    nmt::ModelConfig ar_model;
    nmt::TrainingSchedule ar_training;
    nmt::TrainingSchedule strategy_training; // max_steps comes from strategy_steps
    StrategySteps strategy_steps;
    nmt::DecodeSettings decode;
    std::vector<corpus::Strategy> strategies{std::begin(corpus::kAllStrategies), std::end(corpus::kAllStrategies)};
    std::size_t ar_dev_size = 1000;
    double ar_dev_max_fraction = 0.1; // dev never exceeds this share of the AR pairs
    double ratio = 1.0;               // authentic : synthetic sentences

    /// Throws ConfigError on invalid values (paths are checked at run time).
    void validate() const;
};

/// Parses a JSON document. Unknown keys are errors; missing keys keep their
/// defaults. Relative paths resolve against `base_dir`.
ExperimentConfig config_from_json(const nlohmann::json &doc, const std::filesystem::path &base_dir);

/// Reads and parses `path`; relative paths inside resolve against its
/// directory.
ExperimentConfig load_config(const std::filesystem::path &path);

/// Complete effective configuration (every key present).
nlohmann::json config_to_json(const ExperimentConfig &config);

} // namespace arforge::pipeline

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "arforge/corpus/batching.hpp"
#include "arforge/nmt/model.hpp"

namespace arforge::nmt {

/// Raised when training cannot proceed (empty data, non-finite loss).
class TrainingError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct TrainingSchedule {
    std::size_t max_steps = 2000;
    std::size_t warmup_steps = 400;
    std::size_t source_budget = 2000; // tokens per batch
    std::size_t target_budget = 2000;
    double label_smoothing = 0.1;
    double dropout = 0.1;
    std::size_t checkpoint_interval = 200;
    std::uint64_t seed = 1;
    double lr_scale = 1.0; // multiplies the warmup schedule
    double beta1 = 0.9;
    double beta2 = 0.98;
    double epsilon = 1e-9;

    void validate() const;
};

struct TrainLog {
    std::vector<double> losses;                            // one per step
    std::vector<std::pair<std::size_t, double>> dev_losses; // (step, dev NLL)
    std::size_t best_step = 0;
    double best_dev_loss = std::numeric_limits<double>::infinity();
    std::size_t steps = 0;
};

struct TrainOptions {
    /// When set, every evaluated checkpoint is saved as `<dir>/step_<n>`.
    std::filesystem::path checkpoint_dir;
    /// Called after each evaluation with (step, train loss, dev loss).
    std::function<void(std::size_t, double, double)> on_checkpoint;
};

/// Teacher-forcing inputs for a set of pairs: sources with EOS, decoder
/// inputs BOS + target, gold target + EOS padded with PAD to the longest.
struct TeacherBatch {
    std::vector<std::vector<int>> sources;
    std::vector<std::vector<int>> inputs;
    std::vector<int> gold; // batch * max_input_len
};

TeacherBatch make_teacher_batch(std::span<const corpus::TokenizedPair> pairs, std::span<const std::size_t> indices);

/// Token-averaged negative log-likelihood (no smoothing, no dropout).
double evaluate_loss(const TransformerModel &model, std::span<const corpus::TokenizedPair> pairs,
                     std::size_t source_budget, std::size_t target_budget);

/// Adam with the warmup schedule over length-bucketed batches, reshuffled
/// every epoch. Dev NLL is measured every checkpoint_interval steps and at
/// the last step; the model ends holding the best-dev parameters (the last
/// ones when `dev` is empty). max_steps == 0 leaves the model untouched.
TrainLog train(TransformerModel &model, std::span<const corpus::TokenizedPair> pairs,
               std::span<const corpus::TokenizedPair> dev, const TrainingSchedule &schedule,
               const TrainOptions &options = {});

} // namespace arforge::nmt

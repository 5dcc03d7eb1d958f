#include "arforge/nmt/train.hpp"

#include <cmath>

#include "arforge/numerics/adam.hpp"
#include "arforge/numerics/schedule.hpp"
#include "arforge/tokenizer/bpe.hpp"

namespace arforge::nmt {

using corpus::TokenizedPair;
using tokenizer::kBosId;
using tokenizer::kEosId;
using tokenizer::kPadId;

void TrainingSchedule::validate() const {
    if (warmup_steps == 0) throw TrainingError("schedule: warmup_steps must be >= 1");
    if (source_budget == 0 || target_budget == 0) throw TrainingError("schedule: token budgets must be > 0");
    if (checkpoint_interval == 0) throw TrainingError("schedule: checkpoint_interval must be > 0");
    if (!(label_smoothing >= 0.0 && label_smoothing < 1.0))
        throw TrainingError("schedule: label_smoothing must be in [0, 1)");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw TrainingError("schedule: dropout must be in [0, 1)");
    if (!(lr_scale > 0.0)) throw TrainingError("schedule: lr_scale must be > 0");
}

TeacherBatch make_teacher_batch(std::span<const TokenizedPair> pairs, std::span<const std::size_t> indices) {
    TeacherBatch batch;
    std::size_t longest = 0;
    for (std::size_t i : indices) longest = std::max(longest, pairs[i].target.size() + 1);
    batch.gold.assign(indices.size() * longest, kPadId);
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const auto &pair = pairs[indices[b]];
        std::vector<int> src = pair.source;
        src.push_back(kEosId);
        batch.sources.push_back(std::move(src));
        std::vector<int> in{kBosId};
        in.insert(in.end(), pair.target.begin(), pair.target.end());
        batch.inputs.push_back(std::move(in));
        std::copy(pair.target.begin(), pair.target.end(), batch.gold.begin() + static_cast<std::ptrdiff_t>(b * longest));
        batch.gold[b * longest + pair.target.size()] = kEosId;
    }
    return batch;
}

double evaluate_loss(const TransformerModel &model, std::span<const TokenizedPair> pairs, std::size_t source_budget,
                     std::size_t target_budget) {
    if (pairs.empty()) throw TrainingError("evaluate_loss: empty corpus");
    numerics::NoGradGuard no_grad;
    double total = 0.0;
    std::size_t tokens = 0;
    for (const auto &indices : corpus::batch_by_length(pairs, source_budget, target_budget)) {
        const TeacherBatch batch = make_teacher_batch(pairs, indices);
        const Tensor logits = forward_logits(model, batch.sources, batch.inputs);
        std::size_t count = 0;
        for (int g : batch.gold)
            if (g != kPadId) ++count;
        total += label_smoothed_loss(logits, batch.gold, 0.0).item() * static_cast<double>(count);
        tokens += count;
    }
    return total / static_cast<double>(tokens);
}

TrainLog train(TransformerModel &model, std::span<const TokenizedPair> pairs, std::span<const TokenizedPair> dev,
               const TrainingSchedule &schedule, const TrainOptions &options) {
    schedule.validate();
    TrainLog log;
    if (schedule.max_steps == 0) return log;
    if (pairs.empty()) throw TrainingError("train: empty training corpus");

    std::vector<Tensor> params = model.parameters();
    auto adam = numerics::AdamState::for_params(params, schedule.beta1, schedule.beta2, schedule.epsilon);
    const numerics::LrSchedule lr_schedule{model.config().model_dim, schedule.warmup_steps};
    numerics::SplitMix64 shuffle_rng(numerics::derive_seed(schedule.seed, "batches"));
    numerics::SplitMix64 dropout_rng(numerics::derive_seed(schedule.seed, "dropout"));
    ForwardOptions forward{schedule.dropout, &dropout_rng};

    const auto buckets = corpus::batch_by_length(pairs, schedule.source_budget, schedule.target_budget);
    std::vector<corpus::Batch> epoch;
    std::size_t cursor = 0;
    std::optional<TransformerModel> best;
    if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

    for (std::size_t step = 1; step <= schedule.max_steps; ++step) {
        if (cursor == epoch.size()) {
            epoch = buckets;
            corpus::shuffle_batches(epoch, shuffle_rng);
            cursor = 0;
        }
        const TeacherBatch batch = make_teacher_batch(pairs, epoch[cursor++]);
        for (auto &p : params) p.zero_grad();
        const Tensor logits = forward_logits(model, batch.sources, batch.inputs, forward);
        const Tensor loss = label_smoothed_loss(logits, batch.gold, schedule.label_smoothing);
        const double value = loss.item();
        if (!std::isfinite(value))
            throw TrainingError("train: non-finite loss at step " + std::to_string(step) + " (" +
                                to_string(model.role()) + ")");
        numerics::backward(loss);
        numerics::adam_step(params, adam, schedule.lr_scale * numerics::learning_rate(lr_schedule, step));
        log.losses.push_back(value);
        log.steps = step;

        if (step % schedule.checkpoint_interval == 0 || step == schedule.max_steps) {
            double dev_loss = std::numeric_limits<double>::quiet_NaN();
            if (!dev.empty()) {
                dev_loss = evaluate_loss(model, dev, schedule.source_budget, schedule.target_budget);
                log.dev_losses.emplace_back(step, dev_loss);
                if (dev_loss < log.best_dev_loss) {
                    log.best_dev_loss = dev_loss;
                    log.best_step = step;
                    if (best)
                        best->assign_values(model);
                    else
                        best.emplace(model.clone());
                }
            }
            if (!options.checkpoint_dir.empty())
                save_model(options.checkpoint_dir / ("step_" + std::to_string(step)), model);
            if (options.on_checkpoint) options.on_checkpoint(step, value, dev_loss);
        }
    }
    if (best) model.assign_values(*best);
    else log.best_step = log.steps;
    return log;
}

} // namespace arforge::nmt

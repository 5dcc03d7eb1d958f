#include "arforge/pipeline/config.hpp"

#include <fstream>
#include <set>
#include <string>

namespace arforge::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

void ExperimentConfig::validate() const {
    try {
        nmt_model.validate();
        ar_model.validate();
        nmt_training.validate();
        ar_training.validate();
        strategy_training.validate();
    } catch (const std::exception &e) {
        throw ConfigError(e.what());
    }
    if (strategies.empty()) throw ConfigError("strategies: at least one strategy is required");
    if (!(ratio > 0.0)) throw ConfigError("ratio must be > 0");
    if (!(ar_dev_max_fraction > 0.0 && ar_dev_max_fraction < 1.0))
        throw ConfigError("ar_dev_max_fraction must be in (0, 1)");
    if (decode.beam_size == 0) throw ConfigError("decode.beam must be >= 1");
    if (!(decode.max_len_factor >= 0.0)) throw ConfigError("decode.max_len_factor must be >= 0");
    if (strategy_steps.single_phase == 0 || strategy_steps.first_phase == 0 || strategy_steps.finetune_phase == 0)
        throw ConfigError("strategy_steps: every phase needs at least one step");
}

namespace {

// Reads one JSON object, rejecting keys the caller never asked about.
class ObjectReader {
  public:
    ObjectReader(const json &doc, std::string where) : doc_(doc), where_(std::move(where)) {
        if (!doc_.is_object()) throw ConfigError(where_ + ": expected an object");
    }

    ~ObjectReader() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (auto it = doc_.begin(); it != doc_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
    }

    template <typename T>
    void get(const char *key, T &out) {
        seen_.insert(key);
        auto it = doc_.find(key);
        if (it == doc_.end()) return;
        try {
            out = it->get<T>();
        } catch (const json::exception &) {
            throw ConfigError(where_ + "." + key + ": wrong type");
        }
    }

    void path(const char *key, fs::path &out, const fs::path &base) {
        std::string text;
        get(key, text);
        if (!text.empty()) out = fs::path(text).is_absolute() ? fs::path(text) : base / text;
    }

    const json *child(const char *key) {
        seen_.insert(key);
        auto it = doc_.find(key);
        return it == doc_.end() ? nullptr : &*it;
    }

    std::string where(const char *key) const { return where_ + "." + key; }

  private:
    const json &doc_;
    std::string where_;
    std::set<std::string> seen_;
};

void read_model(const json &doc, const std::string &where, nmt::ModelConfig &m) {
    ObjectReader r(doc, where);
    r.get("num_layers", m.num_layers);
    r.get("model_dim", m.model_dim);
    r.get("num_heads", m.num_heads);
    r.get("ffn_dim", m.ffn_dim);
    r.get("dropout", m.dropout);
    r.get("label_smoothing", m.label_smoothing);
    r.get("max_positions", m.max_positions);
    r.get("shared_vocabulary", m.shared_vocabulary);
}

json write_model(const nmt::ModelConfig &m) {
    return {{"num_layers", m.num_layers},   {"model_dim", m.model_dim},
            {"num_heads", m.num_heads},     {"ffn_dim", m.ffn_dim},
            {"dropout", m.dropout},         {"label_smoothing", m.label_smoothing},
            {"max_positions", m.max_positions}, {"shared_vocabulary", m.shared_vocabulary}};
}

void read_schedule(const json &doc, const std::string &where, nmt::TrainingSchedule &s) {
    ObjectReader r(doc, where);
    r.get("max_steps", s.max_steps);
    r.get("warmup_steps", s.warmup_steps);
    r.get("source_budget", s.source_budget);
    r.get("target_budget", s.target_budget);
    r.get("checkpoint_interval", s.checkpoint_interval);
    r.get("lr_scale", s.lr_scale);
    r.get("beta1", s.beta1);
    r.get("beta2", s.beta2);
    r.get("epsilon", s.epsilon);
}

json write_schedule(const nmt::TrainingSchedule &s) {
    return {{"max_steps", s.max_steps},         {"warmup_steps", s.warmup_steps},
            {"source_budget", s.source_budget}, {"target_budget", s.target_budget},
            {"checkpoint_interval", s.checkpoint_interval}, {"lr_scale", s.lr_scale},
            {"beta1", s.beta1},                 {"beta2", s.beta2},
            {"epsilon", s.epsilon}};
}

// Dropout and smoothing live in the model section; the trainer reads them
// from the schedule.
void sync_regularization(const nmt::ModelConfig &m, nmt::TrainingSchedule &s) {
    s.dropout = m.dropout;
    s.label_smoothing = m.label_smoothing;
}

} // namespace

ExperimentConfig config_from_json(const json &doc, const fs::path &base_dir) {
    ExperimentConfig c;
    {
        ObjectReader r(doc, "config");
        r.path("run_dir", c.run_dir, base_dir);
        r.get("seed", c.seed);
        r.get("ar_dev_size", c.ar_dev_size);
        r.get("ar_dev_max_fraction", c.ar_dev_max_fraction);
        r.get("ratio", c.ratio);
        if (const json *d = r.child("data")) {
            ObjectReader dr(*d, "config.data");
            dr.path("train_source", c.data.train_source, base_dir);
            dr.path("train_target", c.data.train_target, base_dir);
            dr.path("dev_source", c.data.dev_source, base_dir);
            dr.path("dev_target", c.data.dev_target, base_dir);
            dr.path("test_source", c.data.test_source, base_dir);
            dr.path("test_target", c.data.test_target, base_dir);
            dr.path("mono_source", c.data.mono_source, base_dir);
            dr.path("mono_target", c.data.mono_target, base_dir);
            dr.get("mono_cap", c.data.mono_cap);
        }
        if (const json *t = r.child("tokenizer")) {
            ObjectReader tr(*t, "config.tokenizer");
            tr.get("num_merges", c.tokenizer.num_merges);
            std::size_t cap = c.tokenizer.vocab_cap.value_or(0);
            tr.get("vocab_cap", cap);
            c.tokenizer.vocab_cap = cap == 0 ? std::nullopt : std::optional<std::size_t>(cap);
        }
        if (const json *m = r.child("nmt_model")) read_model(*m, r.where("nmt_model"), c.nmt_model);
        if (const json *m = r.child("ar_model")) read_model(*m, r.where("ar_model"), c.ar_model);
        if (const json *s = r.child("nmt_training")) read_schedule(*s, r.where("nmt_training"), c.nmt_training);
        if (const json *s = r.child("ar_training")) read_schedule(*s, r.where("ar_training"), c.ar_training);
        if (const json *s = r.child("strategy_training"))
            read_schedule(*s, r.where("strategy_training"), c.strategy_training);
        if (const json *s = r.child("strategy_steps")) {
            ObjectReader sr(*s, "config.strategy_steps");
            sr.get("single_phase", c.strategy_steps.single_phase);
            sr.get("first_phase", c.strategy_steps.first_phase);
            sr.get("finetune_phase", c.strategy_steps.finetune_phase);
        }
        if (const json *d = r.child("decode")) {
            ObjectReader dr(*d, "config.decode");
            dr.get("beam", c.decode.beam_size);
            dr.get("alpha", c.decode.length_alpha);
            dr.get("max_len_factor", c.decode.max_len_factor);
            dr.get("max_len_offset", c.decode.max_len_offset);
            dr.get("batch_sentences", c.decode.batch_sentences);
        }
        if (const json *s = r.child("strategies")) {
            if (!s->is_array()) throw ConfigError("config.strategies: expected an array");
            c.strategies.clear();
            for (const auto &item : *s) {
                if (!item.is_string()) throw ConfigError("config.strategies: expected strategy names");
                auto parsed = corpus::parse_strategy(item.get<std::string>());
                if (!parsed) throw ConfigError("config.strategies: unknown strategy '" + item.get<std::string>() + "'");
                c.strategies.push_back(*parsed);
            }
        }
    }
    sync_regularization(c.nmt_model, c.nmt_training);
    sync_regularization(c.nmt_model, c.strategy_training);
    sync_regularization(c.ar_model, c.ar_training);
    c.validate();
    return c;
}

ExperimentConfig load_config(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error &e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(doc, fs::absolute(path).parent_path());
}

json config_to_json(const ExperimentConfig &c) {
    json strategies = json::array();
    for (auto s : c.strategies) strategies.push_back(std::string(corpus::strategy_id(s)));
    return {
        {"run_dir", c.run_dir.string()},
        {"seed", c.seed},
        {"ar_dev_size", c.ar_dev_size},
        {"ar_dev_max_fraction", c.ar_dev_max_fraction},
        {"ratio", c.ratio},
        {"data",
         {{"train_source", c.data.train_source.string()},
          {"train_target", c.data.train_target.string()},
          {"dev_source", c.data.dev_source.string()},
          {"dev_target", c.data.dev_target.string()},
          {"test_source", c.data.test_source.string()},
          {"test_target", c.data.test_target.string()},
          {"mono_source", c.data.mono_source.string()},
          {"mono_target", c.data.mono_target.string()},
          {"mono_cap", c.data.mono_cap}}},
        {"tokenizer", {{"num_merges", c.tokenizer.num_merges}, {"vocab_cap", c.tokenizer.vocab_cap.value_or(0)}}},
        {"nmt_model", write_model(c.nmt_model)},
        {"ar_model", write_model(c.ar_model)},
        {"nmt_training", write_schedule(c.nmt_training)},
        {"ar_training", write_schedule(c.ar_training)},
        {"strategy_training", write_schedule(c.strategy_training)},
        {"strategy_steps",
         {{"single_phase", c.strategy_steps.single_phase},
          {"first_phase", c.strategy_steps.first_phase},
          {"finetune_phase", c.strategy_steps.finetune_phase}}},
        {"decode",
         {{"beam", c.decode.beam_size},
          {"alpha", c.decode.length_alpha},
          {"max_len_factor", c.decode.max_len_factor},
          {"max_len_offset", c.decode.max_len_offset},
          {"batch_sentences", c.decode.batch_sentences}}},
        {"strategies", strategies},
    };
}

} // namespace arforge::pipeline

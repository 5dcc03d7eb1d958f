#include "arforge/nmt/model.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "arforge/numerics/ops.hpp"
#include "arforge/tokenizer/bpe.hpp"
#include "layers.hpp"

namespace arforge::nmt {

using numerics::NamedTensor;
using numerics::Shape;
namespace ops = numerics;

std::string to_string(ModelRole role) {
    switch (role) {
    case ModelRole::s2t: return "S2T";
    case ModelRole::t2s: return "T2S";
    case ModelRole::s2s_ar: return "S2S_AR";
    case ModelRole::t2t_ar: return "T2T_AR";
    }
    return "?";
}

ModelRole parse_role(const std::string &text) {
    for (auto role : {ModelRole::s2t, ModelRole::t2s, ModelRole::s2s_ar, ModelRole::t2t_ar})
        if (to_string(role) == text) return role;
    throw ModelError("unknown model role '" + text + "'");
}

void ModelConfig::validate() const {
    if (num_layers == 0 || model_dim == 0 || num_heads == 0 || ffn_dim == 0 || max_positions == 0)
        throw ModelError("model config: sizes must be positive");
    if (model_dim % num_heads != 0)
        throw ModelError("model config: model_dim " + std::to_string(model_dim) + " is not divisible by " +
                         std::to_string(num_heads) + " heads");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ModelError("model config: dropout must be in [0, 1)");
    if (!(label_smoothing >= 0.0 && label_smoothing < 1.0))
        throw ModelError("model config: label_smoothing must be in [0, 1)");
}

ModelConfig ModelConfig::transformer_base() {
    ModelConfig c;
    c.num_layers = 6;
    c.model_dim = 512;
    c.num_heads = 8;
    c.ffn_dim = 2048;
    c.max_positions = 1024;
    return c;
}

namespace {

LayerNormParams make_norm(std::size_t d) {
    return {Tensor::from_values({d}, std::vector<double>(d, 1.0), true), Tensor::zeros({d}, true)};
}

AttentionParams make_attention(std::size_t d) {
    auto w = [d] { return Tensor::zeros({d, d}, true); };
    auto b = [d] { return Tensor::zeros({d}, true); };
    return {w(), b(), w(), b(), w(), b(), w(), b()};
}

FeedForwardParams make_ffn(std::size_t d, std::size_t f) {
    return {Tensor::zeros({d, f}, true), Tensor::zeros({f}, true), Tensor::zeros({f, d}, true),
            Tensor::zeros({d}, true)};
}

void push_norm(std::vector<NamedTensor> &out, const std::string &name, const LayerNormParams &p) {
    out.push_back({name + ".gain", p.gain});
    out.push_back({name + ".bias", p.bias});
}

void push_attention(std::vector<NamedTensor> &out, const std::string &name, const AttentionParams &p) {
    out.push_back({name + ".wq", p.wq});
    out.push_back({name + ".bq", p.bq});
    out.push_back({name + ".wk", p.wk});
    out.push_back({name + ".bk", p.bk});
    out.push_back({name + ".wv", p.wv});
    out.push_back({name + ".bv", p.bv});
    out.push_back({name + ".wo", p.wo});
    out.push_back({name + ".bo", p.bo});
}

void push_ffn(std::vector<NamedTensor> &out, const std::string &name, const FeedForwardParams &p) {
    out.push_back({name + ".w1", p.w1});
    out.push_back({name + ".b1", p.b1});
    out.push_back({name + ".w2", p.w2});
    out.push_back({name + ".b2", p.b2});
}

bool ends_with(const std::string &s, const std::string &suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

TransformerModel::TransformerModel(const ModelConfig &config, ModelRole role, std::size_t source_vocab,
                                   std::size_t target_vocab)
    : config_(config), role_(role), source_vocab_(source_vocab), target_vocab_(target_vocab) {
    config_.validate();
    if (source_vocab == 0 || target_vocab == 0) throw ModelError("model: vocabulary sizes must be positive");
    const std::size_t d = config.model_dim, f = config.ffn_dim;
    source_embedding = Tensor::zeros({source_vocab, d}, true);
    target_embedding = Tensor::zeros({target_vocab, d}, true);
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        encoder.push_back({make_norm(d), make_attention(d), make_norm(d), make_ffn(d, f)});
        decoder.push_back({make_norm(d), make_attention(d), make_norm(d), make_attention(d), make_norm(d),
                           make_ffn(d, f)});
    }
    encoder_norm = make_norm(d);
    decoder_norm = make_norm(d);
    output_weight = Tensor::zeros({d, target_vocab}, true);
    output_bias = Tensor::zeros({target_vocab}, true);
}

std::vector<NamedTensor> TransformerModel::named_parameters() const {
    std::vector<NamedTensor> out;
    out.push_back({"source_embedding", source_embedding});
    out.push_back({"target_embedding", target_embedding});
    for (std::size_t l = 0; l < encoder.size(); ++l) {
        const std::string p = "encoder." + std::to_string(l);
        push_norm(out, p + ".self_norm", encoder[l].self_norm);
        push_attention(out, p + ".self_attention", encoder[l].self_attention);
        push_norm(out, p + ".ffn_norm", encoder[l].ffn_norm);
        push_ffn(out, p + ".ffn", encoder[l].ffn);
    }
    push_norm(out, "encoder_norm", encoder_norm);
    for (std::size_t l = 0; l < decoder.size(); ++l) {
        const std::string p = "decoder." + std::to_string(l);
        push_norm(out, p + ".self_norm", decoder[l].self_norm);
        push_attention(out, p + ".self_attention", decoder[l].self_attention);
        push_norm(out, p + ".cross_norm", decoder[l].cross_norm);
        push_attention(out, p + ".cross_attention", decoder[l].cross_attention);
        push_norm(out, p + ".ffn_norm", decoder[l].ffn_norm);
        push_ffn(out, p + ".ffn", decoder[l].ffn);
    }
    push_norm(out, "decoder_norm", decoder_norm);
    out.push_back({"output_weight", output_weight});
    out.push_back({"output_bias", output_bias});
    return out;
}

std::vector<Tensor> TransformerModel::parameters() const {
    std::vector<Tensor> out;
    for (auto &named : named_parameters()) out.push_back(named.tensor);
    return out;
}

std::size_t TransformerModel::parameter_count() const {
    std::size_t n = 0;
    for (auto &named : named_parameters()) n += named.tensor.size();
    return n;
}

TransformerModel TransformerModel::clone() const {
    TransformerModel copy(config_, role_, source_vocab_, target_vocab_);
    copy.assign_values(*this);
    return copy;
}

void TransformerModel::assign_values(const TransformerModel &other) {
    auto mine = named_parameters();
    auto theirs = other.named_parameters();
    if (mine.size() != theirs.size()) throw ModelError("assign_values: parameter lists differ");
    for (std::size_t i = 0; i < mine.size(); ++i) {
        if (mine[i].tensor.shape() != theirs[i].tensor.shape())
            throw ModelError("assign_values: shape mismatch for " + mine[i].name);
        auto dst = mine[i].tensor.mutable_values();
        auto src = theirs[i].tensor.values();
        std::copy(src.begin(), src.end(), dst.begin());
    }
}

std::size_t expected_parameter_count(const ModelConfig &c, std::size_t source_vocab, std::size_t target_vocab) {
    const std::size_t d = c.model_dim, f = c.ffn_dim;
    const std::size_t norm = 2 * d;
    const std::size_t attention = 4 * (d * d + d);
    const std::size_t ffn = d * f + f + f * d + d;
    const std::size_t enc_layer = 2 * norm + attention + ffn;
    const std::size_t dec_layer = 3 * norm + 2 * attention + ffn;
    return (source_vocab + target_vocab) * d + c.num_layers * (enc_layer + dec_layer) + 2 * norm +
           d * target_vocab + target_vocab;
}

TransformerModel init_model(const ModelConfig &config, ModelRole role, std::size_t source_vocab,
                            std::size_t target_vocab, std::uint64_t seed) {
    TransformerModel model(config, role, source_vocab, target_vocab);
    numerics::SplitMix64 rng(seed);
    const double embed_bound = 1.0 / std::sqrt(static_cast<double>(config.model_dim));
    for (auto &named : model.named_parameters()) {
        auto values = named.tensor.mutable_values();
        if (ends_with(named.name, "embedding")) {
            for (auto &v : values) v = rng.uniform(-embed_bound, embed_bound);
        } else if (named.tensor.rank() == 2) {
            const double fan = static_cast<double>(named.tensor.dim(0) + named.tensor.dim(1));
            const double bound = std::sqrt(6.0 / fan);
            for (auto &v : values) v = rng.uniform(-bound, bound);
        }
        // gains keep 1, biases keep 0
    }
    return model;
}

std::vector<double> sinusoidal_positions(std::size_t positions, std::size_t dim) {
    std::vector<double> table(positions * dim);
    for (std::size_t p = 0; p < positions; ++p)
        for (std::size_t i = 0; i < dim; i += 2) {
            const double angle =
                static_cast<double>(p) / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(dim));
            table[p * dim + i] = std::sin(angle);
            if (i + 1 < dim) table[p * dim + i + 1] = std::cos(angle);
        }
    return table;
}

namespace {

using layers::feed_forward;
using layers::linear;
using layers::norm;

Tensor maybe_dropout(const Tensor &x, const ForwardOptions &options) {
    if (options.dropout <= 0.0) return x;
    if (!options.rng) throw ModelError("forward: dropout requested without a generator");
    return ops::dropout(x, options.dropout, *options.rng);
}

// Embedded, scaled, position-shifted rows for a padded batch.
Tensor embed(const Tensor &table, std::span<const std::vector<int>> rows, std::size_t max_len,
             std::size_t max_positions, std::size_t d, const ForwardOptions &options) {
    if (max_len > max_positions)
        throw ModelError("forward: sequence length " + std::to_string(max_len) + " exceeds max_positions " +
                         std::to_string(max_positions));
    std::vector<int> ids(rows.size() * max_len, tokenizer::kPadId);
    for (std::size_t b = 0; b < rows.size(); ++b)
        std::copy(rows[b].begin(), rows[b].end(), ids.begin() + static_cast<std::ptrdiff_t>(b * max_len));
    const auto pos = sinusoidal_positions(max_len, d);
    std::vector<double> shift(rows.size() * max_len * d);
    for (std::size_t b = 0; b < rows.size(); ++b)
        std::copy(pos.begin(), pos.end(), shift.begin() + static_cast<std::ptrdiff_t>(b * max_len * d));
    Tensor x = ops::scale(ops::embedding_lookup(table, ids), std::sqrt(static_cast<double>(d)));
    x = ops::add(x, Tensor::from_values({rows.size() * max_len, d}, std::move(shift)));
    return maybe_dropout(x, options);
}

std::size_t longest(std::span<const std::vector<int>> rows) {
    std::size_t n = 0;
    for (const auto &r : rows) n = std::max(n, r.size());
    return n;
}

Tensor attend(const Tensor &queries, const Tensor &keys, const AttentionParams &p, ops::AttentionSpec spec) {
    const Tensor q = linear(queries, p.wq, p.bq);
    const Tensor k = linear(keys, p.wk, p.bk);
    const Tensor v = linear(keys, p.wv, p.bv);
    return linear(ops::attention(q, k, v, spec), p.wo, p.bo);
}

} // namespace

EncodedBatch encode_sources(const TransformerModel &model, std::span<const std::vector<int>> sources,
                            const ForwardOptions &options) {
    if (sources.empty()) throw ModelError("encode: empty batch");
    const auto &c = model.config();
    EncodedBatch out;
    out.max_len = longest(sources);
    for (const auto &s : sources) {
        if (s.empty()) throw ModelError("encode: empty source sequence");
        for (int id : s)
            if (id < 0 || static_cast<std::size_t>(id) >= model.source_vocab())
                throw ModelError("encode: source id " + std::to_string(id) + " outside vocabulary");
        out.lengths.push_back(s.size());
    }
    ops::AttentionSpec spec{sources.size(), out.max_len, out.max_len, c.num_heads, out.lengths, false};
    Tensor x = embed(model.source_embedding, sources, out.max_len, c.max_positions, c.model_dim, options);
    for (const auto &layer : model.encoder) {
        const Tensor h = norm(x, layer.self_norm);
        x = ops::add(x, maybe_dropout(attend(h, h, layer.self_attention, spec), options));
        x = ops::add(x, maybe_dropout(feed_forward(norm(x, layer.ffn_norm), layer.ffn), options));
    }
    out.memory = norm(x, model.encoder_norm);
    return out;
}

Tensor forward_logits(const TransformerModel &model, std::span<const std::vector<int>> sources,
                      std::span<const std::vector<int>> target_prefixes, const ForwardOptions &options) {
    if (sources.size() != target_prefixes.size())
        throw ModelError("forward: " + std::to_string(sources.size()) + " sources vs " +
                         std::to_string(target_prefixes.size()) + " target prefixes");
    const auto &c = model.config();
    const EncodedBatch enc = encode_sources(model, sources, options);
    const std::size_t B = sources.size(), T = longest(target_prefixes);
    std::vector<std::size_t> tgt_lengths;
    for (const auto &t : target_prefixes) {
        if (t.empty()) throw ModelError("forward: empty target prefix (expected BOS first)");
        for (int id : t)
            if (id < 0 || static_cast<std::size_t>(id) >= model.target_vocab())
                throw ModelError("forward: target id " + std::to_string(id) + " outside vocabulary");
        tgt_lengths.push_back(t.size());
    }
    ops::AttentionSpec self_spec{B, T, T, c.num_heads, tgt_lengths, true};
    ops::AttentionSpec cross_spec{B, T, enc.max_len, c.num_heads, enc.lengths, false};
    Tensor y = embed(model.target_embedding, target_prefixes, T, c.max_positions, c.model_dim, options);
    for (const auto &layer : model.decoder) {
        const Tensor h = norm(y, layer.self_norm);
        y = ops::add(y, maybe_dropout(attend(h, h, layer.self_attention, self_spec), options));
        const Tensor hq = norm(y, layer.cross_norm);
        y = ops::add(y, maybe_dropout(attend(hq, enc.memory, layer.cross_attention, cross_spec), options));
        y = ops::add(y, maybe_dropout(feed_forward(norm(y, layer.ffn_norm), layer.ffn), options));
    }
    const Tensor logits = linear(norm(y, model.decoder_norm), model.output_weight, model.output_bias);
    return ops::reshape(logits, {B, T, model.target_vocab()});
}

Tensor label_smoothed_loss(const Tensor &logits, std::span<const int> gold, double smoothing) {
    const std::size_t V = logits.shape().back();
    const Tensor flat = logits.rank() == 2 ? logits : ops::reshape(logits, {logits.size() / V, V});
    return ops::cross_entropy(flat, gold, smoothing, tokenizer::kPadId);
}

void save_model(const std::filesystem::path &prefix, const TransformerModel &model) {
    numerics::save_checkpoint(prefix, model.named_parameters());
    std::ofstream out(prefix.string() + ".config");
    if (!out) throw ModelError("cannot write " + prefix.string() + ".config");
    const auto &c = model.config();
    out << "role=" << to_string(model.role()) << "\n"
        << "num_layers=" << c.num_layers << "\n"
        << "model_dim=" << c.model_dim << "\n"
        << "num_heads=" << c.num_heads << "\n"
        << "ffn_dim=" << c.ffn_dim << "\n";
    out.precision(17);
    out << "dropout=" << c.dropout << "\n"
        << "label_smoothing=" << c.label_smoothing << "\n"
        << "max_positions=" << c.max_positions << "\n"
        << "shared_vocabulary=" << (c.shared_vocabulary ? 1 : 0) << "\n"
        << "source_vocab=" << model.source_vocab() << "\n"
        << "target_vocab=" << model.target_vocab() << "\n";
}

TransformerModel load_model(const std::filesystem::path &prefix) {
    std::ifstream in(prefix.string() + ".config");
    if (!in) throw ModelError("cannot read " + prefix.string() + ".config");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const std::string &key) -> const std::string & {
        auto it = kv.find(key);
        if (it == kv.end()) throw ModelError(prefix.string() + ".config: missing key " + key);
        return it->second;
    };
    ModelConfig c;
    c.num_layers = std::stoul(get("num_layers"));
    c.model_dim = std::stoul(get("model_dim"));
    c.num_heads = std::stoul(get("num_heads"));
    c.ffn_dim = std::stoul(get("ffn_dim"));
    c.dropout = std::stod(get("dropout"));
    c.label_smoothing = std::stod(get("label_smoothing"));
    c.max_positions = std::stoul(get("max_positions"));
    c.shared_vocabulary = get("shared_vocabulary") == "1";
    TransformerModel model(c, parse_role(get("role")), std::stoul(get("source_vocab")),
                           std::stoul(get("target_vocab")));
    const auto stored = numerics::load_checkpoint(prefix);
    auto params = model.named_parameters();
    if (stored.size() != params.size())
        throw ModelError(prefix.string() + ": checkpoint has " + std::to_string(stored.size()) +
                         " tensors, model expects " + std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (stored[i].name != params[i].name || stored[i].tensor.shape() != params[i].tensor.shape())
            throw ModelError(prefix.string() + ": tensor " + stored[i].name + " does not match " + params[i].name);
        auto src = stored[i].tensor.values();
        std::copy(src.begin(), src.end(), params[i].tensor.mutable_values().begin());
    }
    return model;
}

} // namespace arforge::nmt

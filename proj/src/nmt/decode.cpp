#include "arforge/nmt/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "arforge/numerics/kernels.hpp"
#include "arforge/numerics/ops.hpp"
#include "layers.hpp"

namespace arforge::nmt {

namespace ops = numerics;
using tokenizer::kBosId;
using tokenizer::kEosId;

namespace {

struct Row {
    std::size_t sentence = 0;
    std::size_t length = 0;                  // tokens consumed so far
    std::vector<std::vector<double>> keys;   // per layer, length * D
    std::vector<std::vector<double>> values; // per layer, length * D
};

// Same arithmetic as the attention primitive for one query row and one head.
void attend_row(const double *q, const double *keys, const double *values, std::size_t key_count,
                std::size_t stride, std::size_t dh, double inv_sqrt, std::vector<double> &scratch, double *out) {
    scratch.assign(key_count, 0.0);
    for (std::size_t j = 0; j < key_count; ++j) {
        const double *kj = keys + j * stride;
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += q[c] * kj[c];
        scratch[j] = s * inv_sqrt;
    }
    ops::kernels::softmax_row(scratch, key_count);
    for (std::size_t j = 0; j < key_count; ++j) {
        const double *vj = values + j * stride;
        for (std::size_t c = 0; c < dh; ++c) out[c] += scratch[j] * vj[c];
    }
}

} // namespace

struct TransformerScorer::State {
    const TransformerModel &model;
    std::size_t max_source = 0;
    std::vector<std::size_t> source_lengths;
    std::vector<Tensor> cross_keys;   // per layer, [sentences * max_source, D]
    std::vector<Tensor> cross_values; // per layer
    std::vector<Row> rows;
    bool started = false;

    explicit State(const TransformerModel &m) : model(m) {}
};

TransformerScorer::TransformerScorer(const TransformerModel &model, std::span<const std::vector<int>> sources)
    : state_(std::make_unique<State>(model)) {
    ops::NoGradGuard no_grad;
    const EncodedBatch enc = encode_sources(model, sources);
    state_->max_source = enc.max_len;
    state_->source_lengths = enc.lengths;
    for (const auto &layer : model.decoder) {
        const auto &p = layer.cross_attention;
        state_->cross_keys.push_back(layers::linear(enc.memory, p.wk, p.bk));
        state_->cross_values.push_back(layers::linear(enc.memory, p.wv, p.bv));
    }
}

TransformerScorer::~TransformerScorer() = default;

std::size_t TransformerScorer::vocab_size() const { return state_->model.target_vocab(); }

std::vector<double> TransformerScorer::advance(std::span<const std::size_t> parents, std::span<const int> tokens) {
    if (parents.size() != tokens.size()) throw std::invalid_argument("scorer: parents/tokens size mismatch");
    ops::NoGradGuard no_grad;
    State &st = *state_;
    const TransformerModel &model = st.model;
    const auto &c = model.config();
    const std::size_t D = c.model_dim, H = c.num_heads, dh = D / H, L = c.num_layers;
    const std::size_t N = parents.size(), V = model.target_vocab();
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

    std::vector<Row> next(N);
    for (std::size_t r = 0; r < N; ++r) {
        if (!st.started) {
            if (parents[r] >= st.source_lengths.size()) throw std::out_of_range("scorer: bad sentence index");
            next[r].sentence = parents[r];
            next[r].keys.assign(L, {});
            next[r].values.assign(L, {});
        } else {
            next[r] = st.rows.at(parents[r]);
        }
        if (tokens[r] < 0 || static_cast<std::size_t>(tokens[r]) >= V)
            throw std::out_of_range("scorer: token id outside vocabulary");
        if (next[r].length + 1 > c.max_positions)
            throw ModelError("decode: prefix longer than max_positions " + std::to_string(c.max_positions));
    }
    st.started = true;
    if (N == 0) {
        st.rows.clear();
        return {};
    }

    // Embedding plus the position of the consumed token.
    std::size_t max_pos = 0;
    for (const auto &row : next) max_pos = std::max(max_pos, row.length + 1);
    const auto pos = sinusoidal_positions(max_pos, D);
    std::vector<double> shift(N * D);
    for (std::size_t r = 0; r < N; ++r)
        std::copy_n(pos.begin() + static_cast<std::ptrdiff_t>(next[r].length * D), D,
                    shift.begin() + static_cast<std::ptrdiff_t>(r * D));
    std::vector<int> ids(tokens.begin(), tokens.end());
    Tensor x = ops::scale(ops::embedding_lookup(model.target_embedding, ids), std::sqrt(static_cast<double>(D)));
    x = ops::add(x, Tensor::from_values({N, D}, std::move(shift)));

    std::vector<double> scratch;
    for (std::size_t l = 0; l < L; ++l) {
        const auto &layer = model.decoder[l];
        {
            const auto &p = layer.self_attention;
            const Tensor h = layers::norm(x, layer.self_norm);
            const Tensor q = layers::linear(h, p.wq, p.bq);
            const Tensor k = layers::linear(h, p.wk, p.bk);
            const Tensor v = layers::linear(h, p.wv, p.bv);
            std::vector<double> out(N * D, 0.0);
            for (std::size_t r = 0; r < N; ++r) {
                auto &keys = next[r].keys[l];
                auto &values = next[r].values[l];
                keys.insert(keys.end(), k.values().begin() + static_cast<std::ptrdiff_t>(r * D),
                            k.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * D));
                values.insert(values.end(), v.values().begin() + static_cast<std::ptrdiff_t>(r * D),
                              v.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * D));
                const std::size_t count = next[r].length + 1;
                for (std::size_t hd = 0; hd < H; ++hd)
                    attend_row(q.values().data() + r * D + hd * dh, keys.data() + hd * dh,
                               values.data() + hd * dh, count, D, dh, inv_sqrt, scratch,
                               out.data() + r * D + hd * dh);
            }
            x = ops::add(x, layers::linear(Tensor::from_values({N, D}, std::move(out)), p.wo, p.bo));
        }
        {
            const auto &p = layer.cross_attention;
            const Tensor q = layers::linear(layers::norm(x, layer.cross_norm), p.wq, p.bq);
            const auto kv = st.cross_keys[l].values();
            const auto vv = st.cross_values[l].values();
            std::vector<double> out(N * D, 0.0);
            for (std::size_t r = 0; r < N; ++r) {
                const std::size_t s = next[r].sentence;
                const double *kb = kv.data() + s * st.max_source * D;
                const double *vb = vv.data() + s * st.max_source * D;
                for (std::size_t hd = 0; hd < H; ++hd)
                    attend_row(q.values().data() + r * D + hd * dh, kb + hd * dh, vb + hd * dh,
                               st.source_lengths[s], D, dh, inv_sqrt, scratch, out.data() + r * D + hd * dh);
            }
            x = ops::add(x, layers::linear(Tensor::from_values({N, D}, std::move(out)), p.wo, p.bo));
        }
        x = ops::add(x, layers::feed_forward(layers::norm(x, layer.ffn_norm), layer.ffn));
    }
    const Tensor logits = layers::linear(layers::norm(x, model.decoder_norm), model.output_weight, model.output_bias);

    std::vector<double> log_probs(logits.values().begin(), logits.values().end());
    for (std::size_t r = 0; r < N; ++r) {
        double *row = log_probs.data() + r * V;
        double mx = row[0];
        for (std::size_t j = 1; j < V; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < V; ++j) z += std::exp(row[j] - mx);
        const double log_z = mx + std::log(z);
        for (std::size_t j = 0; j < V; ++j) row[j] -= log_z;
    }
    for (auto &row : next) ++row.length;
    st.rows = std::move(next);
    return log_probs;
}

double length_penalty(std::size_t length, double alpha) {
    if (alpha == 0.0) return 1.0;
    return std::pow((5.0 + static_cast<double>(length)) / 6.0, alpha);
}

namespace {

struct Live {
    std::vector<int> tokens;
    double log_prob = 0.0;
    std::size_t row = 0;
};

struct SentenceSearch {
    std::size_t max_len = 0;
    std::vector<Live> live;
    std::vector<Hypothesis> finished;
    bool done = false;
};

struct Candidate {
    double score;
    std::size_t hyp; // index within the sentence's live list
    int token;
};

bool ranks_before(const Candidate &a, const Candidate &b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.hyp != b.hyp) return a.hyp < b.hyp;
    return a.token < b.token;
}

Hypothesis make_hypothesis(std::vector<int> tokens, double log_prob, bool finished, double alpha) {
    Hypothesis h;
    h.tokens = std::move(tokens);
    h.log_prob = log_prob;
    h.finished = finished;
    h.score = log_prob / length_penalty(h.tokens.size(), alpha);
    return h;
}

template <typename Select>
std::vector<Hypothesis> run_search(Scorer &scorer, std::span<const std::size_t> max_lens, double alpha,
                                   Select &&select) {
    std::vector<SentenceSearch> searches(max_lens.size());
    for (std::size_t s = 0; s < max_lens.size(); ++s) {
        searches[s].max_len = max_lens[s];
        searches[s].live.push_back({{}, 0.0, s});
        if (max_lens[s] == 0) searches[s].done = true;
    }
    const std::size_t V = scorer.vocab_size();
    while (true) {
        std::vector<std::size_t> parents;
        std::vector<int> tokens;
        std::vector<std::size_t> first_row(searches.size());
        for (std::size_t s = 0; s < searches.size(); ++s) {
            first_row[s] = parents.size();
            if (searches[s].done) continue;
            for (const auto &h : searches[s].live) {
                parents.push_back(h.row);
                tokens.push_back(h.tokens.empty() ? kBosId : h.tokens.back());
            }
        }
        if (parents.empty()) break;
        const std::vector<double> log_probs = scorer.advance(parents, tokens);
        for (std::size_t s = 0; s < searches.size(); ++s) {
            auto &search = searches[s];
            if (search.done) continue;
            std::vector<Live> next_live;
            select(search, log_probs.data() + first_row[s] * V, V, first_row[s], next_live);
            const bool at_limit = !next_live.empty() && next_live.front().tokens.size() >= search.max_len;
            search.live = std::move(next_live);
            if (search.live.empty() || at_limit) search.done = true;
        }
    }

    std::vector<Hypothesis> best(searches.size());
    for (std::size_t s = 0; s < searches.size(); ++s) {
        const auto &search = searches[s];
        const Hypothesis *choice = nullptr;
        for (const auto &h : search.finished)
            if (!choice || h.score > choice->score) choice = &h;
        if (choice) {
            best[s] = *choice;
            continue;
        }
        bool any = false;
        for (const auto &h : search.live) {
            Hypothesis cand = make_hypothesis(h.tokens, h.log_prob, false, alpha);
            if (!any || cand.score > best[s].score) best[s] = std::move(cand);
            any = true;
        }
    }
    return best;
}

} // namespace

std::vector<Hypothesis> beam_search(Scorer &scorer, std::span<const std::size_t> max_lens,
                                    const BeamOptions &options) {
    if (options.beam_size == 0) throw std::invalid_argument("beam_search: beam_size must be >= 1");
    const std::size_t k = options.beam_size;
    const double alpha = options.length_alpha;
    auto select = [k, alpha](SentenceSearch &search, const double *lp, std::size_t V, std::size_t row0,
                             std::vector<Live> &next_live) {
        std::vector<Candidate> cands;
        cands.reserve(search.live.size() * V);
        for (std::size_t h = 0; h < search.live.size(); ++h)
            for (std::size_t t = 0; t < V; ++t)
                cands.push_back({search.live[h].log_prob + lp[h * V + t], h, static_cast<int>(t)});
        const std::size_t keep = std::min(cands.size(), 2 * k);
        std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                          ranks_before);
        for (std::size_t rank = 0; rank < keep; ++rank) {
            const Candidate &cand = cands[rank];
            const Live &parent = search.live[cand.hyp];
            std::vector<int> tokens = parent.tokens;
            tokens.push_back(cand.token);
            if (cand.token == kEosId) {
                if (rank < k) search.finished.push_back(make_hypothesis(std::move(tokens), cand.score, true, alpha));
            } else if (next_live.size() < k) {
                next_live.push_back({std::move(tokens), cand.score, row0 + cand.hyp});
            }
        }
        if (search.finished.size() >= k) next_live.clear();
    };
    return run_search(scorer, max_lens, alpha, select);
}

std::vector<Hypothesis> greedy_search(Scorer &scorer, std::span<const std::size_t> max_lens) {
    auto select = [](SentenceSearch &search, const double *lp, std::size_t V, std::size_t row0,
                     std::vector<Live> &next_live) {
        const Live &parent = search.live.front();
        std::size_t arg = 0;
        for (std::size_t t = 1; t < V; ++t)
            if (lp[t] > lp[arg]) arg = t;
        std::vector<int> tokens = parent.tokens;
        tokens.push_back(static_cast<int>(arg));
        const double log_prob = parent.log_prob + lp[arg];
        if (static_cast<int>(arg) == kEosId)
            search.finished.push_back(make_hypothesis(std::move(tokens), log_prob, true, 0.0));
        else
            next_live.push_back({std::move(tokens), log_prob, row0});
    };
    return run_search(scorer, max_lens, 0.0, select);
}

std::size_t DecodeSettings::max_len_for(std::size_t source_tokens) const {
    const double raw = max_len_factor * static_cast<double>(source_tokens) + static_cast<double>(max_len_offset);
    return raw <= 0.0 ? 0 : static_cast<std::size_t>(std::floor(raw));
}

namespace {

std::vector<int> with_eos(std::span<const int> source) {
    std::vector<int> out(source.begin(), source.end());
    out.push_back(kEosId);
    return out;
}

std::vector<int> strip_eos(std::vector<int> tokens) {
    if (!tokens.empty() && tokens.back() == kEosId) tokens.pop_back();
    return tokens;
}

std::size_t clamp_len(const TransformerModel &model, std::size_t max_len) {
    return std::min(max_len, model.config().max_positions);
}

} // namespace

std::vector<int> beam_decode(const TransformerModel &model, std::span<const int> source, std::size_t beam_size,
                             double length_alpha, std::size_t max_len) {
    const std::vector<std::vector<int>> sources{with_eos(source)};
    TransformerScorer scorer(model, sources);
    const std::size_t lens[] = {clamp_len(model, max_len)};
    auto best = beam_search(scorer, lens, {beam_size, length_alpha});
    return strip_eos(std::move(best.front().tokens));
}

std::vector<int> greedy_decode(const TransformerModel &model, std::span<const int> source, std::size_t max_len) {
    const std::vector<std::vector<int>> sources{with_eos(source)};
    TransformerScorer scorer(model, sources);
    const std::size_t lens[] = {clamp_len(model, max_len)};
    auto best = greedy_search(scorer, lens);
    return strip_eos(std::move(best.front().tokens));
}

std::vector<std::vector<int>> decode_batch(const TransformerModel &model, std::span<const std::vector<int>> sources,
                                           const DecodeSettings &settings) {
    std::vector<std::vector<int>> out(sources.size());
    const std::size_t chunk = std::max<std::size_t>(1, settings.batch_sentences);
    for (std::size_t begin = 0; begin < sources.size(); begin += chunk) {
        const std::size_t end = std::min(sources.size(), begin + chunk);
        std::vector<std::vector<int>> batch;
        std::vector<std::size_t> lens;
        for (std::size_t i = begin; i < end; ++i) {
            batch.push_back(with_eos(sources[i]));
            lens.push_back(clamp_len(model, settings.max_len_for(sources[i].size())));
        }
        TransformerScorer scorer(model, batch);
        auto best = beam_search(scorer, lens, {settings.beam_size, settings.length_alpha});
        for (std::size_t i = begin; i < end; ++i) out[i] = strip_eos(std::move(best[i - begin].tokens));
    }
    return out;
}

std::vector<std::string> translate_corpus(const TransformerModel &model, const tokenizer::Encoder &source_encoder,
                                          const tokenizer::Vocabulary &target_vocab,
                                          std::span<const std::string> lines, const DecodeSettings &settings) {
    std::vector<std::vector<int>> sources;
    sources.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        sources.push_back(source_encoder.encode(lines[i]));
        if (sources.back().size() + 1 > model.config().max_positions)
            throw ModelError("translate: line " + std::to_string(i + 1) + " has " +
                             std::to_string(sources.back().size()) + " tokens, beyond max_positions");
    }
    std::vector<std::string> out;
    out.reserve(lines.size());
    const std::size_t chunk = std::max<std::size_t>(1, settings.batch_sentences);
    for (std::size_t begin = 0; begin < sources.size(); begin += chunk) {
        const std::size_t end = std::min(sources.size(), begin + chunk);
        try {
            auto ids = decode_batch(model, std::span(sources).subspan(begin, end - begin), settings);
            for (auto &seq : ids) out.push_back(tokenizer::decode(seq, target_vocab));
        } catch (const std::exception &e) {
            throw ModelError("translate: lines " + std::to_string(begin + 1) + "-" + std::to_string(end) + ": " +
                             e.what());
        }
    }
    return out;
}

} // namespace arforge::nmt

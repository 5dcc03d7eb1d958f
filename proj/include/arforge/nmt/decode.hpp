#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "arforge/nmt/model.hpp"
#include "arforge/tokenizer/bpe.hpp"

namespace arforge::nmt {

/// Next-token distributions for a growing set of prefixes.
///
/// Rows are prefix states. Before the first call the rows are one empty
/// prefix per sentence (row i belongs to sentence i). Each advance() builds a
/// new row list: new row r extends row parents[r] of the previous list with
/// tokens[r], and its result is the log-probability of every next token,
/// [rows x vocab] row-major.
class Scorer {
  public:
    virtual ~Scorer() = default;
    virtual std::size_t vocab_size() const = 0;
    virtual std::vector<double> advance(std::span<const std::size_t> parents, std::span<const int> tokens) = 0;
};

/// Incremental transformer decoder with cached self-attention keys/values.
class TransformerScorer : public Scorer {
  public:
    /// `sources` already carry EOS.
    TransformerScorer(const TransformerModel &model, std::span<const std::vector<int>> sources);
    ~TransformerScorer() override;

    std::size_t vocab_size() const override;
    std::vector<double> advance(std::span<const std::size_t> parents, std::span<const int> tokens) override;

  private:
    struct State;
    std::unique_ptr<State> state_;
};

struct Hypothesis {
    std::vector<int> tokens; // generated ids; ends with EOS when finished
    double log_prob = 0.0;
    bool finished = false;
    double score = 0.0; // log_prob / length_penalty(tokens.size())
};

struct BeamOptions {
    std::size_t beam_size = 4;
    double length_alpha = 0.6;
};

/// ((5 + length) / 6)^alpha.
double length_penalty(std::size_t length, double alpha);

/// Beam search run jointly over `max_lens.size()` sentences, at most
/// max_lens[i] generated tokens (EOS included) for sentence i.
///
/// Each step ranks every (hypothesis, token) extension by accumulated
/// log-probability (ties: earlier hypothesis, then smaller id) and keeps the
/// top 2 * beam. An EOS extension among the first `beam` ranks finishes; the
/// others fill the live beam up to `beam` entries. A sentence stops once
/// `beam` hypotheses have finished or the length limit is reached. The
/// answer is the finished hypothesis with the best normalized score, or the
/// best live one when none finished.
std::vector<Hypothesis> beam_search(Scorer &scorer, std::span<const std::size_t> max_lens,
                                    const BeamOptions &options);

/// Step-by-step argmax (smallest id on ties) until EOS or the limit.
std::vector<Hypothesis> greedy_search(Scorer &scorer, std::span<const std::size_t> max_lens);

struct DecodeSettings {
    std::size_t beam_size = 4;
    double length_alpha = 0.6;
    double max_len_factor = 2.0; // max_len = factor * source_tokens + offset
    std::size_t max_len_offset = 10;
    std::size_t batch_sentences = 64;

    std::size_t max_len_for(std::size_t source_tokens) const;
};

/// Best output ids for one source (no BOS/EOS, the model appends EOS to the
/// source itself).
std::vector<int> beam_decode(const TransformerModel &model, std::span<const int> source, std::size_t beam_size,
                             double length_alpha, std::size_t max_len);
std::vector<int> greedy_decode(const TransformerModel &model, std::span<const int> source, std::size_t max_len);

/// Batched beam decoding of many tokenized sources; output i is the best
/// hypothesis for source i with EOS stripped.
std::vector<std::vector<int>> decode_batch(const TransformerModel &model,
                                           std::span<const std::vector<int>> sources,
                                           const DecodeSettings &settings);

/// Translates every line (encoded with `source_encoder`, decoded with
/// `target_vocab`), preserving order. Errors carry the offending line number.
std::vector<std::string> translate_corpus(const TransformerModel &model, const tokenizer::Encoder &source_encoder,
                                          const tokenizer::Vocabulary &target_vocab,
                                          std::span<const std::string> lines, const DecodeSettings &settings);

} // namespace arforge::nmt

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "arforge/numerics/checkpoint.hpp"
#include "arforge/numerics/rng.hpp"
#include "arforge/numerics/tensor.hpp"

namespace arforge::nmt {

using numerics::Tensor;

/// Invalid model configuration or checkpoint.
class ModelError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

enum class ModelRole { s2t, t2s, s2s_ar, t2t_ar };

std::string to_string(ModelRole role);
ModelRole parse_role(const std::string &text);

struct ModelConfig {
    std::size_t num_layers = 2;
    std::size_t model_dim = 64;
    std::size_t num_heads = 4;
    std::size_t ffn_dim = 128;
    double dropout = 0.1;
    double label_smoothing = 0.1;
    std::size_t max_positions = 256;
    bool shared_vocabulary = true;

    /// Throws ModelError on inconsistent values.
    void validate() const;

    /// The large reference setting (6 layers, 512 wide, 8 heads, 2048 ffn).
    /// Documented only; far too slow to train here.
    static ModelConfig transformer_base();

    bool operator==(const ModelConfig &) const = default;
};

struct LayerNormParams {
    Tensor gain;
    Tensor bias;
};

struct AttentionParams {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};

struct FeedForwardParams {
    Tensor w1, b1, w2, b2;
};

struct EncoderLayerParams {
    LayerNormParams self_norm;
    AttentionParams self_attention;
    LayerNormParams ffn_norm;
    FeedForwardParams ffn;
};

struct DecoderLayerParams {
    LayerNormParams self_norm;
    AttentionParams self_attention;
    LayerNormParams cross_norm;
    AttentionParams cross_attention;
    LayerNormParams ffn_norm;
    FeedForwardParams ffn;
};

/// Pre-norm encoder-decoder transformer with sinusoidal positions and an
/// untied output projection. The role tag is fixed at construction.
class TransformerModel {
  public:
    /// Zero-valued parameters of the right shapes; see init_model.
    TransformerModel(const ModelConfig &config, ModelRole role, std::size_t source_vocab,
                     std::size_t target_vocab);

    const ModelConfig &config() const { return config_; }
    ModelRole role() const { return role_; }
    std::size_t source_vocab() const { return source_vocab_; }
    std::size_t target_vocab() const { return target_vocab_; }

    Tensor source_embedding;
    Tensor target_embedding;
    std::vector<EncoderLayerParams> encoder;
    LayerNormParams encoder_norm;
    std::vector<DecoderLayerParams> decoder;
    LayerNormParams decoder_norm;
    Tensor output_weight; // [model_dim, target_vocab]
    Tensor output_bias;

    /// Every parameter with a stable dotted name, in a fixed order. The
    /// tensors share storage with the model.
    std::vector<numerics::NamedTensor> named_parameters() const;
    std::vector<Tensor> parameters() const;
    std::size_t parameter_count() const;

    /// Independent copy of every value.
    TransformerModel clone() const;
    /// Overwrites parameter values from a model of identical shape.
    void assign_values(const TransformerModel &other);

  private:
    ModelConfig config_;
    ModelRole role_;
    std::size_t source_vocab_;
    std::size_t target_vocab_;
};

/// Closed-form parameter count for a configuration.
std::size_t expected_parameter_count(const ModelConfig &config, std::size_t source_vocab,
                                     std::size_t target_vocab);

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), embeddings uniform in
/// +-model_dim^-0.5, norm gains 1, biases 0. Deterministic in `seed`.
TransformerModel init_model(const ModelConfig &config, ModelRole role, std::size_t source_vocab,
                            std::size_t target_vocab, std::uint64_t seed);

/// Sinusoidal position table, [positions, dim] row-major.
std::vector<double> sinusoidal_positions(std::size_t positions, std::size_t dim);

struct ForwardOptions {
    double dropout = 0.0;
    numerics::SplitMix64 *rng = nullptr; // required when dropout > 0
};

/// Encoder output for a padded batch: [batch * max_len, model_dim] rows plus
/// the true lengths.
struct EncodedBatch {
    Tensor memory;
    std::vector<std::size_t> lengths;
    std::size_t max_len = 0;
};

/// Sources are used as given (callers append EOS). Empty sources are not
/// allowed; the model layer always supplies at least EOS.
EncodedBatch encode_sources(const TransformerModel &model, std::span<const std::vector<int>> sources,
                            const ForwardOptions &options = {});

/// Logits [batch, max_prefix_len, target_vocab] for every prefix position.
/// Prefixes start with BOS; shorter ones are right-padded and the padded
/// positions hold meaningless values.
Tensor forward_logits(const TransformerModel &model, std::span<const std::vector<int>> sources,
                      std::span<const std::vector<int>> target_prefixes, const ForwardOptions &options = {});

/// Label-smoothed cross entropy over logits of any rank (last axis is the
/// vocabulary) against flattened gold ids; PAD positions are skipped.
Tensor label_smoothed_loss(const Tensor &logits, std::span<const int> gold, double smoothing);

/// Writes the parameters through the numerics checkpoint format plus a
/// `<prefix>.config` key=value sidecar.
void save_model(const std::filesystem::path &prefix, const TransformerModel &model);
TransformerModel load_model(const std::filesystem::path &prefix);

} // namespace arforge::nmt

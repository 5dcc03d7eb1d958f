#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "arforge/numerics/rng.hpp"
#include "arforge/numerics/tensor.hpp"

namespace arforge::numerics {

// Differentiable primitives. Tensors of rank > 2 are treated as a stack of
// rows over their last axis wherever that is meaningful (matmul, softmax,
// layer_norm, bias add).

/// a[..., k] x b[k, m] -> [..., m]
Tensor matmul(const Tensor &a, const Tensor &b);

/// Elementwise sum. `b` may also match the trailing dimensions of `a`, in
/// which case it is broadcast over the leading ones (bias add).
Tensor add(const Tensor &a, const Tensor &b);

/// Elementwise product of equal shapes.
Tensor mul(const Tensor &a, const Tensor &b);

Tensor scale(const Tensor &a, double factor);

/// Same values under a new shape of equal size.
Tensor reshape(const Tensor &a, Shape shape);
Tensor relu(const Tensor &a);

/// Softmax over the last axis.
Tensor softmax(const Tensor &a);

/// Normalizes over the last axis: gain * (x - mean) / sqrt(var + eps) + bias.
Tensor layer_norm(const Tensor &x, const Tensor &gain, const Tensor &bias, double eps);

/// Rows of table[V, D] selected by ids -> [ids.size(), D].
Tensor embedding_lookup(const Tensor &table, std::span<const int> ids);

/// Sum of all entries -> scalar.
Tensor sum(const Tensor &a);

/// Inverted dropout. rate == 0 returns `x` itself.
Tensor dropout(const Tensor &x, double rate, SplitMix64 &rng);

/// Layout of a batched multi-head attention call. Queries are
/// [batch * query_len, model_dim] row blocks, keys/values
/// [batch * key_len, model_dim]. Keys at or past key_lengths[b] are masked,
/// as are keys after the query position when `causal` is set.
struct AttentionSpec {
    std::size_t batch = 1;
    std::size_t query_len = 1;
    std::size_t key_len = 1;
    std::size_t heads = 1;
    std::vector<std::size_t> key_lengths; // empty: all keys valid
    bool causal = false;
};

/// softmax(q k^T / sqrt(head_dim)) v per head, heads concatenated.
Tensor attention(const Tensor &q, const Tensor &k, const Tensor &v, const AttentionSpec &spec);

/// Label-smoothed cross entropy of logits[N, V] against target ids, averaged
/// over positions whose target differs from `ignore_id`. The target
/// distribution puts 1 - smoothing on the gold id and smoothing / (V - 1) on
/// every other id.
Tensor cross_entropy(const Tensor &logits, std::span<const int> targets, double smoothing, int ignore_id);

/// The smoothed target distribution used by cross_entropy.
std::vector<double> smoothed_target(std::size_t vocab, int gold, double smoothing);

/// Named primitive dispatch.
enum class Primitive { matmul, add, scale, relu, softmax, layer_norm, embedding_lookup };

struct PrimitiveArgs {
    double factor = 1.0;         // scale
    double eps = 1e-6;           // layer_norm
    std::vector<int> ids;        // embedding_lookup
};

const char *primitive_name(Primitive kind);

/// Applies `kind` to `inputs`: matmul/add take two tensors, layer_norm three
/// (x, gain, bias), embedding_lookup the table, the others one.
Tensor apply_primitive(Primitive kind, std::span<const Tensor> inputs, const PrimitiveArgs &args = {});

} // namespace arforge::numerics

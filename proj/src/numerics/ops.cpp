#include "arforge/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "arforge/numerics/kernels.hpp"

namespace arforge::numerics {

namespace {

using detail::Node;

[[noreturn]] void shape_fail(const char *op, const std::string &detail) {
    throw ShapeError(std::string(op) + ": " + detail);
}

std::size_t last_dim(const Tensor &t) { return t.shape().back(); }

// Parent i's grad buffer, or nullptr when it does not need one.
double *grad_of(Node &self, std::size_t i) {
    Node *p = self.parents[i].get();
    return p->requires_grad ? p->grad.data() : nullptr;
}

} // namespace

Tensor matmul(const Tensor &a, const Tensor &b) {
    if (b.rank() != 2 || last_dim(a) != b.dim(0))
        shape_fail("matmul", "cannot multiply " + shape_string(a.shape()) + " by " + shape_string(b.shape()));
    const std::size_t k = b.dim(0), m = b.dim(1), n = a.size() / k;
    Shape out_shape = a.shape();
    out_shape.back() = m;
    std::vector<double> out(n * m);
    kernels::gemm_nn(a.values().data(), b.values().data(), out.data(), n, k, m, false);
    return Tensor::make_result(std::move(out_shape), std::move(out), {&a, &b}, [n, k, m](Node &self) {
        const Node &pa = *self.parents[0];
        const Node &pb = *self.parents[1];
        if (double *ga = grad_of(self, 0)) kernels::gemm_nt(self.grad.data(), pb.value.data(), ga, n, m, k, true);
        if (double *gb = grad_of(self, 1)) kernels::gemm_tn(pa.value.data(), self.grad.data(), gb, n, k, m, true);
    });
}

Tensor add(const Tensor &a, const Tensor &b) {
    const auto &sa = a.shape(), &sb = b.shape();
    if (sa != sb && (sb.size() > sa.size() || !std::equal(sb.rbegin(), sb.rend(), sa.rbegin())))
        shape_fail("add", "cannot broadcast " + shape_string(sb) + " onto " + shape_string(sa));
    const std::size_t inner = b.size(), rows = a.size() / inner;
    std::vector<double> out(a.values().begin(), a.values().end());
    const auto bv = b.values();
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < inner; ++j) out[r * inner + j] += bv[j];
    return Tensor::make_result(sa, std::move(out), {&a, &b}, [rows, inner](Node &self) {
        if (double *ga = grad_of(self, 0))
            for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
        if (double *gb = grad_of(self, 1))
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < inner; ++j) gb[j] += self.grad[r * inner + j];
    });
}

Tensor mul(const Tensor &a, const Tensor &b) {
    if (a.shape() != b.shape())
        shape_fail("mul", "shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    std::vector<double> out(a.size());
    const auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    return Tensor::make_result(a.shape(), std::move(out), {&a, &b}, [](Node &self) {
        const auto &va = self.parents[0]->value;
        const auto &vb = self.parents[1]->value;
        if (double *ga = grad_of(self, 0))
            for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * vb[i];
        if (double *gb = grad_of(self, 1))
            for (std::size_t i = 0; i < self.grad.size(); ++i) gb[i] += self.grad[i] * va[i];
    });
}

Tensor scale(const Tensor &a, double factor) {
    std::vector<double> out(a.values().begin(), a.values().end());
    for (double &x : out) x *= factor;
    return Tensor::make_result(a.shape(), std::move(out), {&a}, [factor](Node &self) {
        if (double *ga = grad_of(self, 0))
            for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += factor * self.grad[i];
    });
}

Tensor reshape(const Tensor &a, Shape shape) {
    if (shape_size(shape) != a.size())
        shape_fail("reshape", "cannot view " + shape_string(a.shape()) + " as " + shape_string(shape));
    std::vector<double> out(a.values().begin(), a.values().end());
    return Tensor::make_result(std::move(shape), std::move(out), {&a}, [](Node &self) {
        if (double *ga = grad_of(self, 0))
            for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
    });
}

Tensor relu(const Tensor &a) {
    std::vector<double> out(a.values().begin(), a.values().end());
    for (double &x : out) x = x > 0.0 ? x : 0.0;
    return Tensor::make_result(a.shape(), std::move(out), {&a}, [](Node &self) {
        if (double *ga = grad_of(self, 0))
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                if (self.value[i] > 0.0) ga[i] += self.grad[i];
    });
}

Tensor softmax(const Tensor &a) {
    const std::size_t d = last_dim(a), rows = a.size() / d;
    std::vector<double> out(a.values().begin(), a.values().end());
    for (std::size_t r = 0; r < rows; ++r) kernels::softmax_row(std::span(out).subspan(r * d, d), d);
    return Tensor::make_result(a.shape(), std::move(out), {&a}, [rows, d](Node &self) {
        double *ga = grad_of(self, 0);
        if (!ga) return;
        for (std::size_t r = 0; r < rows; ++r) {
            const double *y = self.value.data() + r * d;
            const double *gy = self.grad.data() + r * d;
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += y[j] * gy[j];
            for (std::size_t j = 0; j < d; ++j) ga[r * d + j] += y[j] * (gy[j] - dot);
        }
    });
}

Tensor layer_norm(const Tensor &x, const Tensor &gain, const Tensor &bias, double eps) {
    const std::size_t d = last_dim(x);
    if (gain.size() != d || bias.size() != d)
        shape_fail("layer_norm", "gain " + shape_string(gain.shape()) + " / bias " + shape_string(bias.shape()) +
                                     " do not match last axis of " + shape_string(x.shape()));
    const std::size_t rows = x.size() / d;
    const auto xv = x.values(), gv = gain.values(), bv = bias.values();
    std::vector<double> out(x.size()), xhat(x.size()), inv_std(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double *xr = xv.data() + r * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += xr[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[r] = is;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (xr[j] - mean) * is;
            xhat[r * d + j] = h;
            out[r * d + j] = gv[j] * h + bv[j];
        }
    }
    return Tensor::make_result(
        x.shape(), std::move(out), {&x, &gain, &bias},
        [rows, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node &self) {
            const auto &gv = self.parents[1]->value;
            double *gx = grad_of(self, 0);
            double *gg = grad_of(self, 1);
            double *gb = grad_of(self, 2);
            std::vector<double> dh(d);
            for (std::size_t r = 0; r < rows; ++r) {
                const double *gy = self.grad.data() + r * d;
                const double *h = xhat.data() + r * d;
                if (gg)
                    for (std::size_t j = 0; j < d; ++j) gg[j] += gy[j] * h[j];
                if (gb)
                    for (std::size_t j = 0; j < d; ++j) gb[j] += gy[j];
                if (!gx) continue;
                double mean_dh = 0.0, mean_dh_h = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    dh[j] = gy[j] * gv[j];
                    mean_dh += dh[j];
                    mean_dh_h += dh[j] * h[j];
                }
                mean_dh /= static_cast<double>(d);
                mean_dh_h /= static_cast<double>(d);
                for (std::size_t j = 0; j < d; ++j)
                    gx[r * d + j] += inv_std[r] * (dh[j] - mean_dh - h[j] * mean_dh_h);
            }
        });
}

Tensor embedding_lookup(const Tensor &table, std::span<const int> ids) {
    if (table.rank() != 2) shape_fail("embedding_lookup", "table must be rank 2, got " + shape_string(table.shape()));
    if (ids.empty()) shape_fail("embedding_lookup", "empty id list");
    const std::size_t vocab = table.dim(0), d = table.dim(1);
    std::vector<double> out(ids.size() * d);
    const auto tv = table.values();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab)
            shape_fail("embedding_lookup", "id " + std::to_string(ids[i]) + " outside table " + shape_string(table.shape()));
        std::copy_n(tv.data() + static_cast<std::size_t>(ids[i]) * d, d, out.data() + i * d);
    }
    std::vector<int> saved(ids.begin(), ids.end());
    return Tensor::make_result({ids.size(), d}, std::move(out), {&table}, [d, saved = std::move(saved)](Node &self) {
        double *gt = grad_of(self, 0);
        if (!gt) return;
        for (std::size_t i = 0; i < saved.size(); ++i) {
            double *row = gt + static_cast<std::size_t>(saved[i]) * d;
            for (std::size_t j = 0; j < d; ++j) row[j] += self.grad[i * d + j];
        }
    });
}

Tensor sum(const Tensor &a) {
    double total = 0.0;
    for (double x : a.values()) total += x;
    return Tensor::make_result({1}, {total}, {&a}, [](Node &self) {
        if (double *ga = grad_of(self, 0)) {
            const std::size_t n = self.parents[0]->value.size();
            for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[0];
        }
    });
}

Tensor dropout(const Tensor &x, double rate, SplitMix64 &rng) {
    if (rate <= 0.0) return x;
    if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be < 1");
    const double keep = 1.0 / (1.0 - rate);
    std::vector<double> mask(x.size());
    for (double &m : mask) m = rng.uniform() >= rate ? keep : 0.0;
    std::vector<double> out(x.size());
    const auto xv = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * mask[i];
    return Tensor::make_result(x.shape(), std::move(out), {&x}, [mask = std::move(mask)](Node &self) {
        if (double *gx = grad_of(self, 0))
            for (std::size_t i = 0; i < mask.size(); ++i) gx[i] += self.grad[i] * mask[i];
    });
}

Tensor attention(const Tensor &q, const Tensor &k, const Tensor &v, const AttentionSpec &spec) {
    const std::size_t B = spec.batch, TQ = spec.query_len, TK = spec.key_len, H = spec.heads;
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.dim(1) != k.dim(1) || k.shape() != v.shape() ||
        q.dim(0) != B * TQ || k.dim(0) != B * TK || H == 0 || q.dim(1) % H != 0)
        shape_fail("attention", "incompatible q " + shape_string(q.shape()) + ", k " + shape_string(k.shape()) +
                                    ", v " + shape_string(v.shape()) + " for batch " + std::to_string(B) +
                                    " x " + std::to_string(TQ) + "/" + std::to_string(TK) + ", heads " +
                                    std::to_string(H));
    if (!spec.key_lengths.empty() && spec.key_lengths.size() != B)
        shape_fail("attention", "key_lengths has " + std::to_string(spec.key_lengths.size()) + " entries for batch " +
                                    std::to_string(B));
    const std::size_t D = q.dim(1), dh = D / H;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    const auto qv = q.values(), kv = k.values(), vv = v.values();

    std::vector<double> probs(B * H * TQ * TK);
    std::vector<double> out(B * TQ * D, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t klen = spec.key_lengths.empty() ? TK : std::min(spec.key_lengths[b], TK);
        for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t i = 0; i < TQ; ++i) {
                double *p = probs.data() + ((b * H + h) * TQ + i) * TK;
                const double *qi = qv.data() + (b * TQ + i) * D + h * dh;
                const std::size_t valid = spec.causal ? std::min(klen, i + 1) : klen;
                for (std::size_t j = 0; j < valid; ++j) {
                    const double *kj = kv.data() + (b * TK + j) * D + h * dh;
                    double s = 0.0;
                    for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
                    p[j] = s * inv_sqrt;
                }
                kernels::softmax_row(std::span(p, TK), valid);
                double *oi = out.data() + (b * TQ + i) * D + h * dh;
                for (std::size_t j = 0; j < valid; ++j) {
                    const double *vj = vv.data() + (b * TK + j) * D + h * dh;
                    for (std::size_t c = 0; c < dh; ++c) oi[c] += p[j] * vj[c];
                }
            }
        }
    }

    return Tensor::make_result(
        {B * TQ, D}, std::move(out), {&q, &k, &v},
        [B, TQ, TK, H, D, dh, inv_sqrt, spec, probs = std::move(probs)](Node &self) {
            const auto &qv = self.parents[0]->value;
            const auto &kv = self.parents[1]->value;
            const auto &vv = self.parents[2]->value;
            double *gq = grad_of(self, 0);
            double *gk = grad_of(self, 1);
            double *gv = grad_of(self, 2);
            std::vector<double> dp(TK);
            for (std::size_t b = 0; b < B; ++b) {
                const std::size_t klen = spec.key_lengths.empty() ? TK : std::min(spec.key_lengths[b], TK);
                for (std::size_t h = 0; h < H; ++h) {
                    for (std::size_t i = 0; i < TQ; ++i) {
                        const double *p = probs.data() + ((b * H + h) * TQ + i) * TK;
                        const double *go = self.grad.data() + (b * TQ + i) * D + h * dh;
                        const std::size_t valid = spec.causal ? std::min(klen, i + 1) : klen;
                        double dot = 0.0;
                        for (std::size_t j = 0; j < valid; ++j) {
                            const double *vj = vv.data() + (b * TK + j) * D + h * dh;
                            double s = 0.0;
                            for (std::size_t c = 0; c < dh; ++c) s += go[c] * vj[c];
                            dp[j] = s;
                            dot += p[j] * s;
                            if (gv) {
                                double *gvj = gv + (b * TK + j) * D + h * dh;
                                for (std::size_t c = 0; c < dh; ++c) gvj[c] += p[j] * go[c];
                            }
                        }
                        const double *qi = qv.data() + (b * TQ + i) * D + h * dh;
                        double *gqi = gq ? gq + (b * TQ + i) * D + h * dh : nullptr;
                        for (std::size_t j = 0; j < valid; ++j) {
                            const double ds = p[j] * (dp[j] - dot) * inv_sqrt;
                            const double *kj = kv.data() + (b * TK + j) * D + h * dh;
                            if (gqi)
                                for (std::size_t c = 0; c < dh; ++c) gqi[c] += ds * kj[c];
                            if (gk) {
                                double *gkj = gk + (b * TK + j) * D + h * dh;
                                for (std::size_t c = 0; c < dh; ++c) gkj[c] += ds * qi[c];
                            }
                        }
                    }
                }
            }
        });
}

std::vector<double> smoothed_target(std::size_t vocab, int gold, double smoothing) {
    std::vector<double> dist(vocab, vocab > 1 ? smoothing / static_cast<double>(vocab - 1) : 0.0);
    dist.at(static_cast<std::size_t>(gold)) = vocab > 1 ? 1.0 - smoothing : 1.0;
    return dist;
}

Tensor cross_entropy(const Tensor &logits, std::span<const int> targets, double smoothing, int ignore_id) {
    if (logits.rank() != 2 || logits.dim(0) != targets.size())
        shape_fail("cross_entropy", "logits " + shape_string(logits.shape()) + " vs " +
                                        std::to_string(targets.size()) + " targets");
    if (smoothing < 0.0 || smoothing >= 1.0) throw std::invalid_argument("cross_entropy: smoothing must be in [0, 1)");
    const std::size_t n = logits.dim(0), V = logits.dim(1);
    const double off = V > 1 ? smoothing / static_cast<double>(V - 1) : 0.0;
    const double on = V > 1 ? 1.0 - smoothing : 1.0;
    std::size_t counted = 0;
    for (int t : targets)
        if (t != ignore_id) ++counted;
    if (counted == 0) throw std::invalid_argument("cross_entropy: every target position is padding");

    const auto lv = logits.values();
    std::vector<double> probs(n * V, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (targets[i] == ignore_id) continue;
        if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= V)
            shape_fail("cross_entropy", "target id " + std::to_string(targets[i]) + " outside vocabulary of " +
                                            std::to_string(V));
        const double *row = lv.data() + i * V;
        double mx = row[0];
        for (std::size_t j = 1; j < V; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < V; ++j) z += std::exp(row[j] - mx);
        const double log_z = mx + std::log(z);
        double loss = 0.0;
        for (std::size_t j = 0; j < V; ++j) {
            const double log_p = row[j] - log_z;
            probs[i * V + j] = std::exp(log_p);
            const double q = static_cast<std::size_t>(targets[i]) == j ? on : off;
            if (q != 0.0) loss -= q * log_p;
        }
        total += loss;
    }
    const double inv = 1.0 / static_cast<double>(counted);
    std::vector<int> saved(targets.begin(), targets.end());
    return Tensor::make_result(
        {1}, {total * inv}, {&logits},
        [n, V, on, off, inv, ignore_id, probs = std::move(probs), saved = std::move(saved)](Node &self) {
            double *gl = grad_of(self, 0);
            if (!gl) return;
            const double g = self.grad[0] * inv;
            for (std::size_t i = 0; i < n; ++i) {
                if (saved[i] == ignore_id) continue;
                for (std::size_t j = 0; j < V; ++j) {
                    const double q = static_cast<std::size_t>(saved[i]) == j ? on : off;
                    gl[i * V + j] += g * (probs[i * V + j] - q);
                }
            }
        });
}

const char *primitive_name(Primitive kind) {
    switch (kind) {
    case Primitive::matmul: return "matmul";
    case Primitive::add: return "add";
    case Primitive::scale: return "scale";
    case Primitive::relu: return "relu";
    case Primitive::softmax: return "softmax";
    case Primitive::layer_norm: return "layer_norm";
    case Primitive::embedding_lookup: return "embedding_lookup";
    }
    return "unknown";
}

Tensor apply_primitive(Primitive kind, std::span<const Tensor> inputs, const PrimitiveArgs &args) {
    auto need = [&](std::size_t count) {
        if (inputs.size() != count)
            throw ShapeError(std::string(primitive_name(kind)) + ": expected " + std::to_string(count) +
                             " inputs, got " + std::to_string(inputs.size()));
    };
    switch (kind) {
    case Primitive::matmul: need(2); return matmul(inputs[0], inputs[1]);
    case Primitive::add: need(2); return add(inputs[0], inputs[1]);
    case Primitive::scale: need(1); return scale(inputs[0], args.factor);
    case Primitive::relu: need(1); return relu(inputs[0]);
    case Primitive::softmax: need(1); return softmax(inputs[0]);
    case Primitive::layer_norm: need(3); return layer_norm(inputs[0], inputs[1], inputs[2], args.eps);
    case Primitive::embedding_lookup: need(1); return embedding_lookup(inputs[0], args.ids);
    }
    throw ShapeError("unknown primitive");
}

} // namespace arforge::numerics

#include <cmath>
#include <filesystem>

#include "doctest.h"

#include "arforge/numerics/adam.hpp"
#include "arforge/numerics/checkpoint.hpp"
#include "arforge/numerics/kernels.hpp"
#include "arforge/numerics/ops.hpp"
#include "arforge/numerics/schedule.hpp"
#include "grad_suite.hpp"

using namespace arforge::numerics;

TEST_CASE("splitmix64 and fnv1a reference values") {
    SplitMix64 rng(0);
    CHECK(rng.next() == 0xE220A8397B1DCDAFULL);
    CHECK(rng.next() == 0x6E789E6AA1B965F4ULL);
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(derive_seed(7, "pretrain.s2t") == derive_seed(7, "pretrain.s2t"));
    CHECK(derive_seed(7, "pretrain.s2t") != derive_seed(7, "pretrain.t2s"));
    CHECK(derive_seed(7, "x") != derive_seed(8, "x"));
}

TEST_CASE("uniform and below stay in range") {
    SplitMix64 rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(rng.below(7) < 7);
    }
}

TEST_CASE("matmul against a hand product") {
    auto a = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
    auto b = Tensor::from_values({3, 2}, {7, 8, 9, 10, 11, 12});
    auto c = matmul(a, b);
    REQUIRE(c.shape() == Shape{2, 2});
    CHECK(c.values()[0] == 58);
    CHECK(c.values()[1] == 64);
    CHECK(c.values()[2] == 139);
    CHECK(c.values()[3] == 154);
    CHECK_THROWS_AS(matmul(a, a), ShapeError);
}

TEST_CASE("softmax rows sum to one and survive large inputs") {
    auto x = Tensor::from_values({2, 3}, {1000, 1001, 1002, -5, 0, 5});
    auto y = softmax(x);
    for (int r = 0; r < 2; ++r) {
        double total = 0;
        for (int c = 0; c < 3; ++c) total += y.values()[r * 3 + c];
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(std::isfinite(y.values()[2]));
}

TEST_CASE("layer norm output has zero mean and unit variance") {
    auto x = Tensor::from_values({1, 4}, {1, 2, 3, 10});
    auto g = Tensor::from_values({4}, {1, 1, 1, 1});
    auto b = Tensor::from_values({4}, {0, 0, 0, 0});
    auto y = layer_norm(x, g, b, 0.0);
    double mean = 0, var = 0;
    for (double v : y.values()) mean += v / 4;
    for (double v : y.values()) var += (v - mean) * (v - mean) / 4;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cross entropy matches the smoothed target by hand") {
    auto logits = Tensor::from_values({1, 3}, {0.5, -1.0, 2.0});
    const double z = std::exp(0.5) + std::exp(-1.0) + std::exp(2.0);
    const double lp[3] = {0.5 - std::log(z), -1.0 - std::log(z), 2.0 - std::log(z)};
    const std::vector<int> gold{2};
    const double expected = -(0.9 * lp[2] + 0.05 * lp[0] + 0.05 * lp[1]);
    CHECK(cross_entropy(logits, gold, 0.1, -1).item() == doctest::Approx(expected).epsilon(1e-12));
    const auto q = smoothed_target(3, 2, 0.1);
    CHECK(q[2] == doctest::Approx(0.9));
    CHECK(q[0] == doctest::Approx(0.05));
}

TEST_CASE("cross entropy ignores padded positions") {
    auto logits = Tensor::from_values({2, 3}, {0.5, -1.0, 2.0, 9, 9, 9});
    const std::vector<int> gold{2, 0};
    const std::vector<int> one{2};
    auto first = Tensor::from_values({1, 3}, {0.5, -1.0, 2.0});
    CHECK(cross_entropy(logits, gold, 0.1, 0).item() == doctest::Approx(cross_entropy(first, one, 0.1, 0).item()));
}

TEST_CASE("causal attention ignores future keys") {
    SplitMix64 rng(3);
    AttentionSpec spec;
    spec.query_len = spec.key_len = 3;
    spec.heads = 1;
    spec.causal = true;
    auto q = grad_suite::random_tensor(rng, {3, 2}, false);
    auto k = grad_suite::random_tensor(rng, {3, 2}, false);
    auto v = grad_suite::random_tensor(rng, {3, 2}, false);
    auto before = attention(q, k, v, spec);
    k.mutable_values()[5] += 3.0;
    v.mutable_values()[4] -= 2.0;
    auto after = attention(q, k, v, spec);
    for (int i = 0; i < 4; ++i) CHECK(after.values()[i] == before.values()[i]);
    // The first query sees only the first value row.
    CHECK(before.values()[0] == doctest::Approx(v.values()[0]));
}

TEST_CASE("gradients of every primitive match finite differences") {
    for (const auto &r : grad_suite::primitive_cases(11)) {
        INFO(r.name);
        CHECK(r.worst < grad_suite::kMaxRelativeError);
    }
}

TEST_CASE("gradients of the transformer loss match finite differences") {
    const auto r = grad_suite::transformer_case(4);
    CHECK(r.worst < grad_suite::kMaxRelativeError);
}

TEST_CASE("gradient check flags a wrong backward") {
    auto a = Tensor::from_values({2}, {0.3, -0.4}, true);
    // Treats x*x as if it were a constant-gradient op: backward writes 1.
    auto fake = [&] {
        auto out = Tensor::make_result({1}, {a.values()[0] * a.values()[0] + a.values()[1] * a.values()[1]}, {&a},
                                       [a](arforge::numerics::detail::Node &self) mutable {
                                           for (double &g : a.mutable_grad()) g += self.grad[0];
                                       });
        return out;
    };
    std::vector<Tensor> params{a};
    CHECK(check_gradients(fake, params) > 0.1);
}

TEST_CASE("no-grad guard records nothing") {
    auto a = Tensor::from_values({2}, {1, 2}, true);
    {
        NoGradGuard guard;
        CHECK(NoGradGuard::active());
        CHECK_FALSE(scale(a, 2).requires_grad());
    }
    CHECK_FALSE(NoGradGuard::active());
    CHECK(scale(a, 2).requires_grad());
}

TEST_CASE("adam first step moves each coordinate by lr against the gradient sign") {
    std::vector<double> p{1.0, -2.0};
    const std::vector<double> g{0.5, -3.0};
    std::vector<std::span<double>> params{p};
    std::vector<std::span<const double>> grads{g};
    auto a = Tensor::from_values({2}, {1.0, -2.0});
    std::vector<Tensor> shapes{a};
    auto state = AdamState::for_params(shapes, 0.9, 0.98, 1e-9);
    adam_step(params, grads, state, 0.01);
    CHECK(p[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-7));
    CHECK(p[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-7));
    CHECK(state.step == 1);
}

TEST_CASE("warmup schedule peaks at the warmup step") {
    LrSchedule s{64, 100};
    CHECK(learning_rate(s, 100) == doctest::Approx(std::pow(64.0, -0.5) * 0.1));
    CHECK(learning_rate(s, 50) < learning_rate(s, 100));
    CHECK(learning_rate(s, 400) < learning_rate(s, 100));
    CHECK(learning_rate(s, 50) == doctest::Approx(0.125 * 50 * std::pow(100.0, -1.5)));
    CHECK_THROWS(learning_rate(s, 0));
}

TEST_CASE("checkpoint round trip is exact") {
    const auto dir = std::filesystem::temp_directory_path() / "arforge_ckpt_test";
    std::filesystem::create_directories(dir);
    std::vector<NamedTensor> tensors{{"a.w", Tensor::from_values({2, 2}, {1.0 / 3, -0.0, 1e300, 5e-324})},
                                     {"b", Tensor::from_values({3}, {1, 2, 3})}};
    save_checkpoint(dir / "m", tensors);
    const auto back = load_checkpoint(dir / "m");
    REQUIRE(back.size() == 2);
    CHECK(back[0].name == "a.w");
    CHECK(back[0].tensor.shape() == Shape{2, 2});
    for (std::size_t i = 0; i < 4; ++i) CHECK(back[0].tensor.values()[i] == tensors[0].tensor.values()[i]);
    CHECK(back[1].tensor.values()[2] == 3.0);
    std::filesystem::remove_all(dir);
}

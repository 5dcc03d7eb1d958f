#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace arforge::numerics {

/// 64-bit FNV-1a. Used for content hashes and for naming sub-seeds.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// SplitMix64 generator.
///
/// The stream is fully defined by the 64-bit state, so any implementation can
/// reproduce it bit for bit: state += 0x9E3779B97F4A7C15, then the standard
/// xor-shift-multiply finalizer. `split()` forks an independent stream seeded
/// from the next output.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next();

    /// Uniform double in [0, 1) built from the top 53 bits.
    double uniform();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n) via 128-bit multiply-shift. n must be > 0.
    std::size_t below(std::size_t n);

    SplitMix64 split() { return SplitMix64(next()); }

    std::uint64_t state() const { return state_; }

  private:
    std::uint64_t state_;
};

/// Stage sub-seed: splitmix64 finalizer applied to (master ^ fnv1a64(name)).
/// Adding a new named stage never perturbs the seeds of existing ones.
std::uint64_t derive_seed(std::uint64_t master, std::string_view name);

/// Fisher-Yates shuffle driven by `rng`.
template <typename RandomIt>
void shuffle(RandomIt first, RandomIt last, SplitMix64 &rng) {
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.below(i);
        using std::swap;
        swap(first[i - 1], first[j]);
    }
}

} // namespace arforge::numerics

#include "arforge/numerics/rng.hpp"

namespace arforge::numerics {

namespace {

std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t SplitMix64::next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
}

double SplitMix64::uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::size_t SplitMix64::below(std::size_t n) {
    const unsigned __int128 product = static_cast<unsigned __int128>(next()) * n;
    return static_cast<std::size_t>(product >> 64);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view name) {
    return mix(master ^ fnv1a64(name));
}

} // namespace arforge::numerics

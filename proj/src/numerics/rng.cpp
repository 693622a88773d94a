#include "polyglot/numerics/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace polyglot {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : key_(mix64(seed ^ mix64(stream + kGolden))) {}

Rng Rng::fork(std::uint64_t stream) const { return Rng(key_, stream + 1); }

std::uint64_t Rng::next_u64() {
    const std::uint64_t x = key_ + kGolden * (++counter_);
    return mix64(mix64(x) ^ key_);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) {
        throw std::invalid_argument("Rng::uniform_int: empty range");
    }
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) {
        return static_cast<std::int64_t>(next_u64());
    }
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v = next_u64();
    while (v >= limit) {
        v = next_u64();
    }
    return lo + static_cast<std::int64_t>(v % span);
}

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

}  // namespace polyglot

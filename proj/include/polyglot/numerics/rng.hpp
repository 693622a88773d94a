#pragma once

#include <cstdint>
#include <vector>

namespace polyglot {

/// Counter-based 64-bit generator: output i is a bijective mix of (key, i), so
/// the full state is (key, counter) and any stream can be reconstructed.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    /// Independent generator for a named sub-stream of the same seed.
    [[nodiscard]] Rng fork(std::uint64_t stream) const;

    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double uniform();
    /// Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    /// Standard normal via Box-Muller (one draw per call).
    double normal();
    bool bernoulli(double p);

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i - 1)));
            std::swap(items[i - 1], items[j]);
        }
    }

    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
    [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }
    void set_counter(std::uint64_t c) noexcept { counter_ = c; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace polyglot

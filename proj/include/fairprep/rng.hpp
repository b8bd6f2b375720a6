#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace fairprep {

// Seeded pseudo-random stream.
//
// Engine: std::mt19937_64 (the standard fixes its output sequence), seeded
// through SplitMix64 so that nearby seeds give unrelated streams. All
// derived quantities are computed here rather than through <random>
// distributions, whose algorithms are implementation-defined:
//   uniform()     53 high bits of one draw, in [0, 1)
//   normal()      Box-Muller, one draw pair per call (no caching)
//   below(n)      Lemire-free rejection on the top bits, unbiased
//   shuffle()     Fisher-Yates from the back
//
// Independent streams are obtained with split(tag): the child seed is
// SplitMix64(seed ^ SplitMix64(tag)), so split() never touches the
// parent's state and results do not depend on call order.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    bool bernoulli(double p) { return uniform() < p; }
    std::uint64_t below(std::uint64_t n);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    Rng split(std::uint64_t tag) const;
    Rng split(std::string_view tag) const;

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// FNV-1a; used for string stream tags and config digests.
std::uint64_t fnv1a(std::string_view text);

}  // namespace fairprep

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <utility>
#include <vector>

namespace rumcg {

// Deterministic random source. The engine (mt19937_64) is fully specified by
// the standard; the distribution mappings below are hand-rolled because the
// standard library's distribution objects are not portable across
// implementations. Every stochastic component takes one of these by
// reference, and independent streams are derived from (seed, path) so results
// are reproducible regardless of evaluation order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform integer in [0, bound), bound >= 1. Rejection sampling on the
    // widened product keeps the distribution exactly uniform.
    std::uint64_t below(std::uint64_t bound) {
        __uint128_t m = static_cast<__uint128_t>(next_u64()) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            std::uint64_t floor = (-bound) % bound;
            while (lo < floor) {
                m = static_cast<__uint128_t>(next_u64()) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    int below_int(int bound) { return static_cast<int>(below(static_cast<std::uint64_t>(bound))); }

    // Uniform double in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform double in [lo, hi).
    double range(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // Mixes a base seed with a path of stream tags (splitmix64 finalizer per
    // step) so sub-streams are decorrelated and order-independent.
    static std::uint64_t derive(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
        std::uint64_t x = base;
        for (std::uint64_t tag : path) {
            x += 0x9e3779b97f4a7c15ULL + tag;
            x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
            x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
            x ^= x >> 31;
        }
        return x;
    }

private:
    std::mt19937_64 eng_;
};

// Fisher-Yates shuffle driven by Rng::below for portability.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = rng.below(i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace rumcg

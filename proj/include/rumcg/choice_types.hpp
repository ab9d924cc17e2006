#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rumcg/patches.hpp"
#include "rumcg/rng.hpp"

namespace rumcg {

// A choice type: one patch picked per period. Its indicator vector (length
// dim(), exactly one 1 per period block) is a column of the projection
// problem.
struct ChoiceType {
    std::vector<std::int32_t> picks;  // picks[t] in [0, I_t)

    bool operator==(const ChoiceType& o) const { return picks == o.picks; }
    auto operator<=>(const ChoiceType& o) const { return picks <=> o.picks; }
};

std::vector<double> as_indicator(const ChoiceType& type, const PatchStructure& ps);

// Strict revealed-price-preference digraph of a type: edge j -> t means the
// type's period-t patch makes period j's prices revealed preferred to period
// t's. adj[j][t] = 1 for that edge.
struct PreferenceDigraph {
    std::vector<std::vector<std::uint8_t>> adj;  // T x T
};

PreferenceDigraph induced_relations(const ChoiceType& type, const PatchStructure& ps);

// A type is rational iff its preference digraph is acyclic (depth-first
// cycle detection).
bool is_rational(const ChoiceType& type, const PatchStructure& ps);

// All rational types in odometer order (period-T pick varies fastest).
// Throws TooLarge when the full product of patch counts exceeds `limit`
// (checked before any enumeration work).
std::vector<ChoiceType> enumerate_rational_types(const PatchStructure& ps, std::uint64_t limit);

// Unsigned big integer, sufficient for products of patch counts (the total
// type count overflows 64 bits well inside desk scale).
class BigUint {
public:
    BigUint() : limbs_{0} {}
    explicit BigUint(std::uint64_t v);
    void mul_small(std::uint64_t v);
    std::string to_string() const;
    double to_double() const;

private:
    std::vector<std::uint32_t> limbs_;  // base 1e9, little-endian
};

// Total type count (exact) and the estimated rational fraction from
// `samples` uniform draws.
struct TypeCountEstimate {
    BigUint total;
    double rational_fraction = 0.0;
    std::uint64_t samples = 0;
    std::uint64_t rational_hits = 0;
};

TypeCountEstimate estimate_type_counts(const PatchStructure& ps, std::uint64_t samples, Rng& rng);

// Semi-random generation of distinct rational types: draw a uniform type,
// then repair it while cycles remain. Each repair round finds the strongly
// connected components of the current digraph; in every nontrivial component
// one random period is re-picked to the patch minimizing a disruption score.
struct SampleConfig {
    int max_repair_rounds = 200;    // rounds before abandoning a draw
    int max_draws = 100000;         // fresh draws before giving up (Exhausted)
    bool prose_weights = false;     // swap the add/remove scoring weights
};

std::vector<ChoiceType> sample_rational_types(const PatchStructure& ps, int count, Rng& rng,
                                              const SampleConfig& cfg = {});

}  // namespace rumcg

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rumcg/choice_types.hpp"
#include "rumcg/patches.hpp"
#include "rumcg/rng.hpp"

namespace rumcg {

// The pricing problem: over all rational choice types r, maximize the
// reduced value s . a_r (one addend per period). Columns beat the acceptance
// threshold when s . a_r >= threshold + eps_cg.

// Value of the best type whose picks respect a fixed preference order:
// order[k] lists periods from least to most preferred, and the period at
// position k must pick a patch that reveals preference for every later
// period in the order. Periods with no such patch contribute a dummy worth
// -(1 + sum |s|); used_dummy marks that case. picks[t] = -1 where the dummy
// stood in.
struct OrderValue {
    double value = 0.0;
    std::vector<std::int32_t> picks;
    bool used_dummy = false;
};

OrderValue order_value(const std::vector<int>& order, const std::vector<double>& s,
                       const PatchStructure& ps);

// Randomized best-insertion: each restart inserts periods in random order,
// placing each at the position maximizing the partial order value. Emitted
// candidates are the restart results that used no dummy AND are rational
// (the insertion constraints alone do not force acyclicity), deduplicated
// and sorted by value descending. May be empty.
struct PricingCandidate {
    ChoiceType type;
    double value = 0.0;
};

std::vector<PricingCandidate> best_insertion(const std::vector<double>& s,
                                             const PatchStructure& ps, Rng& rng, int restarts);

// Exact pricing. Two interchangeable strategies compute the same maximum:
//
// SubsetDp — a complete assignment is rational iff some ordering of the
// periods places every period after all periods its patch reveals preference
// for, so the optimum satisfies f(S) = max_{t in S} f(S \ t) + g_t(S \ t),
// where f(S) is the best value with the periods of S placed first and
// g_t(C) = max{ s value of patch i : induced set of (t, i) inside C }.
// O(T^2 2^T) time via subset-max tables; the method of choice up to T = 17.
//
// BranchAndBound — best-first search. Nodes carry a partial assignment plus
// the transitive closure of the induced digraph; a patch is feasible for an
// unfixed period iff adding its relations creates no cycle, and the node
// bound adds each unfixed period's best feasible value (admissible). Pruning
// is against the incumbent only. Frontier memory can grow exponentially on
// loose bounds, which is why Auto prefers the tables whenever they fit.
//
// On natural return the value is the true maximum (proven_optimal); a time
// limit may cut either method short, returning a greedy-dive incumbent with
// proven_optimal = false. nodes_expanded counts search nodes or visited
// subset states, by method.
enum class ExactMethod { Auto, SubsetDp, BranchAndBound };

struct ExactPricingResult {
    ChoiceType best;
    double value = 0.0;
    bool proven_optimal = false;
    std::uint64_t nodes_expanded = 0;
};

ExactPricingResult exact_pricing(const std::vector<double>& s, const PatchStructure& ps,
                                 std::optional<double> time_limit_seconds = std::nullopt,
                                 ExactMethod method = ExactMethod::Auto);

// One pricing round as the projection loop uses it: try the heuristic first
// (when enabled); fall back to exact search when no candidate clears the
// threshold. `column` is set iff a type clears threshold + eps_cg.
struct PricingConfig {
    bool use_heuristic = true;
    int heuristic_restarts = 10;
    double eps_cg = 1e-9;
    std::optional<double> time_limit_seconds;
};

struct PricingOutcome {
    std::optional<ChoiceType> column;
    double column_value = 0.0;
    bool heuristic_hit = false;          // column came from the heuristic
    bool exact_ran = false;
    std::optional<double> exact_value;   // z* when the exact search ran
    bool proven_optimal = false;         // exact search finished
    std::uint64_t nodes_expanded = 0;
};

PricingOutcome price(const std::vector<double>& s, const PatchStructure& ps, double threshold,
                     const PricingConfig& cfg, Rng& rng);

}  // namespace rumcg

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rumcg/dataset.hpp"

namespace rumcg {

// One cell of the expenditure partition for a period t: the set of bundles q
// (on the budget plane of period t) sharing the sign of (p_j - p_t) . q for
// every other period j. signs[j] = +1 means period j's prices make q strictly
// more expensive (no revealed preference for p_j), -1 means strictly cheaper
// (p_j revealed preferred to p_t); signs[t] = 0 by convention.
struct Patch {
    std::vector<std::int8_t> signs;  // length T
    std::vector<double> witness;     // bundle on the unit simplex realizing the margin
    double margin = 0.0;             // maximized normalized margin (+inf when T = 1)
};

// The full partition for all periods, plus flat indexing used by the
// projection problem: coordinate (t, i) lives at offsets[t] + i and the total
// dimension is offsets[T].
class PatchStructure {
public:
    int num_periods = 0;  // T
    int num_goods = 0;    // L
    double margin_floor = 0.0;  // the enumeration margin delta
    std::vector<std::vector<double>> prices;   // copied from the dataset
    std::vector<std::vector<Patch>> periods;   // periods[t][i]
    std::vector<int> offsets;                  // length T + 1
    // Sign vectors dropped during enumeration because their maximized margin
    // fell in (0, delta); recorded so callers can see near-degenerate cells.
    std::vector<std::string> warnings;

    int patch_count(int t) const { return static_cast<int>(periods[t].size()); }
    int dim() const { return offsets[num_periods]; }
    int flat(int t, int i) const { return offsets[t] + i; }

    // X[t][i][j]: patch (t, i) makes period j's prices revealed preferred to
    // period t's (strictly cheaper there).
    bool induces(int t, int i, int j) const { return periods[t][i].signs[j] == -1; }

    // Patch lookup by sign vector (signs[t] ignored). Throws UnknownPatch.
    int find(int t, const std::vector<std::int8_t>& signs) const;

    void build_index();  // fills offsets and the lookup maps

private:
    std::vector<std::map<std::vector<std::int8_t>, int>> lookup_;
};

// Enumerates every patch of every period by depth-first search over sign
// prefixes, pruning prefixes whose maximized margin falls below delta.
// Patches appear in lexicographic sign order with +1 before -1. Throws
// DegenerateBudgets when two periods have proportional prices and
// InfeasibleMargin when a period ends up with no patch at margin delta.
PatchStructure enumerate_patches(const std::vector<std::vector<double>>& prices, double delta);

// Classifies a bundle purchased in period t. tie_tol is relative to the
// period's own expenditure p_t . q. Throws OnBoundary on a tie (unless
// perturb_ties, which resolves boundary coordinates toward "no preference",
// i.e. sign +1) and UnknownPatch when the sign vector was not enumerated.
int patch_of_bundle(const PatchStructure& ps, int t, const std::vector<double>& bundle,
                    double tie_tol, bool perturb_ties);

// Empirical patch frequencies: the estimated probability mass on each
// (period, patch) coordinate, plus the underlying counts.
struct Frequencies {
    std::vector<double> pi;                    // length dim()
    std::vector<std::vector<long long>> counts;  // counts[t][i]
    std::vector<long long> per_period;         // N_t
    long long total = 0;                       // N
};

Frequencies empirical_frequencies(const PatchStructure& ps, const Dataset& data,
                                  double tie_tol, bool perturb_ties);

}  // namespace rumcg

#pragma once

#include <map>
#include <vector>

#include "rumcg/choice_types.hpp"
#include "rumcg/patches.hpp"

namespace rumcg {

// Solution of the restricted projection problem
//
//   min_{p >= 0}  N * || target - A p ||^2
//
// over the current column pool, where column r is the 0/1 indicator of a
// choice type (exactly one 1 per period block).
struct MasterSolution {
    std::vector<double> weights;     // per pool column, >= 0
    std::vector<double> projection;  // v = A p, length dim()
    std::vector<double> residual;    // s = target - v
    double objective = 0.0;          // N * ||s||^2
    std::vector<int> support;        // columns with positive weight, ascending
};

// Growing set of choice-type columns shared across master solves. Columns are
// deduplicated on insert; the pool also carries the warm-start support and
// the zero-weight streak counters used by the optional purge.
class ColumnPool {
public:
    explicit ColumnPool(const PatchStructure& ps) : ps_(&ps) {}

    // Returns the column index; `added` reports whether it was new.
    int add(const ChoiceType& type, bool* added = nullptr);
    bool contains(const ChoiceType& type) const { return index_.count(type.picks) > 0; }
    int size() const { return static_cast<int>(types_.size()); }
    const ChoiceType& type(int r) const { return types_[r]; }
    const PatchStructure& patches() const { return *ps_; }

    // Update zero-weight streaks from a solved master.
    void note_solution(const MasterSolution& sol);
    // Drop columns whose weight has been zero in the last `streak_limit`
    // consecutive solves (support columns always survive). Remaps
    // warm_support in place; returns the number of columns removed.
    int purge(int streak_limit);

    std::vector<int> warm_support;  // carried between solves and replications

private:
    const PatchStructure* ps_;
    std::vector<ChoiceType> types_;
    std::map<std::vector<std::int32_t>, int> index_;
    std::vector<int> zero_streak_;
};

// Lawson-Hanson active-set NNLS on the pool's columns. The normal equations
// are assembled blockwise: Gram entries count agreeing periods between two
// types (small integers), right-hand sides sum target coordinates along a
// type's picks. Warm-started from pool.warm_support. Throws NumericalFailure
// when the restricted normal equations go singular (linearly dependent
// columns — the pool deduplicates, so this signals caller misuse) or when the
// iteration safety caps trip.
MasterSolution solve_restricted(const ColumnPool& pool, const std::vector<double>& target,
                                double scale_n, double kkt_tol = 1e-9);

// Same problem after tightening: every type in `subset` receives a uniform
// floor tau/|subset| on its weight. Solved by shifting the target by the
// floor mass and restoring it afterwards; eta is the tightened estimator
// A p* + shift. negative_target flags shifted coordinates below zero (legal).
struct ShiftedSolution {
    MasterSolution master;       // solution of the shifted problem
    std::vector<double> shift;   // length dim()
    std::vector<double> eta;     // master.projection + shift
    bool negative_target = false;
};

ShiftedSolution solve_restricted_shifted(const ColumnPool& pool, const std::vector<double>& target,
                                         double tau, const std::vector<ChoiceType>& subset,
                                         double scale_n, double kkt_tol = 1e-9);

}  // namespace rumcg

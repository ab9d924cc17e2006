#pragma once

#include <vector>

namespace rumcg {

// Small dense linear programs in standard form:
//
//   minimize    c . x
//   subject to  A x = b,  x >= 0
//
// solved by two-phase primal simplex on the full tableau with Bland's rule
// throughout, which rules out cycling on the highly degenerate problems the
// patch enumerator produces (many right-hand sides are exactly zero). Problem
// sizes here are tiny (tens of rows/columns), so robustness beats speed.
//
// Rows may be given with any sign; the solver normalizes b >= 0 internally
// and uses one artificial variable per row.

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    double objective = 0.0;        // c . x at the optimum (Optimal only)
    std::vector<double> x;         // primal solution (Optimal only)
};

class SimplexLp {
public:
    // rows: m x n constraint matrix, rhs: length m, cost: length n.
    LpResult solve(const std::vector<std::vector<double>>& rows,
                   const std::vector<double>& rhs,
                   const std::vector<double>& cost) const;

    // Pivot magnitudes below this are treated as zero.
    double pivot_tol = 1e-11;
    // Phase-1 objective above this value means infeasible.
    double feas_tol = 1e-9;
    // Safety cap on total pivots (Bland guarantees finite termination; this
    // guards against numerical stalls).
    int max_pivots = 100000;
};

// Convenience wrapper for the margin problem used throughout patch
// enumeration:
//
//   maximize    m
//   subject to  d_j . q >= m        for every row d_j
//               sum_l q_l = 1,  q >= 0,  m free
//
// Returns Optimal with the maximized margin and the witness bundle q, or
// Unbounded with margin = +infinity when there are no rows (the margin is
// unconstrained); never Infeasible because the simplex itself is nonempty.
struct MarginResult {
    double margin = 0.0;
    std::vector<double> witness;   // length L, on the unit simplex
};

MarginResult max_margin(const std::vector<std::vector<double>>& dirs, int num_goods);

}  // namespace rumcg

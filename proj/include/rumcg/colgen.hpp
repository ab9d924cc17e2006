#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rumcg/master_qp.hpp"
#include "rumcg/pricing.hpp"

namespace rumcg {

// Column generation for the projection problem min_{p>=0} N ||target - A p||^2
// over all rational choice types: alternate restricted master solves with
// pricing until no type's reduced value s . a_r clears s . v + eps_cg, at
// which point the restricted optimum is certified global.

// One line of the optional per-iteration trace.
struct IterationTrace {
    int iteration = 0;
    double objective = 0.0;       // restricted master J
    double threshold = 0.0;       // s . v
    bool column_added = false;
    bool heuristic_hit = false;
    bool exact_ran = false;
    std::optional<double> exact_value;
    std::optional<double> lower_bound_value;
    std::optional<double> upper_bound_value;
    const char* event = "";       // "column" | "converged" | "exceeds_ref" | "below_ref" | "limit"
};

struct ColgenConfig {
    double eps_cg = 1e-9;        // strict improvement margin for accepting columns
    double kkt_tol = 1e-9;       // master optimality tolerance
    double zero_snap = 1e-12;    // objectives below this report as exactly 0
    int max_iterations = 0;      // 0 = automatic (10 * dim + 100)
    bool use_heuristic = true;
    int heuristic_restarts = 10;
    bool use_upper_bound = false;   // consulted by bounded_project only
    bool use_lower_bound = false;
    std::optional<double> time_limit_seconds;
    std::function<void(const IterationTrace&)> trace;
};

struct ProjectionResult {
    double objective = 0.0;          // certified J (snapped)
    std::vector<double> projection;  // v at termination
    MasterSolution master;           // final restricted solution
    int iterations = 0;              // master solves
    int exact_pricing_calls = 0;
    int heuristic_hits = 0;
    std::uint64_t bnb_nodes = 0;
    int columns_added = 0;
    double certificate_gap = 0.0;    // last exact z* - threshold (<= eps_cg when converged)
    bool converged = false;          // exact pricing proved optimality
    bool timed_out = false;
};

// Runs the loop to convergence (or an iteration/time limit). The pool is
// shared, mutated state: columns accumulate and the warm-start support is
// carried inside it.
ProjectionResult project(const std::vector<double>& target, double scale_n, ColumnPool& pool,
                         const ColgenConfig& cfg, Rng& rng);

// Projection with early classification against a reference value J_ref:
//   Exact      — ran to convergence; value is the certified J
//   BelowRef   — a restricted objective (valid upper bound) fell below J_ref
//   ExceedsRef — a certified lower bound rose above J_ref
// The bound checks use a strict margin so each verdict implies the strict
// inequality it reports. With both bound flags off this equals project().
struct BoundedOutcome {
    enum class Kind { Exact, BelowRef, ExceedsRef, Unresolved };
    Kind kind = Kind::Unresolved;    // Unresolved only on iteration/time limit
    double value = 0.0;              // J, upper bound, or lower bound by kind
    ProjectionResult detail;
};

BoundedOutcome bounded_project(const std::vector<double>& target, double scale_n, double j_ref,
                               ColumnPool& pool, const ColgenConfig& cfg, Rng& rng);

// Closed-form distance bound from a residual s and a proven pricing optimum
// z*: the projection of `target` onto the half-space {c : s . c <= z*} gives
// N * max(0, s . target - z*)^2 / ||s||^2. Throws ContractViolation when the
// pricing value is not proven optimal. Valid against the cone only when
// z* <= 0; see cone_lower_bound for the variant the algorithm trusts.
double lower_bound(const std::vector<double>& residual, const std::vector<double>& target,
                   double z_exact, bool proven_optimal, double scale_n);

// Sound cone bound: every column has exactly one 1 per period block, so
// tilting the residual by max(z*, 0)/T per coordinate puts the whole cone on
// one side of a half-space through the origin:
//   s~ = s - (max(z*,0)/T) * ones,   LB = N * max(0, s~ . target)^2 / ||s~||^2.
// Coincides with lower_bound at z* = 0, the certifying case.
double cone_lower_bound(const std::vector<double>& residual, const std::vector<double>& target,
                        double z_exact, int num_periods, double scale_n);

// The restricted master objective is always a valid upper bound on J.
double upper_bound(const MasterSolution& sol);

}  // namespace rumcg

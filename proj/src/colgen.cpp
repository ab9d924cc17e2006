#include "rumcg/colgen.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "rumcg/errors.hpp"

namespace rumcg {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double v = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) v += a[i] * b[i];
    return v;
}

// Strict margin for comparisons against the reference value, so BelowRef and
// ExceedsRef imply the strict inequalities the caller will report.
double ref_margin(double j_ref) {
    return 1e-12 + 1e-9 * (std::isfinite(j_ref) ? j_ref : 0.0);
}

struct LoopState {
    BoundedOutcome out;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

// The shared generation loop; j_ref is +inf-free NaN-free only for bounded
// runs (project passes quiet defaults with both bound flags off).
BoundedOutcome run_loop(const std::vector<double>& target, double scale_n, double j_ref,
                        ColumnPool& pool, const ColgenConfig& cfg, Rng& rng) {
    const PatchStructure& ps = pool.patches();
    LoopState st;
    ProjectionResult& pr = st.out.detail;

    const int max_iter =
        cfg.max_iterations > 0 ? cfg.max_iterations : 10 * ps.dim() + 100;
    auto elapsed = [&]() {
        const std::chrono::duration<double> el = std::chrono::steady_clock::now() - st.start;
        return el.count();
    };

    for (int iter = 1; iter <= max_iter; ++iter) {
        MasterSolution sol = solve_restricted(pool, target, scale_n, cfg.kkt_tol);
        pool.note_solution(sol);
        pool.warm_support = sol.support;
        pr.iterations = iter;

        double j_restricted = sol.objective;
        if (j_restricted < cfg.zero_snap) j_restricted = 0.0;

        IterationTrace tr;
        tr.iteration = iter;
        tr.objective = j_restricted;
        tr.threshold = dot(sol.residual, sol.projection);

        if (cfg.use_upper_bound) {
            tr.upper_bound_value = j_restricted;
            if (j_restricted < j_ref - ref_margin(j_ref)) {
                pr.master = std::move(sol);
                pr.projection = pr.master.projection;
                pr.objective = j_restricted;
                st.out.kind = BoundedOutcome::Kind::BelowRef;
                st.out.value = j_restricted;
                tr.event = "below_ref";
                if (cfg.trace) cfg.trace(tr);
                return std::move(st.out);
            }
        }

        std::optional<double> remaining;
        if (cfg.time_limit_seconds) {
            remaining = *cfg.time_limit_seconds - elapsed();
            if (*remaining <= 0.0) {
                pr.master = std::move(sol);
                pr.projection = pr.master.projection;
                pr.objective = j_restricted;
                pr.timed_out = true;
                tr.event = "limit";
                if (cfg.trace) cfg.trace(tr);
                return std::move(st.out);
            }
        }

        PricingConfig pc;
        pc.use_heuristic = cfg.use_heuristic;
        pc.heuristic_restarts = cfg.heuristic_restarts;
        pc.eps_cg = cfg.eps_cg;
        pc.time_limit_seconds = remaining;
        PricingOutcome po = price(sol.residual, ps, tr.threshold, pc, rng);

        if (po.heuristic_hit) ++pr.heuristic_hits;
        if (po.exact_ran) {
            ++pr.exact_pricing_calls;
            pr.bnb_nodes += po.nodes_expanded;
            tr.exact_ran = true;
            tr.exact_value = po.exact_value;
        }
        tr.heuristic_hit = po.heuristic_hit;

        if (po.exact_ran && po.proven_optimal) {
            pr.certificate_gap = *po.exact_value - tr.threshold;
            if (cfg.use_lower_bound) {
                const double lb = cone_lower_bound(sol.residual, target, *po.exact_value,
                                                   ps.num_periods, scale_n);
                tr.lower_bound_value = lb;
                if (lb > j_ref + ref_margin(j_ref)) {
                    pr.master = std::move(sol);
                    pr.projection = pr.master.projection;
                    pr.objective = j_restricted;
                    st.out.kind = BoundedOutcome::Kind::ExceedsRef;
                    st.out.value = lb;
                    tr.event = "exceeds_ref";
                    if (cfg.trace) cfg.trace(tr);
                    return std::move(st.out);
                }
            }
        }

        if (po.column) {
            bool added = false;
            pool.add(*po.column, &added);
            if (added) ++pr.columns_added;
            tr.column_added = added;
            tr.event = "column";
            if (cfg.trace) cfg.trace(tr);
            if (!added) {
                // The accepted column is already present: the master should
                // have priced it at zero. Numerical stalemate; stop honestly.
                pr.master = std::move(sol);
                pr.projection = pr.master.projection;
                pr.objective = j_restricted;
                return std::move(st.out);
            }
            continue;
        }

        pr.master = std::move(sol);
        pr.projection = pr.master.projection;
        pr.objective = j_restricted;
        if (po.exact_ran && po.proven_optimal) {
            pr.converged = true;
            st.out.kind = BoundedOutcome::Kind::Exact;
            st.out.value = j_restricted;
            tr.event = "converged";
        } else {
            pr.timed_out = true;  // exact search cut short by the clock
            tr.event = "limit";
        }
        if (cfg.trace) cfg.trace(tr);
        return std::move(st.out);
    }

    // Iteration limit: report the last restricted solution, unresolved.
    MasterSolution sol = solve_restricted(pool, target, scale_n, cfg.kkt_tol);
    pool.note_solution(sol);
    pool.warm_support = sol.support;
    ++pr.iterations;
    pr.master = std::move(sol);
    pr.projection = pr.master.projection;
    pr.objective = pr.master.objective < cfg.zero_snap ? 0.0 : pr.master.objective;
    return std::move(st.out);
}

}  // namespace

ProjectionResult project(const std::vector<double>& target, double scale_n, ColumnPool& pool,
                         const ColgenConfig& cfg, Rng& rng) {
    ColgenConfig plain = cfg;
    plain.use_upper_bound = false;
    plain.use_lower_bound = false;
    BoundedOutcome out =
        run_loop(target, scale_n, std::numeric_limits<double>::infinity(), pool, plain, rng);
    return std::move(out.detail);
}

BoundedOutcome bounded_project(const std::vector<double>& target, double scale_n, double j_ref,
                               ColumnPool& pool, const ColgenConfig& cfg, Rng& rng) {
    return run_loop(target, scale_n, j_ref, pool, cfg, rng);
}

double lower_bound(const std::vector<double>& residual, const std::vector<double>& target,
                   double z_exact, bool proven_optimal, double scale_n) {
    if (!proven_optimal)
        throw ContractViolation("lower bound requires a proven-optimal pricing value");
    const double ss = dot(residual, residual);
    if (ss <= 1e-30) return 0.0;
    const double excess = dot(residual, target) - z_exact;
    if (excess <= 0.0) return 0.0;
    return scale_n * excess * excess / ss;
}

double cone_lower_bound(const std::vector<double>& residual, const std::vector<double>& target,
                        double z_exact, int num_periods, double scale_n) {
    const double tilt = std::max(z_exact, 0.0) / static_cast<double>(num_periods);
    double ss = 0.0, st = 0.0;
    for (std::size_t d = 0; d < residual.size(); ++d) {
        const double v = residual[d] - tilt;
        ss += v * v;
        st += v * target[d];
    }
    if (ss <= 1e-30 || st <= 0.0) return 0.0;
    return scale_n * st * st / ss;
}

double upper_bound(const MasterSolution& sol) { return sol.objective; }

}  // namespace rumcg

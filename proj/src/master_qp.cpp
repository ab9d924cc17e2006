#include "rumcg/master_qp.hpp"

#include <algorithm>
#include <cmath>

#include "rumcg/errors.hpp"

namespace rumcg {

int ColumnPool::add(const ChoiceType& type, bool* added) {
    auto it = index_.find(type.picks);
    if (it != index_.end()) {
        if (added) *added = false;
        return it->second;
    }
    const int T = ps_->num_periods;
    if (static_cast<int>(type.picks.size()) != T)
        throw ContractViolation("choice type has wrong period count");
    for (int t = 0; t < T; ++t)
        if (type.picks[t] < 0 || type.picks[t] >= ps_->patch_count(t))
            throw ContractViolation("choice type pick out of range");
    const int idx = size();
    types_.push_back(type);
    index_.emplace(type.picks, idx);
    zero_streak_.push_back(0);
    if (added) *added = true;
    return idx;
}

void ColumnPool::note_solution(const MasterSolution& sol) {
    for (int r = 0; r < size(); ++r) {
        if (r < static_cast<int>(sol.weights.size()) && sol.weights[r] > 0.0)
            zero_streak_[r] = 0;
        else
            ++zero_streak_[r];
    }
}

int ColumnPool::purge(int streak_limit) {
    if (streak_limit <= 0) return 0;
    std::vector<bool> in_support(size(), false);
    for (int r : warm_support)
        if (r >= 0 && r < size()) in_support[r] = true;
    std::vector<int> remap(size(), -1);
    int kept = 0;
    for (int r = 0; r < size(); ++r)
        if (in_support[r] || zero_streak_[r] < streak_limit) remap[r] = kept++;
    if (kept == size()) return 0;

    std::vector<ChoiceType> new_types(kept);
    std::vector<int> new_streak(kept);
    for (int r = 0; r < size(); ++r) {
        if (remap[r] < 0) continue;
        new_types[remap[r]] = std::move(types_[r]);
        new_streak[remap[r]] = zero_streak_[r];
    }
    const int removed = size() - kept;
    types_ = std::move(new_types);
    zero_streak_ = std::move(new_streak);
    index_.clear();
    for (int r = 0; r < kept; ++r) index_.emplace(types_[r].picks, r);
    for (int& r : warm_support) r = remap[r];
    std::erase_if(warm_support, [](int r) { return r < 0; });
    return removed;
}

namespace {

// Cholesky factor of the Gram matrix restricted to the passive set, grown a
// column at a time; removal triggers a rebuild. Gram entries are the number
// of periods where two types agree, so the diagonal is exactly T.
class PassiveFactor {
public:
    PassiveFactor(const ColumnPool& pool, double t_diag) : pool_(&pool), t_diag_(t_diag) {}

    int size() const { return static_cast<int>(members_.size()); }
    const std::vector<int>& members() const { return members_; }

    void clear() {
        members_.clear();
        low_.clear();
    }

    void push(int col) {
        const int k = size();
        std::vector<double> row(k + 1, 0.0);
        for (int a = 0; a < k; ++a) row[a] = gram(col, members_[a]);
        row[k] = t_diag_;
        // Forward-substitute the new row of L, then the new diagonal.
        for (int a = 0; a < k; ++a) {
            double v = row[a];
            for (int b = 0; b < a; ++b) v -= row[b] * low_[a][b];
            row[a] = v / low_[a][a];
        }
        double d = row[k];
        for (int a = 0; a < k; ++a) d -= row[a] * row[a];
        if (!(d > 1e-12 * t_diag_))
            throw NumericalFailure("restricted normal equations are singular "
                                   "(linearly dependent columns)");
        row[k] = std::sqrt(d);
        members_.push_back(col);
        low_.push_back(std::move(row));
    }

    void remove(const std::vector<int>& cols) {
        std::vector<int> keep;
        for (int c : members_)
            if (std::find(cols.begin(), cols.end(), c) == cols.end()) keep.push_back(c);
        clear();
        for (int c : keep) push(c);
    }

    // Solve (L L^T) x = rhs for the passive columns.
    std::vector<double> solve(const std::vector<double>& rhs) const {
        const int k = size();
        std::vector<double> y(k);
        for (int a = 0; a < k; ++a) {
            double v = rhs[a];
            for (int b = 0; b < a; ++b) v -= low_[a][b] * y[b];
            y[a] = v / low_[a][a];
        }
        std::vector<double> x(k);
        for (int a = k - 1; a >= 0; --a) {
            double v = y[a];
            for (int b = a + 1; b < k; ++b) v -= low_[b][a] * x[b];
            x[a] = v / low_[a][a];
        }
        return x;
    }

private:
    double gram(int r, int c) const {
        const auto& a = pool_->type(r).picks;
        const auto& b = pool_->type(c).picks;
        int agree = 0;
        for (std::size_t t = 0; t < a.size(); ++t)
            if (a[t] == b[t]) ++agree;
        return static_cast<double>(agree);
    }

    const ColumnPool* pool_;
    double t_diag_;
    std::vector<int> members_;
    std::vector<std::vector<double>> low_;  // lower-triangular rows
};

}  // namespace

MasterSolution solve_restricted(const ColumnPool& pool, const std::vector<double>& target,
                                double scale_n, double kkt_tol) {
    const PatchStructure& ps = pool.patches();
    const int D = ps.dim();
    const int T = ps.num_periods;
    const int k = pool.size();
    if (static_cast<int>(target.size()) != D)
        throw ContractViolation("target length does not match patch structure");

    MasterSolution sol;
    sol.weights.assign(k, 0.0);
    sol.projection.assign(D, 0.0);
    sol.residual = target;
    if (k == 0) {
        double ss = 0.0;
        for (double v : sol.residual) ss += v * v;
        sol.objective = scale_n * ss;
        return sol;
    }

    // a_r . x for a column r, evaluated blockwise along the type's picks.
    auto col_dot = [&](int r, const std::vector<double>& x) {
        const auto& picks = pool.type(r).picks;
        double v = 0.0;
        for (int t = 0; t < T; ++t) v += x[ps.flat(t, picks[t])];
        return v;
    };

    PassiveFactor factor(pool, static_cast<double>(T));
    std::vector<double> p(k, 0.0);

    // Seed the passive set from the warm start; dependent or stale indices
    // fall back to a cold start.
    {
        std::vector<int> warm;
        for (int r : pool.warm_support)
            if (r >= 0 && r < k && std::find(warm.begin(), warm.end(), r) == warm.end())
                warm.push_back(r);
        try {
            for (int r : warm) factor.push(r);
        } catch (const NumericalFailure&) {
            factor.clear();
        }
    }

    auto recompute_residual = [&]() {
        sol.projection.assign(D, 0.0);
        for (int idx = 0; idx < factor.size(); ++idx) {
            const int r = factor.members()[idx];
            const auto& picks = pool.type(r).picks;
            if (p[r] != 0.0)
                for (int t = 0; t < T; ++t) sol.projection[ps.flat(t, picks[t])] += p[r];
        }
        for (int d = 0; d < D; ++d) sol.residual[d] = target[d] - sol.projection[d];
    };

    const int outer_cap = 10 * k + 100;
    const int inner_cap = 30 * k + 100;
    int inner_used = 0;
    bool skip_entry = factor.size() > 0;  // warm start: settle the seeded set first
    bool converged = false;

    for (int outer = 0; outer < outer_cap; ++outer) {
        if (!skip_entry) {
            recompute_residual();
            // Largest KKT multiplier among columns outside the passive set
            // enters; below tolerance means optimal.
            int enter = -1;
            double best = kkt_tol;
            for (int r = 0; r < k; ++r) {
                if (std::find(factor.members().begin(), factor.members().end(), r) !=
                    factor.members().end())
                    continue;
                const double w = col_dot(r, sol.residual);
                if (w > best) {
                    best = w;
                    enter = r;
                }
            }
            if (enter < 0) {
                converged = true;
                break;
            }
            factor.push(enter);
        }
        skip_entry = false;

        // Inner loop: restore feasibility of the passive-set least squares.
        while (true) {
            if (++inner_used > inner_cap)
                throw NumericalFailure("restricted projection failed to settle");
            const int m = factor.size();
            std::vector<double> rhs(m);
            for (int idx = 0; idx < m; ++idx) rhs[idx] = col_dot(factor.members()[idx], target);
            std::vector<double> x = factor.solve(rhs);
            bool ok = true;
            for (double v : x)
                if (!(v > 0.0)) ok = false;
            if (ok) {
                for (int idx = 0; idx < m; ++idx) p[factor.members()[idx]] = x[idx];
                break;
            }
            // Step toward x until the first weight hits zero, then drop every
            // column at zero.
            double alpha = 1.0;
            for (int idx = 0; idx < m; ++idx) {
                const double xv = x[idx];
                if (xv <= 0.0) {
                    const double pv = p[factor.members()[idx]];
                    const double a = pv / (pv - xv);
                    alpha = std::min(alpha, a);
                }
            }
            std::vector<int> drop;
            for (int idx = 0; idx < m; ++idx) {
                const int r = factor.members()[idx];
                p[r] += alpha * (x[idx] - p[r]);
                if (x[idx] <= 0.0 && p[r] <= 1e-12 * (1.0 + std::fabs(x[idx]))) {
                    p[r] = 0.0;
                    drop.push_back(r);
                }
            }
            if (drop.empty()) {
                // Roundoff left nothing at zero; drop the most negative
                // candidate outright to guarantee progress.
                int worst = -1;
                double worst_x = 0.0;
                for (int idx = 0; idx < m; ++idx)
                    if (x[idx] <= worst_x) {
                        worst_x = x[idx];
                        worst = factor.members()[idx];
                    }
                p[worst] = 0.0;
                drop.push_back(worst);
            }
            factor.remove(drop);
        }
    }
    if (!converged) throw NumericalFailure("restricted projection did not reach optimality");

    recompute_residual();
    for (int r = 0; r < k; ++r) sol.weights[r] = 0.0;
    for (int idx = 0; idx < factor.size(); ++idx) {
        const int r = factor.members()[idx];
        if (p[r] > 0.0) sol.weights[r] = p[r];
    }
    sol.support.clear();
    for (int r = 0; r < k; ++r)
        if (sol.weights[r] > 0.0) sol.support.push_back(r);
    double ss = 0.0;
    for (double v : sol.residual) ss += v * v;
    sol.objective = scale_n * ss;
    return sol;
}

ShiftedSolution solve_restricted_shifted(const ColumnPool& pool, const std::vector<double>& target,
                                         double tau, const std::vector<ChoiceType>& subset,
                                         double scale_n, double kkt_tol) {
    const PatchStructure& ps = pool.patches();
    const int D = ps.dim();
    const int T = ps.num_periods;
    if (tau < 0.0) throw ContractViolation("tau must be nonnegative");
    if (tau > 0.0 && subset.empty())
        throw ContractViolation("tightening with tau > 0 needs a nonempty subset");

    ShiftedSolution out;
    out.shift.assign(D, 0.0);
    if (tau > 0.0) {
        const double floor_w = tau / static_cast<double>(subset.size());
        for (const ChoiceType& r : subset)
            for (int t = 0; t < T; ++t) out.shift[ps.flat(t, r.picks[t])] += floor_w;
    }
    std::vector<double> shifted(D);
    for (int d = 0; d < D; ++d) {
        shifted[d] = target[d] - out.shift[d];
        if (shifted[d] < 0.0) out.negative_target = true;
    }
    out.master = solve_restricted(pool, shifted, scale_n, kkt_tol);
    out.eta.resize(D);
    for (int d = 0; d < D; ++d) out.eta[d] = out.master.projection[d] + out.shift[d];
    return out;
}

}  // namespace rumcg

#include "rumcg/simplex_lp.hpp"

#include <cmath>
#include <limits>

#include "rumcg/errors.hpp"

namespace rumcg {

namespace {

// Pivots below this magnitude are rejected in the ratio test: dividing by a
// near-zero pivot amplifies prior roundoff enough to corrupt the tableau.
constexpr double kRatioTol = 1e-9;

// Tableau state shared by both phases. Columns 0..n-1 are structural,
// n..n+m-1 artificial; column n+m is the right-hand side.
struct Tableau {
    int m, n;
    std::vector<std::vector<double>> t;     // m x (n + m + 1), current
    std::vector<std::vector<double>> orig;  // same shape, as set up (b >= 0)
    std::vector<int> basis;                 // basis[i] = column basic in row i
    std::vector<char> in_basis;             // per column
};

void pivot(Tableau& tb, int row, int col) {
    std::vector<double>& pr = tb.t[row];
    const double piv = pr[col];
    for (double& v : pr) v /= piv;
    pr[col] = 1.0;  // kill roundoff on the pivot itself
    for (int i = 0; i < tb.m; ++i) {
        if (i == row) continue;
        std::vector<double>& ri = tb.t[i];
        const double f = ri[col];
        if (f == 0.0) continue;
        for (int j = 0; j <= tb.n + tb.m; ++j) ri[j] -= f * pr[j];
        ri[col] = 0.0;
    }
    tb.in_basis[tb.basis[row]] = 0;
    tb.in_basis[col] = 1;
    tb.basis[row] = col;
}

// Recomputes the tableau as B^-1 [A | b] from the original data and the
// current basis, shedding the roundoff accumulated by pivoting. Returns false
// when the basis matrix is numerically singular.
bool refresh(Tableau& tb) {
    const int m = tb.m;
    const int w = tb.n + tb.m + 1;
    std::vector<std::vector<double>> aug(m, std::vector<double>(m + w));
    for (int i = 0; i < m; ++i) {
        for (int k = 0; k < m; ++k) aug[i][k] = tb.orig[i][tb.basis[k]];
        for (int j = 0; j < w; ++j) aug[i][m + j] = tb.orig[i][j];
    }
    for (int c = 0; c < m; ++c) {
        int p = c;
        for (int i = c + 1; i < m; ++i)
            if (std::fabs(aug[i][c]) > std::fabs(aug[p][c])) p = i;
        if (std::fabs(aug[p][c]) < 1e-12) return false;
        std::swap(aug[c], aug[p]);
        for (int i = 0; i < m; ++i) {
            if (i == c) continue;
            const double f = aug[i][c] / aug[c][c];
            if (f == 0.0) continue;
            for (int j = c; j < m + w; ++j) aug[i][j] -= f * aug[c][j];
            aug[i][c] = 0.0;
        }
    }
    // Row c now carries basic variable basis[c]; normalize and snap the basic
    // columns to exact unit vectors.
    for (int i = 0; i < m; ++i) {
        const double d = aug[i][i];
        for (int j = 0; j < w; ++j) tb.t[i][j] = aug[i][m + j] / d;
        for (int k = 0; k < m; ++k) tb.t[i][tb.basis[k]] = (k == i) ? 1.0 : 0.0;
    }
    return true;
}

// Smallest-index column with reduced cost below -tol, or -1. Basic columns
// are skipped, and artificial columns never (re-)enter: dropping an
// artificial for good once it leaves the basis is sound and prevents one
// from sneaking back in at a positive value.
int find_entering(const Tableau& tb, const std::vector<double>& cost, double tol) {
    for (int j = 0; j < tb.n; ++j) {
        if (tb.in_basis[j]) continue;
        double r = cost[j];
        for (int i = 0; i < tb.m; ++i) {
            const double cb = cost[tb.basis[i]];
            if (cb != 0.0) r -= cb * tb.t[i][j];
        }
        if (r < -tol) return j;
    }
    return -1;
}

// Runs simplex iterations for the cost vector `cost` (length n + m). Returns
// false when an entering column had no positive pivot (unbounded).
bool iterate(Tableau& tb, const std::vector<double>& cost, double pivot_tol, int& budget) {
    const int ncols = tb.n + tb.m;
    while (budget-- > 0) {
        // Bland: smallest eligible index, with reduced costs recomputed from
        // scratch each round for numerical hygiene (problems are tiny).
        const int enter = find_entering(tb, cost, pivot_tol);
        if (enter < 0) return true;  // optimal for this phase

        int leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < tb.m; ++i) {
            const double a = tb.t[i][enter];
            if (a > kRatioTol) {
                const double ratio = tb.t[i][ncols] / a;
                if (ratio < best - 1e-15 || (ratio < best + 1e-15 && (leave < 0 || tb.basis[i] < tb.basis[leave]))) {
                    best = ratio;
                    leave = i;
                }
            }
        }
        if (leave < 0) return false;  // unbounded direction
        pivot(tb, leave, enter);
    }
    throw NumericalFailure("simplex pivot budget exhausted");
}

// Iterates to a terminal claim, then re-derives the tableau from original
// data before trusting it: accumulated pivot roundoff can hide an entering
// column (a false "optimal") or a usable ratio row (a false "unbounded").
// Returns false for verified unboundedness.
bool run_phase(Tableau& tb, const std::vector<double>& cost, double pivot_tol, int& budget) {
    int unbounded_claims = 0;
    for (int rounds = 0; rounds <= 8; ++rounds) {
        const bool claims_optimal = iterate(tb, cost, pivot_tol, budget);
        if (!refresh(tb)) return claims_optimal;  // cannot verify; accept
        if (claims_optimal) {
            if (find_entering(tb, cost, pivot_tol) < 0) return true;
            unbounded_claims = 0;
        } else if (++unbounded_claims >= 2) {
            return false;  // unbounded twice across a refresh: believe it
        }
    }
    throw NumericalFailure("simplex failed to stabilize");
}

}  // namespace

LpResult SimplexLp::solve(const std::vector<std::vector<double>>& rows,
                          const std::vector<double>& rhs,
                          const std::vector<double>& cost) const {
    const int m = static_cast<int>(rows.size());
    const int n = static_cast<int>(cost.size());
    Tableau tb;
    tb.m = m;
    tb.n = n;
    tb.t.assign(m, std::vector<double>(n + m + 1, 0.0));
    tb.basis.resize(m);
    tb.in_basis.assign(n + m, 0);
    for (int i = 0; i < m; ++i) {
        const double sgn = rhs[i] < 0.0 ? -1.0 : 1.0;  // normalize b >= 0
        for (int j = 0; j < n; ++j) tb.t[i][j] = sgn * rows[i][j];
        tb.t[i][n + i] = 1.0;
        tb.t[i][n + m] = sgn * rhs[i];
        tb.basis[i] = n + i;
        tb.in_basis[n + i] = 1;
    }
    tb.orig = tb.t;

    int budget = max_pivots;

    // Phase 1: minimize the sum of artificials.
    std::vector<double> c1(n + m, 0.0);
    for (int i = 0; i < m; ++i) c1[n + i] = 1.0;
    if (!run_phase(tb, c1, pivot_tol, budget))
        throw NumericalFailure("phase-1 subproblem unbounded");
    double infeas = 0.0;
    for (int i = 0; i < m; ++i)
        if (tb.basis[i] >= n) infeas += tb.t[i][n + m];
    if (infeas > feas_tol) return {LpStatus::Infeasible, 0.0, {}};

    // Drive leftover artificials out of the basis; rows that offer no
    // structural pivot are redundant (their artificial stays basic at zero
    // and costs nothing in phase 2).
    for (int i = 0; i < m; ++i) {
        if (tb.basis[i] < n) continue;
        int col = -1;
        for (int j = 0; j < n; ++j) {
            if (!tb.in_basis[j] && std::fabs(tb.t[i][j]) > kRatioTol) {
                col = j;
                break;
            }
        }
        if (col >= 0) pivot(tb, i, col);
    }

    // Phase 2: original costs. Artificial columns cost nothing, which is
    // safe because they can never re-enter the basis.
    std::vector<double> c2(n + m, 0.0);
    for (int j = 0; j < n; ++j) c2[j] = cost[j];
    if (!run_phase(tb, c2, pivot_tol, budget)) return {LpStatus::Unbounded, 0.0, {}};

    LpResult res;
    res.status = LpStatus::Optimal;
    res.x.assign(n, 0.0);
    for (int i = 0; i < m; ++i)
        if (tb.basis[i] < n) res.x[tb.basis[i]] = tb.t[i][n + m];
    res.objective = 0.0;
    for (int j = 0; j < n; ++j) res.objective += cost[j] * res.x[j];
    return res;
}

MarginResult max_margin(const std::vector<std::vector<double>>& dirs, int num_goods) {
    const int L = num_goods;
    MarginResult out;
    if (dirs.empty()) {
        // No separating requirements: the margin is unconstrained. Report
        // +infinity with an arbitrary interior witness.
        out.margin = std::numeric_limits<double>::infinity();
        out.witness.assign(L, 1.0 / L);
        return out;
    }
    const int R = static_cast<int>(dirs.size());
    // Variables: q[0..L-1], m+ , m-, surplus[0..R-1].
    const int n = L + 2 + R;
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    rows.reserve(R + 1);
    for (int j = 0; j < R; ++j) {
        std::vector<double> row(n, 0.0);
        for (int l = 0; l < L; ++l) row[l] = dirs[j][l];
        row[L] = -1.0;          // - m+
        row[L + 1] = 1.0;       // + m-
        row[L + 2 + j] = -1.0;  // - surplus  =>  d.q - m >= 0
        rows.push_back(std::move(row));
        rhs.push_back(0.0);
    }
    std::vector<double> simplex_row(n, 0.0);
    for (int l = 0; l < L; ++l) simplex_row[l] = 1.0;
    rows.push_back(std::move(simplex_row));
    rhs.push_back(1.0);

    std::vector<double> cost(n, 0.0);
    cost[L] = -1.0;  // maximize m+ - m-
    cost[L + 1] = 1.0;

    SimplexLp lp;
    LpResult r = lp.solve(rows, rhs, cost);
    if (r.status != LpStatus::Optimal)
        throw NumericalFailure("margin subproblem did not solve to optimality");
    out.margin = -r.objective;
    out.witness.assign(r.x.begin(), r.x.begin() + L);
    // The simplex constraint holds to roundoff; renormalize defensively.
    double sum = 0.0;
    for (double q : out.witness) sum += q;
    if (sum > 0.0)
        for (double& q : out.witness) q /= sum;
    return out;
}

}  // namespace rumcg

#include "rumcg/pricing.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <set>

#include "rumcg/errors.hpp"

namespace rumcg {

namespace {

// Per-period bitmask tables for the search routines. Bit j of induced[t][i]
// is set when patch (t, i) reveals preference for period j's prices, so a
// pick is compatible with a set of later periods iff that set is covered by
// its induced mask.
struct SearchTables {
    int T = 0;
    std::vector<std::vector<std::uint64_t>> induced;
    std::vector<std::vector<double>> val;
    double big = 0.0;  // dummy magnitude: 1 + sum |s|

    SearchTables(const std::vector<double>& s, const PatchStructure& ps) {
        T = ps.num_periods;
        if (T > 64) throw ContractViolation("pricing supports at most 64 periods");
        if (static_cast<int>(s.size()) != ps.dim())
            throw ContractViolation("reduced-value vector length does not match patches");
        induced.resize(T);
        val.resize(T);
        big = 1.0;
        for (double v : s) big += std::fabs(v);
        for (int t = 0; t < T; ++t) {
            const int I = ps.patch_count(t);
            induced[t].resize(I);
            val[t].resize(I);
            for (int i = 0; i < I; ++i) {
                std::uint64_t m = 0;
                for (int j = 0; j < T; ++j)
                    if (ps.induces(t, i, j)) m |= std::uint64_t{1} << j;
                induced[t][i] = m;
                val[t][i] = s[ps.flat(t, i)];
            }
        }
    }

    // Best patch for period t covering `later`; {-big, -1} when none exists.
    std::pair<double, int> best_feasible(int t, std::uint64_t later) const {
        double bv = 0.0;
        int bi = -1;
        const auto& masks = induced[t];
        const auto& vals = val[t];
        for (int i = 0; i < static_cast<int>(masks.size()); ++i) {
            if ((later & ~masks[i]) == 0 && (bi < 0 || vals[i] > bv)) {
                bv = vals[i];
                bi = i;
            }
        }
        if (bi < 0) return {-big, -1};
        return {bv, bi};
    }
};

}  // namespace

OrderValue order_value(const std::vector<int>& order, const std::vector<double>& s,
                       const PatchStructure& ps) {
    SearchTables tb(s, ps);
    const int T = tb.T;
    std::uint64_t seen = 0;
    for (int t : order) {
        if (t < 0 || t >= T) throw ContractViolation("order contains an invalid period");
        const std::uint64_t bit = std::uint64_t{1} << t;
        if (seen & bit) throw ContractViolation("order repeats a period");
        seen |= bit;
    }
    OrderValue out;
    out.picks.assign(T, -1);
    std::uint64_t later = seen;
    for (int t : order) {
        later &= ~(std::uint64_t{1} << t);
        auto [v, i] = tb.best_feasible(t, later);
        out.value += v;
        out.picks[t] = i;
        if (i < 0) out.used_dummy = true;
    }
    return out;
}

std::vector<PricingCandidate> best_insertion(const std::vector<double>& s,
                                             const PatchStructure& ps, Rng& rng, int restarts) {
    SearchTables tb(s, ps);
    const int T = tb.T;
    std::set<std::vector<std::int32_t>> seen;
    std::vector<PricingCandidate> out;

    std::vector<int> perm(T);
    for (int restart = 0; restart < restarts; ++restart) {
        for (int t = 0; t < T; ++t) perm[t] = t;
        shuffle(perm, rng);

        // order[pos] runs from least to most preferred; later[pos] holds the
        // bitmask of periods after pos.
        std::vector<int> order{perm[0]};
        std::vector<std::uint64_t> later{0};
        for (int k = 1; k < T; ++k) {
            const int t = perm[k];
            const std::uint64_t tbit = std::uint64_t{1} << t;
            const int n = static_cast<int>(order.size());
            // f0: current contribution of each placed period; f1: its
            // contribution if t lands after it.
            std::vector<double> f0(n), f1(n);
            for (int pos = 0; pos < n; ++pos) {
                f0[pos] = tb.best_feasible(order[pos], later[pos]).first;
                f1[pos] = tb.best_feasible(order[pos], later[pos] | tbit).first;
            }
            std::vector<double> suf0(n + 1, 0.0);
            std::vector<std::uint64_t> sufmask(n + 1, 0);
            for (int pos = n - 1; pos >= 0; --pos) {
                suf0[pos] = suf0[pos + 1] + f0[pos];
                sufmask[pos] = sufmask[pos + 1] | (std::uint64_t{1} << order[pos]);
            }
            int best_j = 0;
            double best_v = 0.0;
            double pref1 = 0.0;
            for (int j = 0; j <= n; ++j) {
                const double v = pref1 + tb.best_feasible(t, sufmask[j]).first + suf0[j];
                if (j == 0 || v > best_v) {
                    best_v = v;
                    best_j = j;
                }
                if (j < n) pref1 += f1[j];
            }
            for (int pos = 0; pos < best_j; ++pos) later[pos] |= tbit;
            order.insert(order.begin() + best_j, t);
            later.insert(later.begin() + best_j, sufmask[best_j]);
        }

        ChoiceType cand;
        cand.picks.assign(T, -1);
        double value = 0.0;
        bool dummy = false;
        for (int pos = 0; pos < T; ++pos) {
            auto [v, i] = tb.best_feasible(order[pos], later[pos]);
            if (i < 0) {
                dummy = true;
                break;
            }
            cand.picks[order[pos]] = i;
            value += v;
        }
        if (dummy || !is_rational(cand, ps)) continue;  // insertion can emit cyclic types
        if (seen.insert(cand.picks).second) out.push_back({std::move(cand), value});
    }

    std::sort(out.begin(), out.end(), [](const PricingCandidate& a, const PricingCandidate& b) {
        if (a.value != b.value) return a.value > b.value;
        return a.type.picks < b.type.picks;
    });
    return out;
}

namespace {

struct Node {
    std::vector<std::int32_t> picks;   // -1 = unfixed
    std::vector<std::uint64_t> reach;  // reach[u]: periods u is preferred over, closed
    double fixed_value = 0.0;
    double bound = 0.0;
    std::uint64_t id = 0;
};

// Admissible bound: fixed value plus each unfixed period's best feasible
// value under the node's closure. Also reports the branch period (fewest
// feasible patches, lowest index on ties). Returns false on a dead end.
bool node_evaluate(const SearchTables& tb, Node& nd, int& branch_t) {
    nd.bound = nd.fixed_value;
    branch_t = -1;
    int branch_count = 0;
    for (int t = 0; t < tb.T; ++t) {
        if (nd.picks[t] >= 0) continue;
        int feas = 0;
        double best = 0.0;
        for (int i = 0; i < static_cast<int>(tb.induced[t].size()); ++i) {
            if ((tb.induced[t][i] & nd.reach[t]) != 0) continue;  // would close a cycle
            if (feas == 0 || tb.val[t][i] > best) best = tb.val[t][i];
            ++feas;
        }
        if (feas == 0) return false;
        nd.bound += best;
        if (branch_t < 0 || feas < branch_count) {
            branch_t = t;
            branch_count = feas;
        }
    }
    return true;
}

void node_add_pick(const SearchTables& tb, Node& nd, int t, int i) {
    nd.picks[t] = i;
    nd.fixed_value += tb.val[t][i];
    const std::uint64_t desc = nd.reach[t] | (std::uint64_t{1} << t);
    std::uint64_t edges = tb.induced[t][i];
    while (edges) {
        const int j = std::countr_zero(edges);
        edges &= edges - 1;
        if (nd.reach[j] & (std::uint64_t{1} << t)) continue;
        const std::uint64_t jbit = std::uint64_t{1} << j;
        for (int u = 0; u < tb.T; ++u)
            if (u == j || (nd.reach[u] & jbit)) nd.reach[u] |= desc;
    }
}

// Greedy dive for an initial incumbent: repeatedly fix the branch period's
// best feasible patch. Dead ends are possible when the margin floor dropped
// patches; the full searches still cover the whole space.
bool greedy_dive(const SearchTables& tb, ChoiceType& best, double& value) {
    Node nd;
    nd.picks.assign(tb.T, -1);
    nd.reach.assign(tb.T, 0);
    while (true) {
        int branch_t = -1;
        if (!node_evaluate(tb, nd, branch_t)) return false;
        if (branch_t < 0) {
            best.picks = nd.picks;
            value = nd.fixed_value;
            return true;
        }
        int pick = -1;
        double bv = 0.0;
        for (int i = 0; i < static_cast<int>(tb.induced[branch_t].size()); ++i) {
            if ((tb.induced[branch_t][i] & nd.reach[branch_t]) != 0) continue;
            if (pick < 0 || tb.val[branch_t][i] > bv) {
                bv = tb.val[branch_t][i];
                pick = i;
            }
        }
        node_add_pick(tb, nd, branch_t, pick);
    }
}

[[noreturn]] void throw_no_type(bool proven) {
    // Reachable only when margin-dropped patches leave every complete
    // assignment cyclic; with full patch sets a rational type always exists
    // (ordering the periods by the cost of any generic bundle is acyclic).
    if (proven) throw InfeasibleMargin("no rational type exists for this patch structure");
    throw Exhausted("pricing search timed out before finding a rational type");
}

// Subset method: the best value with the periods of S placed first is
//   f(S) = max_{t in S} f(S \ t) + g_t(S \ t),
// with g_t(C) the best patch of period t whose induced set lies inside C
// (every period it reveals preference for placed before it). An order
// respecting every induced set is exactly acyclicity of the assembled type.
ExactPricingResult exact_subsets(const SearchTables& tb,
                                 const std::function<bool()>& expired) {
    const int T = tb.T;
    const std::uint64_t states = std::uint64_t{1} << T;
    const double ninf = -std::numeric_limits<double>::infinity();

    ExactPricingResult res;
    res.best.picks.assign(T, 0);
    double dive_value = 0.0;
    ChoiceType dive_best;
    const bool have_dive = greedy_dive(tb, dive_best, dive_value);
    if (have_dive) res.best = dive_best;

    // Subset-max tables, one per period.
    std::vector<std::vector<double>> g(T);
    for (int t = 0; t < T; ++t) {
        if (expired()) {
            if (!have_dive) throw_no_type(false);
            res.value = dive_value;
            return res;
        }
        g[t].assign(states, ninf);
        for (int i = 0; i < static_cast<int>(tb.induced[t].size()); ++i) {
            double& slot = g[t][tb.induced[t][i]];
            if (tb.val[t][i] > slot) slot = tb.val[t][i];
        }
        for (int b = 0; b < T; ++b) {
            const std::uint64_t bit = std::uint64_t{1} << b;
            for (std::uint64_t C = 0; C < states; ++C)
                if ((C & bit) && g[t][C ^ bit] > g[t][C]) g[t][C] = g[t][C ^ bit];
        }
    }

    std::vector<double> f(states, ninf);
    std::vector<std::int8_t> last(states, -1);
    f[0] = 0.0;
    for (std::uint64_t S = 1; S < states; ++S) {
        if ((S & 0xFFF) == 0 && expired()) {
            if (!have_dive) throw_no_type(false);
            res.value = dive_value;
            res.nodes_expanded = S;
            return res;
        }
        std::uint64_t bits = S;
        while (bits) {
            const int t = std::countr_zero(bits);
            bits &= bits - 1;
            const std::uint64_t C = S ^ (std::uint64_t{1} << t);
            const double cand = f[C] + g[t][C];
            if (cand > f[S]) {
                f[S] = cand;
                last[S] = static_cast<std::int8_t>(t);
            }
        }
    }
    res.nodes_expanded = states;

    const std::uint64_t full = states - 1;
    if (f[full] == ninf) throw_no_type(true);

    // Walk the placement order backwards, re-selecting each period's best
    // patch inside its before-set (lowest index on value ties).
    std::uint64_t S = full;
    while (S) {
        const int t = last[S];
        const std::uint64_t C = S ^ (std::uint64_t{1} << t);
        int pick = -1;
        double bv = 0.0;
        for (int i = 0; i < static_cast<int>(tb.induced[t].size()); ++i) {
            if ((tb.induced[t][i] & ~C) != 0) continue;
            if (pick < 0 || tb.val[t][i] > bv) {
                bv = tb.val[t][i];
                pick = i;
            }
        }
        res.best.picks[t] = pick;
        S = C;
    }
    res.value = f[full];
    res.proven_optimal = true;
    return res;
}

ExactPricingResult exact_branch_and_bound(const SearchTables& tb,
                                          const std::function<bool()>& expired) {
    const int T = tb.T;
    struct Worse {
        bool operator()(const Node& a, const Node& b) const {
            if (a.bound != b.bound) return a.bound < b.bound;
            return a.id > b.id;  // FIFO among equal bounds, for determinism
        }
    };

    ExactPricingResult res;
    res.best.picks.assign(T, 0);
    double incumbent = 0.0;
    bool have_incumbent = greedy_dive(tb, res.best, incumbent);
    std::uint64_t next_id = 0;

    std::priority_queue<Node, std::vector<Node>, Worse> open;
    Node root;
    root.picks.assign(T, -1);
    root.reach.assign(T, 0);
    root.id = next_id++;
    int root_branch = -1;
    if (node_evaluate(tb, root, root_branch)) open.push(std::move(root));

    bool proven = true;
    while (!open.empty()) {
        if ((res.nodes_expanded & 0xFF) == 0 && expired()) {
            proven = false;
            break;
        }
        Node nd = open.top();
        open.pop();
        ++res.nodes_expanded;
        if (have_incumbent && nd.bound <= incumbent) break;  // best-first: all the rest pruned

        int branch_t = -1;
        if (!node_evaluate(tb, nd, branch_t)) continue;  // re-check (cheap, keeps code simple)
        if (branch_t < 0) {
            // Leaf: every period fixed.
            if (!have_incumbent || nd.fixed_value > incumbent) {
                incumbent = nd.fixed_value;
                have_incumbent = true;
                res.best.picks = nd.picks;
            }
            continue;
        }
        for (int i = 0; i < static_cast<int>(tb.induced[branch_t].size()); ++i) {
            if ((tb.induced[branch_t][i] & nd.reach[branch_t]) != 0) continue;
            Node child = nd;
            child.id = next_id++;
            node_add_pick(tb, child, branch_t, i);
            int dummy_branch = -1;
            if (!node_evaluate(tb, child, dummy_branch)) continue;
            if (have_incumbent && child.bound <= incumbent) continue;
            open.push(std::move(child));
        }
    }

    if (!have_incumbent) throw_no_type(proven);
    res.value = incumbent;
    res.proven_optimal = proven;
    return res;
}

}  // namespace

ExactPricingResult exact_pricing(const std::vector<double>& s, const PatchStructure& ps,
                                 std::optional<double> time_limit_seconds, ExactMethod method) {
    SearchTables tb(s, ps);
    const auto start = std::chrono::steady_clock::now();
    std::function<bool()> expired = [&]() {
        if (!time_limit_seconds) return false;
        const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
        return el.count() > *time_limit_seconds;
    };
    const bool use_subsets =
        method == ExactMethod::SubsetDp || (method == ExactMethod::Auto && tb.T <= 17);
    return use_subsets ? exact_subsets(tb, expired) : exact_branch_and_bound(tb, expired);
}

PricingOutcome price(const std::vector<double>& s, const PatchStructure& ps, double threshold,
                     const PricingConfig& cfg, Rng& rng) {
    PricingOutcome out;
    if (cfg.use_heuristic) {
        auto cands = best_insertion(s, ps, rng, cfg.heuristic_restarts);
        if (!cands.empty() && cands.front().value >= threshold + cfg.eps_cg) {
            out.column = std::move(cands.front().type);
            out.column_value = cands.front().value;
            out.heuristic_hit = true;
            return out;
        }
    }
    ExactPricingResult ex = exact_pricing(s, ps, cfg.time_limit_seconds);
    out.exact_ran = true;
    out.exact_value = ex.value;
    out.proven_optimal = ex.proven_optimal;
    out.nodes_expanded = ex.nodes_expanded;
    if (ex.value >= threshold + cfg.eps_cg) {
        out.column = std::move(ex.best);
        out.column_value = ex.value;
    }
    return out;
}

}  // namespace rumcg

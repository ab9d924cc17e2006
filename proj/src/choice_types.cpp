#include "rumcg/choice_types.hpp"

#include <algorithm>
#include <set>

#include "rumcg/errors.hpp"

namespace rumcg {

std::vector<double> as_indicator(const ChoiceType& type, const PatchStructure& ps) {
    std::vector<double> a(ps.dim(), 0.0);
    for (int t = 0; t < ps.num_periods; ++t) a[ps.flat(t, type.picks[t])] = 1.0;
    return a;
}

PreferenceDigraph induced_relations(const ChoiceType& type, const PatchStructure& ps) {
    const int T = ps.num_periods;
    PreferenceDigraph g;
    g.adj.assign(T, std::vector<std::uint8_t>(T, 0));
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < T; ++j)
            if (j != t && ps.induces(t, type.picks[t], j)) g.adj[j][t] = 1;
    return g;
}

namespace {

// Iterative three-color DFS cycle detection on adj.
bool has_cycle(const std::vector<std::vector<std::uint8_t>>& adj) {
    const int T = static_cast<int>(adj.size());
    std::vector<int> color(T, 0);  // 0 white, 1 on stack, 2 done
    std::vector<std::pair<int, int>> stack;
    for (int s = 0; s < T; ++s) {
        if (color[s] != 0) continue;
        stack.push_back({s, 0});
        color[s] = 1;
        while (!stack.empty()) {
            auto& [u, next] = stack.back();
            int v = -1;
            while (next < T) {
                if (adj[u][next] && next != u) {
                    v = next++;
                    break;
                }
                ++next;
            }
            if (v < 0) {
                color[u] = 2;
                stack.pop_back();
            } else if (color[v] == 1) {
                return true;
            } else if (color[v] == 0) {
                color[v] = 1;
                stack.push_back({v, 0});
            }
        }
    }
    return false;
}

}  // namespace

bool is_rational(const ChoiceType& type, const PatchStructure& ps) {
    return !has_cycle(induced_relations(type, ps).adj);
}

std::vector<ChoiceType> enumerate_rational_types(const PatchStructure& ps, std::uint64_t limit) {
    const int T = ps.num_periods;
    std::uint64_t product = 1;
    for (int t = 0; t < T; ++t) {
        const auto c = static_cast<std::uint64_t>(ps.patch_count(t));
        if (product > limit / c)
            throw TooLarge("type space exceeds enumeration limit of " + std::to_string(limit));
        product *= c;
    }
    if (product > limit)
        throw TooLarge("type space exceeds enumeration limit of " + std::to_string(limit));

    std::vector<ChoiceType> out;
    ChoiceType cur;
    cur.picks.assign(T, 0);
    while (true) {
        if (is_rational(cur, ps)) out.push_back(cur);
        int t = T - 1;
        while (t >= 0 && cur.picks[t] + 1 >= ps.patch_count(t)) {
            cur.picks[t] = 0;
            --t;
        }
        if (t < 0) break;
        ++cur.picks[t];
    }
    return out;
}

BigUint::BigUint(std::uint64_t v) {
    while (v > 0) {
        limbs_.push_back(static_cast<std::uint32_t>(v % 1000000000ULL));
        v /= 1000000000ULL;
    }
    if (limbs_.empty()) limbs_.push_back(0);
}

void BigUint::mul_small(std::uint64_t v) {
    std::uint64_t carry = 0;
    for (auto& limb : limbs_) {
        __uint128_t cur = static_cast<__uint128_t>(limb) * v + carry;
        limb = static_cast<std::uint32_t>(cur % 1000000000ULL);
        carry = static_cast<std::uint64_t>(cur / 1000000000ULL);
    }
    while (carry > 0) {
        limbs_.push_back(static_cast<std::uint32_t>(carry % 1000000000ULL));
        carry /= 1000000000ULL;
    }
}

std::string BigUint::to_string() const {
    std::string s = std::to_string(limbs_.back());
    for (auto it = limbs_.rbegin() + 1; it != limbs_.rend(); ++it) {
        std::string part = std::to_string(*it);
        s += std::string(9 - part.size(), '0') + part;
    }
    return s;
}

double BigUint::to_double() const {
    double v = 0.0;
    for (auto it = limbs_.rbegin(); it != limbs_.rend(); ++it) v = v * 1e9 + *it;
    return v;
}

TypeCountEstimate estimate_type_counts(const PatchStructure& ps, std::uint64_t samples, Rng& rng) {
    if (samples == 0) throw ContractViolation("need at least one sample");
    TypeCountEstimate est;
    est.total = BigUint(1);
    for (int t = 0; t < ps.num_periods; ++t)
        est.total.mul_small(static_cast<std::uint64_t>(ps.patch_count(t)));
    est.samples = samples;
    ChoiceType cur;
    cur.picks.assign(ps.num_periods, 0);
    for (std::uint64_t k = 0; k < samples; ++k) {
        for (int t = 0; t < ps.num_periods; ++t)
            cur.picks[t] = rng.below_int(ps.patch_count(t));
        if (is_rational(cur, ps)) ++est.rational_hits;
    }
    est.rational_fraction = static_cast<double>(est.rational_hits) / static_cast<double>(samples);
    return est;
}

namespace {

// Strongly connected components by Tarjan's algorithm (iterative).
// Returns component ids; ids are assigned in completion order.
std::vector<int> tarjan_scc(const std::vector<std::vector<std::uint8_t>>& adj, int& num_comps) {
    const int T = static_cast<int>(adj.size());
    std::vector<int> index(T, -1), low(T, 0), comp(T, -1);
    std::vector<int> scc_stack;
    std::vector<bool> on_stack(T, false);
    int next_index = 0;
    num_comps = 0;

    struct Frame {
        int u;
        int next;
    };
    std::vector<Frame> call;
    for (int s = 0; s < T; ++s) {
        if (index[s] >= 0) continue;
        call.push_back({s, 0});
        index[s] = low[s] = next_index++;
        scc_stack.push_back(s);
        on_stack[s] = true;
        while (!call.empty()) {
            Frame& f = call.back();
            int v = -1;
            while (f.next < T) {
                if (adj[f.u][f.next] && f.next != f.u) {
                    v = f.next++;
                    break;
                }
                ++f.next;
            }
            if (v >= 0) {
                if (index[v] < 0) {
                    call.push_back({v, 0});
                    index[v] = low[v] = next_index++;
                    scc_stack.push_back(v);
                    on_stack[v] = true;
                } else if (on_stack[v]) {
                    low[f.u] = std::min(low[f.u], index[v]);
                }
            } else {
                int u = f.u;
                call.pop_back();
                if (!call.empty()) low[call.back().u] = std::min(low[call.back().u], low[u]);
                if (low[u] == index[u]) {
                    while (true) {
                        int w = scc_stack.back();
                        scc_stack.pop_back();
                        on_stack[w] = false;
                        comp[w] = num_comps;
                        if (w == u) break;
                    }
                    ++num_comps;
                }
            }
        }
    }
    return comp;
}

}  // namespace

std::vector<ChoiceType> sample_rational_types(const PatchStructure& ps, int count, Rng& rng,
                                              const SampleConfig& cfg) {
    const int T = ps.num_periods;
    const double w_add = cfg.prose_weights ? 5.0 : 1.0;
    const double w_remove = cfg.prose_weights ? 1.0 : 5.0;
    constexpr double kStuckPenalty = 1e6;

    std::set<std::vector<std::int32_t>> seen;
    std::vector<ChoiceType> out;
    ChoiceType cur;
    cur.picks.assign(T, 0);

    for (int draws = 0; draws < cfg.max_draws && static_cast<int>(out.size()) < count; ++draws) {
        for (int t = 0; t < T; ++t) cur.picks[t] = rng.below_int(ps.patch_count(t));

        bool rational = false;
        for (int round = 0; round < cfg.max_repair_rounds; ++round) {
            PreferenceDigraph g = induced_relations(cur, ps);
            if (!has_cycle(g.adj)) {
                rational = true;
                break;
            }
            int num_comps = 0;
            std::vector<int> comp = tarjan_scc(g.adj, num_comps);
            for (int c = 0; c < num_comps; ++c) {
                std::vector<int> members;
                for (int t = 0; t < T; ++t)
                    if (comp[t] == c) members.push_back(t);
                if (members.size() < 2) continue;
                // Re-pick one random member to the least disruptive patch:
                // each relation the candidate adds or removes (against the
                // current pick, over all periods) costs its weight, and a
                // candidate that removes nothing within this component gets a
                // prohibitive penalty since it cannot help break the cycle.
                const int t = members[rng.below(members.size())];
                const int cur_pick = cur.picks[t];
                double best_score = 0.0;
                int best_i = -1;
                for (int i = 0; i < ps.patch_count(t); ++i) {
                    double score = 0.0;
                    bool removes_in_comp = false;
                    for (int j : members)
                        if (j != t && ps.induces(t, cur_pick, j) && !ps.induces(t, i, j))
                            removes_in_comp = true;
                    if (!removes_in_comp) score += kStuckPenalty;
                    for (int j = 0; j < T; ++j) {
                        if (j == t) continue;
                        const bool before = ps.induces(t, cur_pick, j);
                        const bool after = ps.induces(t, i, j);
                        if (!before && after) score += w_add;
                        else if (before && !after) score += w_remove;
                    }
                    if (best_i < 0 || score < best_score) {
                        best_score = score;
                        best_i = i;
                    }
                }
                cur.picks[t] = best_i;
            }
        }
        if (rational && seen.insert(cur.picks).second) out.push_back(cur);
    }
    if (static_cast<int>(out.size()) < count)
        throw Exhausted("found only " + std::to_string(out.size()) + " of " +
                        std::to_string(count) + " distinct rational types within the draw budget");
    return out;
}

}  // namespace rumcg

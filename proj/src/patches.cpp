#include "rumcg/patches.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rumcg/errors.hpp"
#include "rumcg/simplex_lp.hpp"

namespace rumcg {

namespace {

// A prefix whose maximized margin is below this is an empty cell at double
// precision and its whole subtree is abandoned. Full-depth cells with margin
// in [kEmpty, delta) are real but too thin: dropped with a warning.
constexpr double kEmpty = 1e-13;

std::string sign_string(const std::vector<std::int8_t>& signs) {
    std::string s;
    for (std::int8_t v : signs) s += (v == 0 ? '0' : (v > 0 ? '+' : '-'));
    return s;
}

void check_not_proportional(const std::vector<std::vector<double>>& prices) {
    const int T = static_cast<int>(prices.size());
    const int L = static_cast<int>(prices[0].size());
    for (int t = 0; t < T; ++t) {
        for (int j = t + 1; j < T; ++j) {
            const double c = prices[j][0] / prices[t][0];
            double dev = 0.0, scale = 0.0;
            for (int l = 0; l < L; ++l) {
                dev = std::max(dev, std::fabs(prices[j][l] - c * prices[t][l]));
                scale = std::max(scale, std::fabs(prices[j][l]));
            }
            if (dev <= 1e-12 * scale)
                throw DegenerateBudgets("periods " + std::to_string(t + 1) + " and " +
                                        std::to_string(j + 1) + " have proportional prices");
        }
    }
}

}  // namespace

void PatchStructure::build_index() {
    offsets.assign(num_periods + 1, 0);
    lookup_.assign(num_periods, {});
    for (int t = 0; t < num_periods; ++t) {
        offsets[t + 1] = offsets[t] + static_cast<int>(periods[t].size());
        for (int i = 0; i < static_cast<int>(periods[t].size()); ++i)
            lookup_[t].emplace(periods[t][i].signs, i);
    }
}

int PatchStructure::find(int t, const std::vector<std::int8_t>& signs) const {
    std::vector<std::int8_t> key = signs;
    key[t] = 0;
    auto it = lookup_[t].find(key);
    if (it == lookup_[t].end())
        throw UnknownPatch("period " + std::to_string(t + 1) + ": no patch with signs " +
                           sign_string(key));
    return it->second;
}

PatchStructure enumerate_patches(const std::vector<std::vector<double>>& prices, double delta) {
    const int T = static_cast<int>(prices.size());
    if (T < 1) throw InputError("need at least one period");
    const int L = static_cast<int>(prices[0].size());
    for (const auto& row : prices) {
        if (static_cast<int>(row.size()) != L) throw InputError("ragged price matrix");
        for (double p : row)
            if (!(p > 0.0)) throw InputError("prices must be strictly positive");
    }
    if (T > 1) check_not_proportional(prices);
    if (!(delta >= kEmpty))
        throw ContractViolation("margin delta must be at least " + std::to_string(kEmpty));

    PatchStructure ps;
    ps.num_periods = T;
    ps.num_goods = L;
    ps.margin_floor = delta;
    ps.prices = prices;
    ps.periods.resize(T);

    for (int t = 0; t < T; ++t) {
        // Comparison directions against every other period, normalized per
        // row (inf-norm) so the margin is scale-free.
        std::vector<int> others;
        std::vector<std::vector<double>> dirs;
        for (int j = 0; j < T; ++j) {
            if (j == t) continue;
            std::vector<double> d(L);
            double nrm = 0.0;
            for (int l = 0; l < L; ++l) {
                d[l] = prices[j][l] - prices[t][l];
                nrm = std::max(nrm, std::fabs(d[l]));
            }
            for (double& v : d) v /= nrm;
            others.push_back(j);
            dirs.push_back(std::move(d));
        }

        // Depth-first over sign prefixes, +1 branch first, so completed
        // patches come out in lexicographic sign order. rows holds the
        // active, sign-adjusted directions for the current prefix.
        std::vector<std::int8_t> signs(T, 0);
        std::vector<std::vector<double>> rows;
        auto dfs = [&](auto&& self, std::size_t depth) -> void {
            MarginResult mr = max_margin(rows, L);
            if (mr.margin < kEmpty) return;  // empty cell, abandon subtree
            if (depth == others.size()) {
                if (mr.margin >= delta) {
                    Patch p;
                    p.signs = signs;
                    p.witness = std::move(mr.witness);
                    p.margin = mr.margin;
                    ps.periods[t].push_back(std::move(p));
                } else {
                    ps.warnings.push_back("period " + std::to_string(t + 1) + ": patch " +
                                          sign_string(signs) + " dropped (margin " +
                                          std::to_string(mr.margin) + " below floor)");
                }
                return;
            }
            for (int sgn : {+1, -1}) {
                signs[others[depth]] = static_cast<std::int8_t>(sgn);
                std::vector<double> row = dirs[depth];
                if (sgn < 0)
                    for (double& v : row) v = -v;
                rows.push_back(std::move(row));
                self(self, depth + 1);
                rows.pop_back();
            }
            signs[others[depth]] = 0;
        };
        dfs(dfs, 0);

        if (ps.periods[t].empty())
            throw InfeasibleMargin("period " + std::to_string(t + 1) +
                                   " has no patch at margin " + std::to_string(delta));
    }

    ps.build_index();
    return ps;
}

int patch_of_bundle(const PatchStructure& ps, int t, const std::vector<double>& bundle,
                    double tie_tol, bool perturb_ties) {
    const int T = ps.num_periods;
    const int L = ps.num_goods;
    if (t < 0 || t >= T) throw ContractViolation("period index out of range");
    if (static_cast<int>(bundle.size()) != L) throw ContractViolation("bundle length != L");
    double expend = 0.0;
    for (int l = 0; l < L; ++l) expend += ps.prices[t][l] * bundle[l];
    if (!(expend > 0.0)) throw ContractViolation("bundle has zero expenditure");

    std::vector<std::int8_t> signs(T, 0);
    for (int j = 0; j < T; ++j) {
        if (j == t) continue;
        double v = 0.0;
        for (int l = 0; l < L; ++l) v += (ps.prices[j][l] - ps.prices[t][l]) * bundle[l];
        if (std::fabs(v) <= tie_tol * expend) {
            if (!perturb_ties)
                throw OnBoundary("bundle ties the budget comparison between periods " +
                                 std::to_string(t + 1) + " and " + std::to_string(j + 1));
            signs[j] = +1;  // nudge toward "no preference"
        } else {
            signs[j] = static_cast<std::int8_t>(v > 0.0 ? +1 : -1);
        }
    }
    return ps.find(t, signs);
}

Frequencies empirical_frequencies(const PatchStructure& ps, const Dataset& data,
                                  double tie_tol, bool perturb_ties) {
    data.validate();
    if (data.num_periods != ps.num_periods || data.num_goods != ps.num_goods)
        throw ContractViolation("dataset does not match patch structure dimensions");
    const int T = ps.num_periods;

    Frequencies f;
    f.counts.resize(T);
    for (int t = 0; t < T; ++t) f.counts[t].assign(ps.patch_count(t), 0);

    if (data.has_bundles()) {
        for (int t = 0; t < T; ++t)
            for (const auto& q : data.bundles[t])
                f.counts[t][patch_of_bundle(ps, t, q, tie_tol, perturb_ties)] += 1;
    } else {
        for (int t = 0; t < T; ++t) {
            if (static_cast<int>(data.patch_counts[t].size()) > ps.patch_count(t))
                throw InputError("period " + std::to_string(t + 1) +
                                 ": patch_index beyond enumerated patches");
            for (std::size_t i = 0; i < data.patch_counts[t].size(); ++i)
                f.counts[t][i] = data.patch_counts[t][i];
        }
    }

    f.per_period.assign(T, 0);
    f.pi.assign(ps.dim(), 0.0);
    f.total = 0;
    for (int t = 0; t < T; ++t) {
        for (long long c : f.counts[t]) f.per_period[t] += c;
        f.total += f.per_period[t];
        for (int i = 0; i < ps.patch_count(t); ++i)
            f.pi[ps.flat(t, i)] = static_cast<double>(f.counts[t][i]) /
                                  static_cast<double>(f.per_period[t]);
    }
    return f;
}

}  // namespace rumcg

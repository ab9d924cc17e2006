#include "rumcg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "rumcg/choice_types.hpp"
#include "rumcg/errors.hpp"

namespace rumcg {

namespace {

ColgenConfig colgen_config(const TestConfig& cfg, Mode mode, bool bounds_allowed,
                           const std::string& phase) {
    ColgenConfig cc;
    cc.eps_cg = cfg.eps_cg;
    cc.kkt_tol = cfg.kkt_tol;
    cc.zero_snap = cfg.zero_snap;
    cc.use_heuristic = mode != Mode::Exact;
    cc.heuristic_restarts = cfg.heuristic_restarts;
    cc.use_upper_bound = bounds_allowed && (mode == Mode::HeurUb || mode == Mode::HeurBounds);
    cc.use_lower_bound = bounds_allowed && mode == Mode::HeurBounds;
    if (cfg.trace) {
        auto fn = cfg.trace;
        cc.trace = [fn, phase](const IterationTrace& tr) { fn(phase, tr); };
    }
    return cc;
}

// Stream tags for derived RNG sequences.
constexpr std::uint64_t kStreamSubset = 1;
constexpr std::uint64_t kStreamStatistic = 2;
constexpr std::uint64_t kStreamTightened = 3;
constexpr std::uint64_t kStreamReplication = 4;

std::vector<ChoiceType> build_subset(const PatchStructure& ps, const TestConfig& cfg,
                                     bool& enumerated) {
    // Full enumeration when the raw type space is small; otherwise sample
    // distinct rational types by draw-and-repair.
    std::uint64_t product = 1;
    bool small = true;
    for (int t = 0; t < ps.num_periods && small; ++t) {
        const auto c = static_cast<std::uint64_t>(ps.patch_count(t));
        if (product > cfg.enumerate_limit / c) small = false;
        else product *= c;
    }
    if (small && product <= cfg.enumerate_limit) {
        enumerated = true;
        return enumerate_rational_types(ps, cfg.enumerate_limit);
    }
    enumerated = false;
    Rng rng(Rng::derive(cfg.seed, {kStreamSubset}));
    SampleConfig sc;
    sc.prose_weights = cfg.prose_repair_weights;
    return sample_rational_types(ps, cfg.subset_size, rng, sc);
}

}  // namespace

StatisticResult compute_statistic(const Frequencies& freq, ColumnPool& pool,
                                  const TestConfig& cfg, Rng& rng,
                                  std::optional<double> time_budget) {
    ColgenConfig cc = colgen_config(cfg, cfg.mode, /*bounds_allowed=*/false, "statistic");
    cc.time_limit_seconds = time_budget;
    StatisticResult out;
    out.detail = project(freq.pi, static_cast<double>(freq.total), pool, cc, rng);
    out.j_stat = out.detail.objective;
    out.eta = out.detail.projection;
    return out;
}

TightenedResult tightened_estimator(const Frequencies& freq, double tau,
                                    const std::vector<ChoiceType>& subset, ColumnPool& pool,
                                    const TestConfig& cfg, Rng& rng,
                                    std::optional<double> time_budget) {
    const PatchStructure& ps = pool.patches();
    const int D = ps.dim();
    if (tau < 0.0) throw ContractViolation("tau must be nonnegative");
    if (tau > 0.0 && subset.empty())
        throw ContractViolation("tightening with tau > 0 needs a nonempty subset");

    TightenedResult out;
    out.shift.assign(D, 0.0);
    if (tau > 0.0) {
        const double floor_w = tau / static_cast<double>(subset.size());
        for (const ChoiceType& r : subset)
            for (int t = 0; t < ps.num_periods; ++t) out.shift[ps.flat(t, r.picks[t])] += floor_w;
    }
    std::vector<double> shifted(D);
    for (int d = 0; d < D; ++d) {
        shifted[d] = freq.pi[d] - out.shift[d];
        if (shifted[d] < 0.0) out.negative_target = true;
    }
    ColgenConfig cc = colgen_config(cfg, cfg.mode, /*bounds_allowed=*/false, "tightened");
    cc.time_limit_seconds = time_budget;
    out.detail = project(shifted, static_cast<double>(freq.total), pool, cc, rng);
    out.eta_tau.resize(D);
    for (int d = 0; d < D; ++d) out.eta_tau[d] = out.detail.projection[d] + out.shift[d];
    return out;
}

std::vector<double> bootstrap_frequencies(const Frequencies& freq, Rng& rng) {
    const int T = static_cast<int>(freq.counts.size());
    std::vector<double> pi_star(freq.pi.size(), 0.0);
    int off = 0;
    for (int t = 0; t < T; ++t) {
        const int I = static_cast<int>(freq.counts[t].size());
        // Cumulative distribution of the period's empirical frequencies.
        std::vector<double> cum(I);
        double acc = 0.0;
        for (int i = 0; i < I; ++i) {
            acc += freq.pi[off + i];
            cum[i] = acc;
        }
        cum[I - 1] = 1.0;  // guard the tail against roundoff
        const long long n = freq.per_period[t];
        std::vector<long long> draw(I, 0);
        for (long long k = 0; k < n; ++k) {
            const double u = rng.unit();
            const int idx = static_cast<int>(
                std::lower_bound(cum.begin(), cum.end(), u,
                                 [](double c, double v) { return c <= v; }) -
                cum.begin());
            ++draw[std::min(idx, I - 1)];
        }
        for (int i = 0; i < I; ++i)
            pi_star[off + i] = static_cast<double>(draw[i]) / static_cast<double>(n);
        off += I;
    }
    return pi_star;
}

std::vector<double> recenter(const std::vector<double>& pi_star, const std::vector<double>& pi_hat,
                             const std::vector<double>& eta_tau) {
    std::vector<double> x(pi_star.size());
    for (std::size_t d = 0; d < x.size(); ++d) x[d] = pi_star[d] - pi_hat[d] + eta_tau[d];
    return x;
}

TestReport run_test(const Dataset& data, const TestConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&]() {
        const std::chrono::duration<double> el = std::chrono::steady_clock::now() - t_start;
        return el.count();
    };

    data.validate();
    if (cfg.bootstrap < 0) throw ContractViolation("bootstrap count must be >= 0");

    PatchStructure ps = enumerate_patches(data.prices, cfg.margin_delta);
    Frequencies freq =
        empirical_frequencies(ps, data, cfg.tie_tol, cfg.tie_policy == TiePolicy::Perturb);

    TestReport rep;
    rep.num_periods = ps.num_periods;
    rep.num_goods = ps.num_goods;
    rep.n_total = freq.total;
    rep.n_per_period = freq.per_period;
    for (int t = 0; t < ps.num_periods; ++t) rep.patch_counts.push_back(ps.patch_count(t));
    rep.warnings = ps.warnings;
    rep.pi_hat = freq.pi;
    rep.requested_replications = cfg.bootstrap;

    const double n_total_d = static_cast<double>(freq.total);
    rep.tau = cfg.tau ? *cfg.tau : std::sqrt(std::log(n_total_d) / n_total_d);
    rep.tau_auto = !cfg.tau;
    if (rep.tau < 0.0) throw ContractViolation("tau must be nonnegative");

    ColumnPool pool(ps);

    auto remaining_budget = [&]() -> std::optional<double> {
        if (!cfg.total_time_limit) return std::nullopt;
        return *cfg.total_time_limit - elapsed();
    };

    // The statistic itself.
    {
        Rng rng(Rng::derive(cfg.seed, {kStreamStatistic}));
        StatisticResult stat = compute_statistic(freq, pool, cfg, rng, remaining_budget());
        rep.j_stat = stat.j_stat;
        rep.eta = stat.eta;
        rep.total_iterations += stat.detail.iterations;
        rep.total_exact_pricing_calls += stat.detail.exact_pricing_calls;
        rep.total_heuristic_hits += stat.detail.heuristic_hits;
        rep.total_bnb_nodes += stat.detail.bnb_nodes;
        rep.columns_generated += stat.detail.columns_added;
        if (stat.detail.timed_out)
            throw Exhausted("time limit expired while computing the statistic");
    }

    // Subset R' and the tightened estimator.
    std::vector<ChoiceType> subset = build_subset(ps, cfg, rep.subset_enumerated);
    rep.subset_size_used = static_cast<int>(subset.size());
    std::vector<double> shift;
    {
        Rng rng(Rng::derive(cfg.seed, {kStreamTightened}));
        TightenedResult tight =
            tightened_estimator(freq, rep.tau, subset, pool, cfg, rng, remaining_budget());
        rep.eta_tau = tight.eta_tau;
        rep.negative_shift = tight.negative_target;
        shift = std::move(tight.shift);
        rep.total_iterations += tight.detail.iterations;
        rep.total_exact_pricing_calls += tight.detail.exact_pricing_calls;
        rep.total_heuristic_hits += tight.detail.heuristic_hits;
        rep.total_bnb_nodes += tight.detail.bnb_nodes;
        rep.columns_generated += tight.detail.columns_added;
        if (tight.detail.timed_out)
            throw Exhausted("time limit expired while computing the tightened estimator");
    }

    // Bootstrap replications. Each solves the tightened projection problem
    // for the recentered resample: the shifted target is
    //   (pi* - pi_hat + eta_tau) - shift
    // and bound checks compare against J_N.
    const int D = ps.dim();
    for (int m = 1; m <= cfg.bootstrap; ++m) {
        if (cfg.total_time_limit && elapsed() > *cfg.total_time_limit) {
            rep.partial = true;
            break;
        }
        Rng rng(Rng::derive(cfg.seed, {kStreamReplication, static_cast<std::uint64_t>(m)}));
        std::vector<double> pi_star = bootstrap_frequencies(freq, rng);
        std::vector<double> x = recenter(pi_star, freq.pi, rep.eta_tau);
        std::vector<double> shifted(D);
        for (int d = 0; d < D; ++d) shifted[d] = x[d] - shift[d];

        ColgenConfig cc = colgen_config(cfg, cfg.mode, /*bounds_allowed=*/true,
                                        "replication " + std::to_string(m));
        if (cfg.replication_time_limit || cfg.total_time_limit) {
            double budget = std::numeric_limits<double>::infinity();
            if (cfg.replication_time_limit) budget = *cfg.replication_time_limit;
            if (cfg.total_time_limit) budget = std::min(budget, *cfg.total_time_limit - elapsed());
            cc.time_limit_seconds = budget;
        }
        BoundedOutcome bo = bounded_project(shifted, n_total_d, rep.j_stat, pool, cc, rng);

        ReplicationRecord rr;
        rr.index = m;
        rr.value = bo.value;
        rr.iterations = bo.detail.iterations;
        rr.exact_pricing_calls = bo.detail.exact_pricing_calls;
        rr.heuristic_hits = bo.detail.heuristic_hits;
        switch (bo.kind) {
            case BoundedOutcome::Kind::Exact:
                rr.outcome = "exact";
                rr.exceedance = bo.value >= rep.j_stat;
                break;
            case BoundedOutcome::Kind::BelowRef:
                rr.outcome = "below_ref";
                rr.exceedance = false;
                break;
            case BoundedOutcome::Kind::ExceedsRef:
                rr.outcome = "exceeds_ref";
                rr.exceedance = true;
                break;
            case BoundedOutcome::Kind::Unresolved:
                rr.outcome = "unresolved";
                rr.exceedance = false;
                break;
        }
        rep.total_iterations += bo.detail.iterations;
        rep.total_exact_pricing_calls += bo.detail.exact_pricing_calls;
        rep.total_heuristic_hits += bo.detail.heuristic_hits;
        rep.total_bnb_nodes += bo.detail.bnb_nodes;
        rep.columns_generated += bo.detail.columns_added;

        if (bo.kind == BoundedOutcome::Kind::Unresolved) {
            // A replication the clock cut short does not count as completed;
            // the run is partial.
            rep.partial = true;
            rep.replications.push_back(std::move(rr));
            if (bo.detail.timed_out && cfg.total_time_limit && elapsed() > *cfg.total_time_limit)
                break;
            continue;
        }

        ++rep.completed_replications;
        if (rr.exceedance) ++rep.exceedances;
        rep.replications.push_back(std::move(rr));

        if (cfg.purge_streak > 0) pool.purge(cfg.purge_streak);
    }
    if (rep.completed_replications < cfg.bootstrap) rep.partial = true;

    rep.p_value = rep.completed_replications > 0
                      ? static_cast<double>(rep.exceedances) /
                            static_cast<double>(rep.completed_replications)
                      : 0.0;
    rep.pool_size_final = pool.size();
    rep.wall_seconds = elapsed();
    return rep;
}

}  // namespace rumcg

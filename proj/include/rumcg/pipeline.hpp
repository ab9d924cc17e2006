#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rumcg/colgen.hpp"
#include "rumcg/dataset.hpp"
#include "rumcg/patches.hpp"

namespace rumcg {

// End-to-end bootstrap test of stochastic rationalizability.
//
// Statistic: J_N = N * min_{p>=0} ||pi_hat - A p||^2 over rational-type
// columns. The bootstrap recenters resampled frequencies around a tightened
// estimator eta_tau (types in a subset R' get a uniform weight floor tau/|R'|)
// and counts replications whose statistic reaches J_N.

enum class Mode { Exact, Heur, HeurUb, HeurBounds };
enum class TiePolicy { Error, Perturb };

struct TestConfig {
    std::optional<double> tau;       // nullopt = auto: sqrt(log N / N)
    int bootstrap = 1000;            // replications M
    std::uint64_t seed = 1;
    int subset_size = 1000;          // |R'| when sampling
    Mode mode = Mode::HeurBounds;
    double margin_delta = 1e-9;      // patch enumeration margin
    double tie_tol = 1e-9;           // boundary tolerance for bundles
    TiePolicy tie_policy = TiePolicy::Error;
    int heuristic_restarts = 10;
    double eps_cg = 1e-9;
    double kkt_tol = 1e-9;
    double zero_snap = 1e-12;
    int purge_streak = 50;           // 0 disables column purging
    std::uint64_t enumerate_limit = 10000;  // full R' enumeration below this
    bool prose_repair_weights = false;
    std::optional<double> replication_time_limit;  // seconds per replication
    std::optional<double> total_time_limit;        // seconds for the whole run
    // phase is "statistic", "tightened", or "replication <m>".
    std::function<void(const std::string& phase, const IterationTrace&)> trace;
};

struct ReplicationRecord {
    int index = 0;                   // 1-based
    std::string outcome;             // "exact" | "below_ref" | "exceeds_ref" | "unresolved"
    double value = 0.0;              // J*, upper bound, or lower bound
    bool exceedance = false;         // counted toward the p-value
    int iterations = 0;
    int exact_pricing_calls = 0;
    int heuristic_hits = 0;
};

struct TestReport {
    // Data shape
    int num_periods = 0;
    int num_goods = 0;
    long long n_total = 0;
    std::vector<long long> n_per_period;
    std::vector<int> patch_counts;
    std::vector<std::string> warnings;

    // Headline results
    double j_stat = 0.0;
    double tau = 0.0;
    bool tau_auto = false;
    double p_value = 0.0;
    int requested_replications = 0;
    int completed_replications = 0;
    long long exceedances = 0;
    bool partial = false;            // stopped early on the total time limit

    std::vector<double> pi_hat;
    std::vector<double> eta;         // unrestricted projection of pi_hat
    std::vector<double> eta_tau;     // tightened estimator
    bool negative_shift = false;     // tightening pushed some coordinate below 0

    int subset_size_used = 0;
    bool subset_enumerated = false;  // R' from full enumeration vs sampling

    std::vector<ReplicationRecord> replications;

    // Work counters (deterministic)
    long long total_iterations = 0;
    long long total_exact_pricing_calls = 0;
    long long total_heuristic_hits = 0;
    std::uint64_t total_bnb_nodes = 0;
    long long columns_generated = 0;
    int pool_size_final = 0;

    // Timing (excluded from determinism comparisons)
    double wall_seconds = 0.0;
};

// Building blocks, exposed for testing and reuse.

// J_N and the projection eta of the empirical frequencies.
struct StatisticResult {
    double j_stat = 0.0;
    std::vector<double> eta;
    ProjectionResult detail;
};
StatisticResult compute_statistic(const Frequencies& freq, ColumnPool& pool,
                                  const TestConfig& cfg, Rng& rng,
                                  std::optional<double> time_budget = std::nullopt);

// Tightened estimator: project pi_hat shifted by the subset's floor mass,
// then add the mass back.
struct TightenedResult {
    std::vector<double> eta_tau;
    std::vector<double> shift;       // length dim()
    bool negative_target = false;
    ProjectionResult detail;
};
TightenedResult tightened_estimator(const Frequencies& freq, double tau,
                                    const std::vector<ChoiceType>& subset, ColumnPool& pool,
                                    const TestConfig& cfg, Rng& rng,
                                    std::optional<double> time_budget = std::nullopt);

// Per-period multinomial resample of the observed counts; returns pi*.
std::vector<double> bootstrap_frequencies(const Frequencies& freq, Rng& rng);

// Bootstrap recentering: pi* - pi_hat + eta_tau.
std::vector<double> recenter(const std::vector<double>& pi_star, const std::vector<double>& pi_hat,
                             const std::vector<double>& eta_tau);

TestReport run_test(const Dataset& data, const TestConfig& cfg);

}  // namespace rumcg

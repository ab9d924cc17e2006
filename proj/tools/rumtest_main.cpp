#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "rumcg/choice_types.hpp"
#include "rumcg/dataset.hpp"
#include "rumcg/errors.hpp"
#include "rumcg/json_io.hpp"
#include "rumcg/patches.hpp"
#include "rumcg/pipeline.hpp"

namespace {

using namespace rumcg;

void emit(const nlohmann::ordered_json& j, const std::string& out_path) {
    if (out_path.empty() || out_path == "-")
        std::cout << j.dump(2) << '\n';
    else
        save_json(j, out_path);
}

int cmd_run(const std::string& prices_path, const std::string& choices_path,
            const std::string& counts_path, const std::string& tau_str, int bootstrap,
            std::uint64_t seed, const std::string& mode_str, int subset_size,
            double time_limit, double replication_time_limit, double margin, double tie_tol,
            const std::string& tie_policy, const std::string& repair_weights, int purge,
            int restarts, bool trace, bool table, const std::string& out_path) {
    Dataset data;
    data.prices = load_prices_csv(prices_path);
    data.num_periods = static_cast<int>(data.prices.size());
    data.num_goods = data.prices.empty() ? 0 : static_cast<int>(data.prices[0].size());
    if (choices_path.empty() == counts_path.empty())
        throw InputError("provide exactly one of --choices or --patch-counts");
    if (!choices_path.empty())
        data.bundles = load_bundles_csv(choices_path, data.num_periods, data.num_goods);
    else
        data.patch_counts = load_patch_counts_csv(counts_path, data.num_periods);

    TestConfig cfg;
    if (tau_str != "auto") {
        try {
            std::size_t pos = 0;
            cfg.tau = std::stod(tau_str, &pos);
            if (pos != tau_str.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw InputError("--tau expects a nonnegative number or 'auto'");
        }
        if (*cfg.tau < 0.0) throw InputError("--tau expects a nonnegative number or 'auto'");
    }
    cfg.bootstrap = bootstrap;
    cfg.seed = seed;
    cfg.mode = mode_from_name(mode_str);
    cfg.subset_size = subset_size;
    cfg.margin_delta = margin;
    cfg.tie_tol = tie_tol;
    if (tie_policy == "error") cfg.tie_policy = TiePolicy::Error;
    else if (tie_policy == "perturb") cfg.tie_policy = TiePolicy::Perturb;
    else throw InputError("--tie-policy expects error|perturb");
    if (repair_weights == "pseudo") cfg.prose_repair_weights = false;
    else if (repair_weights == "prose") cfg.prose_repair_weights = true;
    else throw InputError("--repair-weights expects pseudo|prose");
    cfg.purge_streak = purge;
    cfg.heuristic_restarts = restarts;
    if (time_limit > 0.0) cfg.total_time_limit = time_limit;
    if (replication_time_limit > 0.0) cfg.replication_time_limit = replication_time_limit;
    if (trace)
        cfg.trace = [](const std::string& phase, const IterationTrace& tr) {
            std::cerr << trace_to_json(phase, tr).dump() << '\n';
        };

    TestReport report = run_test(data, cfg);

    ReportInputs inputs;
    inputs.prices_path = prices_path;
    inputs.prices_digest = fnv1a_file(prices_path);
    if (!choices_path.empty()) {
        inputs.choices_path = choices_path;
        inputs.observations_digest = fnv1a_file(choices_path);
    } else {
        inputs.patch_counts_path = counts_path;
        inputs.observations_digest = fnv1a_file(counts_path);
    }
    emit(report_to_json(report, cfg, inputs), out_path);

    if (table) {
        std::printf("%-12s %-12s %-8s %-9s %s\n", "Mode", "Jstat", "Pval", "Time", "Completed");
        std::printf("%-12s %-12.6g %-8.4f %-9.1f %d/%d\n", mode_name(cfg.mode), report.j_stat,
                    report.p_value, report.wall_seconds, report.completed_replications,
                    report.requested_replications);
    } else {
        std::fprintf(stderr, "J_N = %.10g  p = %.4f  (%d/%d replications%s)\n", report.j_stat,
                     report.p_value, report.completed_replications, report.requested_replications,
                     report.partial ? ", partial" : "");
    }
    return report.partial ? 2 : 0;
}

int cmd_patches(const std::string& prices_path, double margin, const std::string& out_path) {
    auto prices = load_prices_csv(prices_path);
    PatchStructure ps = enumerate_patches(prices, margin);
    emit(patches_to_json(ps), out_path);
    for (const std::string& w : ps.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    return 0;
}

int cmd_enumerate(const std::string& patches_path, std::uint64_t limit,
                  const std::string& out_path) {
    PatchStructure ps = patches_from_json(load_json(patches_path));
    std::vector<ChoiceType> types = enumerate_rational_types(ps, limit);
    nlohmann::ordered_json j;
    j["schema"] = "rumtest-types-v1";
    j["num_periods"] = ps.num_periods;
    j["count"] = types.size();
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const ChoiceType& t : types) arr.push_back(t.picks);
    j["types"] = std::move(arr);
    emit(j, out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonparametric bootstrap test of stochastic rationalizability "
                 "for revealed price preference"};
    app.require_subcommand(1);

    // run
    std::string prices_path, choices_path, counts_path, out_path;
    std::string tau_str = "auto", mode_str = "heur-bounds";
    std::string tie_policy = "error", repair_weights = "pseudo";
    int bootstrap = 1000, subset_size = 1000, purge = 50, restarts = 10;
    std::uint64_t seed = 1;
    double time_limit = 0.0, replication_time_limit = 0.0;
    double margin = 1e-9, tie_tol = 1e-9;
    bool trace = false, table = false;

    CLI::App* run = app.add_subcommand("run", "Run the bootstrap test on a dataset");
    run->add_option("--prices", prices_path, "Prices CSV (period,p1,...,pL)")->required();
    run->add_option("--choices", choices_path, "Observed bundles CSV (period,q1,...,qL)");
    run->add_option("--patch-counts", counts_path,
                    "Pre-aggregated patch counts CSV (period,patch_index,count)");
    run->add_option("--tau", tau_str, "Tightening weight, or 'auto' for sqrt(log N / N)");
    run->add_option("--bootstrap", bootstrap, "Number of bootstrap replications");
    run->add_option("--seed", seed, "RNG seed");
    run->add_option("--mode", mode_str, "exact|heur|heur-ub|heur-bounds");
    run->add_option("--subset-size", subset_size, "Rational types sampled for tightening");
    run->add_option("--time-limit", time_limit, "Wall-clock cap in seconds (0 = none)");
    run->add_option("--replication-time-limit", replication_time_limit,
                    "Per-replication cap in seconds (0 = none)");
    run->add_option("--margin", margin, "Patch enumeration margin");
    run->add_option("--tie-tol", tie_tol, "Boundary tolerance for bundle classification");
    run->add_option("--tie-policy", tie_policy, "error|perturb on boundary bundles");
    run->add_option("--repair-weights", repair_weights, "pseudo|prose sampler scoring");
    run->add_option("--purge", purge, "Purge columns unused for this many solves (0 = keep)");
    run->add_option("--restarts", restarts, "Best-insertion restarts per pricing round");
    run->add_flag("--trace", trace, "Line-delimited JSON iteration trace on stderr");
    run->add_flag("--table", table, "Print a summary table to stdout");
    run->add_option("--out", out_path, "Report path (default stdout)");

    // patches
    std::string p_prices, p_out;
    double p_margin = 1e-9;
    CLI::App* patches = app.add_subcommand("patches", "Enumerate expenditure patches");
    patches->add_option("--prices", p_prices, "Prices CSV")->required();
    patches->add_option("--margin", p_margin, "Separation margin");
    patches->add_option("--out", p_out, "Output path (default stdout)");

    // enumerate
    std::string e_patches, e_out;
    std::uint64_t e_limit = 1000000;
    CLI::App* enumerate = app.add_subcommand("enumerate", "List rational choice types");
    enumerate->add_option("--patches", e_patches, "Patches JSON from the patches subcommand")
        ->required();
    enumerate->add_option("--limit", e_limit, "Refuse when the raw type space exceeds this");
    enumerate->add_option("--out", e_out, "Output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 3;
    }

    try {
        if (run->parsed())
            return cmd_run(prices_path, choices_path, counts_path, tau_str, bootstrap, seed,
                           mode_str, subset_size, time_limit, replication_time_limit, margin,
                           tie_tol, tie_policy, repair_weights, purge, restarts, trace, table,
                           out_path);
        if (patches->parsed()) return cmd_patches(p_prices, p_margin, p_out);
        if (enumerate->parsed()) return cmd_enumerate(e_patches, e_limit, e_out);
    } catch (const NumericalFailure& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
    return 0;
}

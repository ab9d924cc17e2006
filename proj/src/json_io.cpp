#include "rumcg/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "rumcg/errors.hpp"

namespace rumcg {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

ordered_json patches_to_json(const PatchStructure& ps) {
    ordered_json j;
    j["schema"] = "rumtest-patches-v1";
    j["num_periods"] = ps.num_periods;
    j["num_goods"] = ps.num_goods;
    j["margin_floor"] = ps.margin_floor;
    j["prices"] = ps.prices;
    ordered_json periods = ordered_json::array();
    for (int t = 0; t < ps.num_periods; ++t) {
        ordered_json plist = ordered_json::array();
        for (const Patch& p : ps.periods[t]) {
            ordered_json pj;
            pj["signs"] = p.signs;
            pj["witness"] = p.witness;
            if (std::isfinite(p.margin))
                pj["margin"] = p.margin;
            else
                pj["margin"] = nullptr;  // T = 1: unconstrained margin
            plist.push_back(std::move(pj));
        }
        periods.push_back(std::move(plist));
    }
    j["periods"] = std::move(periods);
    j["warnings"] = ps.warnings;
    return j;
}

PatchStructure patches_from_json(const json& j) {
    try {
        if (j.at("schema").get<std::string>() != "rumtest-patches-v1")
            throw InputError("unsupported patches schema");
        PatchStructure ps;
        ps.num_periods = j.at("num_periods").get<int>();
        ps.num_goods = j.at("num_goods").get<int>();
        ps.margin_floor = j.at("margin_floor").get<double>();
        ps.prices = j.at("prices").get<std::vector<std::vector<double>>>();
        const auto& periods = j.at("periods");
        if (static_cast<int>(periods.size()) != ps.num_periods)
            throw InputError("patches file: period count mismatch");
        ps.periods.resize(ps.num_periods);
        for (int t = 0; t < ps.num_periods; ++t) {
            for (const auto& pj : periods[t]) {
                Patch p;
                p.signs = pj.at("signs").get<std::vector<std::int8_t>>();
                p.witness = pj.at("witness").get<std::vector<double>>();
                const auto& m = pj.at("margin");
                p.margin = m.is_null() ? std::numeric_limits<double>::infinity()
                                       : m.get<double>();
                if (static_cast<int>(p.signs.size()) != ps.num_periods)
                    throw InputError("patches file: sign vector length mismatch");
                ps.periods[t].push_back(std::move(p));
            }
            if (ps.periods[t].empty()) throw InputError("patches file: empty period");
        }
        if (j.contains("warnings")) ps.warnings = j.at("warnings").get<std::vector<std::string>>();
        ps.build_index();
        return ps;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed patches file: ") + e.what());
    }
}

void save_json(const ordered_json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw InputError("write failed for " + path);
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

const char* mode_name(Mode mode) {
    switch (mode) {
        case Mode::Exact: return "exact";
        case Mode::Heur: return "heur";
        case Mode::HeurUb: return "heur-ub";
        case Mode::HeurBounds: return "heur-bounds";
    }
    return "?";
}

Mode mode_from_name(const std::string& name) {
    if (name == "exact") return Mode::Exact;
    if (name == "heur") return Mode::Heur;
    if (name == "heur-ub") return Mode::HeurUb;
    if (name == "heur-bounds") return Mode::HeurBounds;
    throw InputError("unknown mode '" + name + "' (expected exact|heur|heur-ub|heur-bounds)");
}

ordered_json report_to_json(const TestReport& report, const TestConfig& cfg,
                            const ReportInputs& inputs) {
    ordered_json j;
    j["schema"] = "rumtest-report-v1";

    ordered_json jc;
    jc["mode"] = mode_name(cfg.mode);
    jc["tau"] = report.tau;
    jc["tau_auto"] = report.tau_auto;
    jc["bootstrap"] = cfg.bootstrap;
    jc["seed"] = cfg.seed;
    jc["subset_size"] = cfg.subset_size;
    jc["margin_delta"] = cfg.margin_delta;
    jc["tie_tol"] = cfg.tie_tol;
    jc["tie_policy"] = cfg.tie_policy == TiePolicy::Perturb ? "perturb" : "error";
    jc["heuristic_restarts"] = cfg.heuristic_restarts;
    jc["eps_cg"] = cfg.eps_cg;
    jc["kkt_tol"] = cfg.kkt_tol;
    jc["zero_snap"] = cfg.zero_snap;
    jc["purge_streak"] = cfg.purge_streak;
    jc["enumerate_limit"] = cfg.enumerate_limit;
    jc["repair_weights"] = cfg.prose_repair_weights ? "prose" : "pseudo";
    if (cfg.replication_time_limit) jc["replication_time_limit"] = *cfg.replication_time_limit;
    if (cfg.total_time_limit) jc["total_time_limit"] = *cfg.total_time_limit;
    j["config"] = std::move(jc);

    ordered_json ji;
    if (!inputs.prices_path.empty()) {
        ji["prices_path"] = inputs.prices_path;
        ji["prices_fnv1a"] = hex64(inputs.prices_digest);
    }
    if (!inputs.choices_path.empty()) {
        ji["choices_path"] = inputs.choices_path;
        ji["choices_fnv1a"] = hex64(inputs.observations_digest);
    }
    if (!inputs.patch_counts_path.empty()) {
        ji["patch_counts_path"] = inputs.patch_counts_path;
        ji["patch_counts_fnv1a"] = hex64(inputs.observations_digest);
    }
    j["inputs"] = std::move(ji);

    ordered_json jd;
    jd["num_periods"] = report.num_periods;
    jd["num_goods"] = report.num_goods;
    jd["n_total"] = report.n_total;
    jd["n_per_period"] = report.n_per_period;
    jd["patch_counts"] = report.patch_counts;
    jd["warnings"] = report.warnings;
    j["data"] = std::move(jd);

    ordered_json jr;
    jr["j_stat"] = report.j_stat;
    jr["p_value"] = report.p_value;
    jr["requested_replications"] = report.requested_replications;
    jr["completed_replications"] = report.completed_replications;
    jr["exceedances"] = report.exceedances;
    jr["partial"] = report.partial;
    jr["subset_size_used"] = report.subset_size_used;
    jr["subset_enumerated"] = report.subset_enumerated;
    jr["negative_shift"] = report.negative_shift;
    jr["pi_hat"] = report.pi_hat;
    jr["eta"] = report.eta;
    jr["eta_tau"] = report.eta_tau;
    j["results"] = std::move(jr);

    ordered_json reps = ordered_json::array();
    for (const ReplicationRecord& rr : report.replications) {
        ordered_json e;
        e["index"] = rr.index;
        e["outcome"] = rr.outcome;
        e["value"] = rr.value;
        e["exceedance"] = rr.exceedance;
        e["iterations"] = rr.iterations;
        e["exact_pricing_calls"] = rr.exact_pricing_calls;
        e["heuristic_hits"] = rr.heuristic_hits;
        reps.push_back(std::move(e));
    }
    j["replications"] = std::move(reps);

    ordered_json jw;
    jw["total_iterations"] = report.total_iterations;
    jw["total_exact_pricing_calls"] = report.total_exact_pricing_calls;
    jw["total_heuristic_hits"] = report.total_heuristic_hits;
    jw["total_bnb_nodes"] = report.total_bnb_nodes;
    jw["columns_generated"] = report.columns_generated;
    jw["pool_size_final"] = report.pool_size_final;
    j["counters"] = std::move(jw);

    ordered_json jt;
    jt["wall_seconds"] = report.wall_seconds;
    j["timing"] = std::move(jt);
    return j;
}

ordered_json trace_to_json(const std::string& phase, const IterationTrace& tr) {
    ordered_json j;
    j["phase"] = phase;
    j["iteration"] = tr.iteration;
    j["objective"] = tr.objective;
    j["threshold"] = tr.threshold;
    j["event"] = tr.event;
    j["column_added"] = tr.column_added;
    j["heuristic_hit"] = tr.heuristic_hit;
    j["exact_ran"] = tr.exact_ran;
    if (tr.exact_value) j["exact_value"] = *tr.exact_value;
    if (tr.lower_bound_value) j["lower_bound"] = *tr.lower_bound_value;
    if (tr.upper_bound_value) j["upper_bound"] = *tr.upper_bound_value;
    return j;
}

}  // namespace rumcg

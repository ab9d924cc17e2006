#pragma once

#include <string>

#include "json.hpp"
#include "rumcg/colgen.hpp"
#include "rumcg/patches.hpp"
#include "rumcg/pipeline.hpp"

namespace rumcg {

// Versioned patch-structure dump: enough to rebuild the partition (and run
// type enumeration) without touching the original prices file.
nlohmann::ordered_json patches_to_json(const PatchStructure& ps);
PatchStructure patches_from_json(const nlohmann::json& j);

void save_json(const nlohmann::ordered_json& j, const std::string& path);
nlohmann::json load_json(const std::string& path);

// Extra run context echoed into the report (input paths and digests).
struct ReportInputs {
    std::string prices_path;
    std::string choices_path;       // empty when counts were used
    std::string patch_counts_path;  // empty when bundles were used
    std::uint64_t prices_digest = 0;
    std::uint64_t observations_digest = 0;
};

// Deterministic report serialization: every field except the "timing" object
// is reproducible for identical inputs and seed.
nlohmann::ordered_json report_to_json(const TestReport& report, const TestConfig& cfg,
                                      const ReportInputs& inputs);

// One line-delimited JSON trace record.
nlohmann::ordered_json trace_to_json(const std::string& phase, const IterationTrace& tr);

const char* mode_name(Mode mode);
Mode mode_from_name(const std::string& name);

}  // namespace rumcg

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rumcg {

// Cross-sectional consumption data: one price vector per observation period
// and, per period, either the observed bundles themselves or pre-aggregated
// patch counts (the two input routes of the CLI).
struct Dataset {
    int num_periods = 0;  // T
    int num_goods = 0;    // L
    std::vector<std::vector<double>> prices;  // T x L, strictly positive

    // Route 1: raw bundles per period (num_obs x L each, may be empty when
    // counts are supplied instead).
    std::vector<std::vector<std::vector<double>>> bundles;

    // Route 2: counts indexed by (period, patch index in enumeration order).
    // Empty when bundles are supplied.
    std::vector<std::vector<long long>> patch_counts;

    bool has_bundles() const { return !bundles.empty(); }
    bool has_counts() const { return !patch_counts.empty(); }

    // Throws InputError on dimension mismatches, non-positive prices,
    // negative bundles/counts, or bundles with zero expenditure everywhere.
    void validate() const;
};

// CSV loaders. Formats (header required, one row per record):
//   prices:  period,p1,...,pL     periods 1..T in order, L inferred
//   bundles: period,q1,...,qL     any number of rows per period
//   counts:  period,patch_index,count   patch_index is 0-based
std::vector<std::vector<double>> load_prices_csv(const std::string& path);
std::vector<std::vector<std::vector<double>>> load_bundles_csv(const std::string& path, int num_periods, int num_goods);
std::vector<std::vector<long long>> load_patch_counts_csv(const std::string& path, int num_periods);

// FNV-1a over a file's raw bytes, for the report's input digests.
std::uint64_t fnv1a_file(const std::string& path);
std::uint64_t fnv1a_bytes(const void* data, std::size_t len);

}  // namespace rumcg

#include "rumcg/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rumcg/errors.hpp"

namespace rumcg {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // Trim surrounding whitespace (files written by hand or by spreadsheets).
        std::size_t a = field.find_first_not_of(" \t\r");
        std::size_t b = field.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? std::string() : field.substr(a, b - a + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw InputError("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw InputError("malformed number '" + s + "' in " + where);
    }
}

long long parse_ll(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw InputError("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw InputError("malformed integer '" + s + "' in " + where);
    }
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;  // skip blanks
        lines.push_back(line);
    }
    if (lines.empty()) throw InputError(path + " is empty");
    return lines;
}

}  // namespace

void Dataset::validate() const {
    const int T = num_periods;
    const int L = num_goods;
    if (T < 1 || L < 1) throw InputError("dataset needs at least one period and one good");
    if (static_cast<int>(prices.size()) != T) throw InputError("price matrix row count != T");
    for (int t = 0; t < T; ++t) {
        if (static_cast<int>(prices[t].size()) != L) throw InputError("price row length != L");
        for (double p : prices[t])
            if (!(p > 0.0)) throw InputError("prices must be strictly positive");
    }
    if (has_bundles() == has_counts())
        throw InputError("dataset needs exactly one of bundles or patch counts");
    if (has_bundles()) {
        if (static_cast<int>(bundles.size()) != T) throw InputError("bundle list count != T");
        for (int t = 0; t < T; ++t) {
            if (bundles[t].empty()) throw InputError("period " + std::to_string(t + 1) + " has no observations");
            for (const auto& q : bundles[t]) {
                if (static_cast<int>(q.size()) != L) throw InputError("bundle length != L");
                double expend = 0.0;
                for (int l = 0; l < L; ++l) {
                    if (q[l] < 0.0) throw InputError("bundles must be nonnegative");
                    expend += prices[t][l] * q[l];
                }
                if (!(expend > 0.0)) throw InputError("bundle with zero expenditure");
            }
        }
    } else {
        if (static_cast<int>(patch_counts.size()) != T) throw InputError("patch count list != T");
        for (int t = 0; t < T; ++t) {
            long long n = 0;
            for (long long c : patch_counts[t]) {
                if (c < 0) throw InputError("patch counts must be nonnegative");
                n += c;
            }
            if (n <= 0) throw InputError("period " + std::to_string(t + 1) + " has no observations");
        }
    }
}

std::vector<std::vector<double>> load_prices_csv(const std::string& path) {
    auto lines = read_lines(path);
    auto header = split_csv_line(lines[0]);
    if (header.size() < 2 || header[0] != "period")
        throw InputError(path + ": expected header period,p1,...,pL");
    const int L = static_cast<int>(header.size()) - 1;
    std::vector<std::vector<double>> prices;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        auto f = split_csv_line(lines[k]);
        if (static_cast<int>(f.size()) != L + 1)
            throw InputError(path + ": row with wrong field count");
        long long period = parse_ll(f[0], path);
        if (period != static_cast<long long>(prices.size()) + 1)
            throw InputError(path + ": periods must be 1..T in order");
        std::vector<double> row(L);
        for (int l = 0; l < L; ++l) row[l] = parse_double(f[l + 1], path);
        prices.push_back(std::move(row));
    }
    return prices;
}

std::vector<std::vector<std::vector<double>>> load_bundles_csv(const std::string& path,
                                                               int num_periods, int num_goods) {
    auto lines = read_lines(path);
    auto header = split_csv_line(lines[0]);
    if (header.size() < 2 || header[0] != "period")
        throw InputError(path + ": expected header period,q1,...,qL");
    if (static_cast<int>(header.size()) - 1 != num_goods)
        throw InputError(path + ": good count does not match prices file");
    std::vector<std::vector<std::vector<double>>> bundles(num_periods);
    for (std::size_t k = 1; k < lines.size(); ++k) {
        auto f = split_csv_line(lines[k]);
        if (static_cast<int>(f.size()) != num_goods + 1)
            throw InputError(path + ": row with wrong field count");
        long long period = parse_ll(f[0], path);
        if (period < 1 || period > num_periods)
            throw InputError(path + ": period out of range");
        std::vector<double> q(num_goods);
        for (int l = 0; l < num_goods; ++l) q[l] = parse_double(f[l + 1], path);
        bundles[period - 1].push_back(std::move(q));
    }
    return bundles;
}

std::vector<std::vector<long long>> load_patch_counts_csv(const std::string& path, int num_periods) {
    auto lines = read_lines(path);
    auto header = split_csv_line(lines[0]);
    if (header.size() != 3 || header[0] != "period" || header[1] != "patch_index" || header[2] != "count")
        throw InputError(path + ": expected header period,patch_index,count");
    std::vector<std::vector<long long>> counts(num_periods);
    for (std::size_t k = 1; k < lines.size(); ++k) {
        auto f = split_csv_line(lines[k]);
        if (f.size() != 3) throw InputError(path + ": row with wrong field count");
        long long period = parse_ll(f[0], path);
        long long idx = parse_ll(f[1], path);
        long long c = parse_ll(f[2], path);
        if (period < 1 || period > num_periods)
            throw InputError(path + ": period out of range");
        if (idx < 0) throw InputError(path + ": patch_index must be >= 0");
        auto& row = counts[period - 1];
        if (static_cast<long long>(row.size()) <= idx) row.resize(idx + 1, 0);
        row[idx] += c;
    }
    return counts;
}

std::uint64_t fnv1a_bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

}  // namespace rumcg

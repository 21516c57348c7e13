#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "evadelab/core.hpp"

namespace evadelab {

// Raw feature cells distinguish three pathological states on top of finite
// reals: null (encoded as quiet NaN), +inf and -inf. The cleaning stage is
// defined over exactly these states, so loading must not coerce them.
inline bool is_null_value(double v) { return std::isnan(v); }

inline bool values_equal(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
    return a == b;
}

/// One labeled flow record; values are aligned with the owning dataset's
/// feature_names. Label: 0 = benign, 1 = malicious.
struct RawRecord {
    std::vector<double> values;
    int label = 0;
};

/// One day's worth of labeled records, the unit of retraining.
struct DayDataset {
    int day_index = 0;
    std::vector<std::string> feature_names;
    std::vector<RawRecord> records;
};

inline bool datasets_equal(const DayDataset& a, const DayDataset& b) {
    if (a.day_index != b.day_index || a.feature_names != b.feature_names ||
        a.records.size() != b.records.size())
        return false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        if (a.records[i].label != b.records[i].label) return false;
        if (a.records[i].values.size() != b.records[i].values.size()) return false;
        for (std::size_t j = 0; j < a.records[i].values.size(); ++j)
            if (!values_equal(a.records[i].values[j], b.records[i].values[j])) return false;
    }
    return true;
}

struct SplitPair {
    std::vector<RawRecord> train;
    std::vector<RawRecord> test;
    std::int64_t seed = 0;
};

/// Desk-scale stand-in for the day-partitioned flow corpus. Records are
/// drawn from class-conditional Gaussians whose means move by drift_step
/// per day in every coordinate (benign upward everywhere, malicious
/// downward on every third feature), so the discriminative structure —
/// not just the location — changes between days.
struct SynthConfig {
    int days = 2;
    int records_per_day = 5000;
    int raw_feature_count = 40;
    double benign_fraction = 0.64;
    double drift_step = 3.0;
    double noise_std = 1.0;
    bool inject_pathologies = false;
    std::int64_t seed = 42;
};

inline constexpr const char* kNullColumnName = "__null__";
inline constexpr const char* kConstColumnName = "__const__";
inline constexpr const char* kDupColumnName = "__dup__";

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

inline std::vector<std::string_view> split_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

}  // namespace detail

/// Parses one numeric CSV cell. Empty or unparseable cells become null
/// (NaN); "inf"/"Infinity" tokens become +inf, with a sign prefix -inf.
inline double parse_cell(std::string_view raw) {
    std::string_view s = detail::trim(raw);
    constexpr double kNull = std::numeric_limits<double>::quiet_NaN();
    if (s.empty()) return kNull;
    bool neg = false;
    std::string_view body = s;
    if (body.front() == '+' || body.front() == '-') {
        neg = body.front() == '-';
        body.remove_prefix(1);
    }
    if (detail::iequals(body, "inf") || detail::iequals(body, "infinity"))
        return neg ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    if (detail::iequals(body, "nan")) return kNull;
    double value = 0.0;
    const char* first = body.data();
    const char* last = body.data() + body.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return kNull;
    return neg ? -value : value;
}

/// Shortest round-trip formatting; nulls become empty cells and infinities
/// the "Infinity" token, so save -> load is lossless.
inline std::string format_cell(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

/// Loads one day file. The label cell "Benign" (case-insensitive) maps to
/// 0 and any other non-empty label to 1, collapsing the source corpus'
/// six classes onto the binary target.
inline DayDataset load_day_csv(const std::string& path, int day_index,
                               const std::string& label_column = "Label") {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open CSV file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file (no header row)");
    auto header = detail::split_line(line);

    std::size_t label_idx = header.size();
    DayDataset ds;
    ds.day_index = day_index;
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string name(detail::trim(header[i]));
        if (name == label_column) {
            if (label_idx != header.size())
                throw DataError(path + ": duplicate label column '" + label_column + "'");
            label_idx = i;
            continue;
        }
        if (!seen.insert(name).second)
            throw DataError(path + ": duplicate feature column '" + name + "'");
        ds.feature_names.push_back(std::move(name));
    }
    if (label_idx == header.size())
        throw DataError(path + ": missing label column '" + label_column + "'");
    if (ds.feature_names.empty())
        throw DataError(path + ": header has no feature columns");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto cells = detail::split_line(line);
        if (cells.size() != header.size())
            throw DataError(path + ": row " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " columns, expected " +
                            std::to_string(header.size()));
        RawRecord rec;
        rec.values.reserve(ds.feature_names.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i == label_idx) {
                auto label = detail::trim(cells[i]);
                if (label.empty())
                    throw DataError(path + ": row " + std::to_string(line_no) + " has an empty label");
                rec.label = detail::iequals(label, "Benign") ? 0 : 1;
            } else {
                rec.values.push_back(parse_cell(cells[i]));
            }
        }
        ds.records.push_back(std::move(rec));
    }
    if (ds.records.empty()) throw DataError(path + ": no data rows after the header");
    return ds;
}

inline void save_day_csv(const DayDataset& ds, const std::string& path,
                         const std::string& label_column = "Label") {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write CSV file: " + path);
    for (std::size_t i = 0; i < ds.feature_names.size(); ++i)
        out << ds.feature_names[i] << ',';
    out << label_column << '\n';
    for (const auto& rec : ds.records) {
        for (double v : rec.values) out << format_cell(v) << ',';
        out << (rec.label == 0 ? "Benign" : "Malicious") << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

inline std::size_t train_count(std::size_t total, double ratio) {
    return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(total)));
}

inline SplitPair split_train_test(const DayDataset& ds, double ratio, std::int64_t seed) {
    if (ds.records.empty()) throw std::invalid_argument("split_train_test: empty dataset");
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("split_train_test: ratio must be in (0,1)");
    const std::size_t n = ds.records.size();
    const std::size_t ntr = train_count(n, ratio);
    if (ntr == 0 || ntr == n)
        throw std::invalid_argument("split_train_test: split would leave one side empty");

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    std::shuffle(idx.begin(), idx.end(), rng);

    SplitPair sp;
    sp.seed = seed;
    sp.train.reserve(ntr);
    sp.test.reserve(n - ntr);
    for (std::size_t i = 0; i < n; ++i)
        (i < ntr ? sp.train : sp.test).push_back(ds.records[idx[i]]);
    return sp;
}

namespace detail {

// Fixed per-feature geometry of the synthetic stream. Scales and
// separations vary across features so a constant raw drift_step hits
// features unevenly after day-0 min-max scaling.
struct SynthGeometry {
    double sigma;        // class-conditional std dev
    double separation;   // |mu_m - mu_b| on day 0
    double direction;    // +1: malicious above benign, -1: below
    double center;       // raw offset
    double drift_benign;     // sign of the benign mean's per-day step
    double drift_malicious;  // sign of the malicious mean's per-day step
};

inline SynthGeometry synth_geometry(int f, double noise_std) {
    SynthGeometry g;
    g.sigma = noise_std * (1.0 + static_cast<double>(f % 4));
    const bool weak = f % 5 == 4;
    g.separation = (weak ? 0.3 : 2.0) * g.sigma;
    g.direction = f % 2 == 0 ? 1.0 : -1.0;
    g.center = static_cast<double>(f);
    g.drift_benign = 1.0;
    g.drift_malicious = f % 3 == 0 ? -1.0 : 1.0;
    return g;
}

inline std::string synth_feature_name(int f) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "f%02d", f);
    return buf;
}

}  // namespace detail

/// Generates cfg.days datasets. Benign counts per day are exact
/// (round(benign_fraction * records_per_day)); the whole stream is a pure
/// function of cfg.
inline std::vector<DayDataset> generate_synthetic_days(const SynthConfig& cfg) {
    if (cfg.days < 1 || cfg.records_per_day < 1 || cfg.raw_feature_count < 1)
        throw std::invalid_argument("generate_synthetic_days: counts must be positive");
    if (!(cfg.benign_fraction > 0.0 && cfg.benign_fraction < 1.0))
        throw std::invalid_argument("generate_synthetic_days: benign_fraction must be in (0,1)");
    if (!(cfg.noise_std > 0.0))
        throw std::invalid_argument("generate_synthetic_days: noise_std must be positive");
    if (cfg.drift_step < 0.0)
        throw std::invalid_argument("generate_synthetic_days: drift_step must be non-negative");

    const int F = cfg.raw_feature_count;
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(F) + 3);
    for (int f = 0; f < F; ++f) names.push_back(detail::synth_feature_name(f));
    if (cfg.inject_pathologies) {
        names.emplace_back(kNullColumnName);
        names.emplace_back(kConstColumnName);
        names.emplace_back(kDupColumnName);
    }

    const auto n = static_cast<std::size_t>(cfg.records_per_day);
    const auto nb = static_cast<std::size_t>(
        std::llround(cfg.benign_fraction * static_cast<double>(cfg.records_per_day)));

    std::vector<DayDataset> days;
    days.reserve(static_cast<std::size_t>(cfg.days));
    for (int day = 0; day < cfg.days; ++day) {
        std::mt19937_64 rng(mix_seed(static_cast<std::uint64_t>(cfg.seed),
                                     static_cast<std::uint64_t>(day)));
        std::normal_distribution<double> unit(0.0, 1.0);

        DayDataset ds;
        ds.day_index = day;
        ds.feature_names = names;
        ds.records.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const bool benign = i < nb;
            RawRecord& rec = ds.records[i];
            rec.label = benign ? 0 : 1;
            rec.values.reserve(names.size());
            for (int f = 0; f < F; ++f) {
                const auto g = detail::synth_geometry(f, cfg.noise_std);
                const double half = g.direction * g.separation / 2.0;
                double mean = benign ? g.center - half : g.center + half;
                const double drift_dir = benign ? g.drift_benign : g.drift_malicious;
                mean += cfg.drift_step * static_cast<double>(day) * drift_dir;
                rec.values.push_back(mean + g.sigma * unit(rng));
            }
            if (cfg.inject_pathologies) {
                rec.values.push_back(std::numeric_limits<double>::quiet_NaN());
                rec.values.push_back(7.0);
                rec.values.push_back(rec.values[0]);  // duplicate of f00
            }
        }
        std::shuffle(ds.records.begin(), ds.records.end(), rng);
        days.push_back(std::move(ds));
    }
    return days;
}

}  // namespace evadelab

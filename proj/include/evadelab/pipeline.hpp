#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "evadelab/core.hpp"
#include "evadelab/dataio.hpp"
#include "evadelab/forest.hpp"

#include <json.hpp>

namespace evadelab {

enum class DropReason { has_null, has_inf, constant };

inline const char* to_string(DropReason r) {
    switch (r) {
        case DropReason::has_null: return "has_null";
        case DropReason::has_inf: return "has_inf";
        case DropReason::constant: return "constant";
    }
    return "?";
}

inline DropReason drop_reason_from_string(const std::string& s) {
    if (s == "has_null") return DropReason::has_null;
    if (s == "has_inf") return DropReason::has_inf;
    if (s == "constant") return DropReason::constant;
    throw DataError("unknown drop reason: " + s);
}

struct CleaningSpec {
    struct Dropped {
        std::string name;
        DropReason reason;
        bool operator==(const Dropped&) const = default;
    };
    std::vector<Dropped> dropped;
    std::vector<std::string> kept;
};

struct CorrelationGroups {
    std::vector<std::vector<std::string>> groups;
    std::vector<std::string> representatives;  // parallel to groups
    double threshold = 0.9;
};

struct ImportanceRanking {
    std::map<std::string, double> scores;
    std::vector<std::string> order;  // descending score, ties by name
};

/// Fitted preprocessing chain: cleaning -> correlation grouping ->
/// forest-ranked top-k selection -> min-max scaling to [0,1].
struct FeaturePipeline {
    CleaningSpec cleaning;
    CorrelationGroups groups;
    ImportanceRanking ranking;
    std::vector<std::string> selected;
    struct MinMax {
        double min = 0.0;
        double max = 1.0;
    };
    std::map<std::string, MinMax> scaler;
    std::size_t k = 0;
};

struct PipelineParams {
    std::size_t k = 32;
    double correlation_threshold = 0.9;
    int forest_trees = 50;
    int forest_max_depth = 8;
    std::int64_t seed = 0;
};

namespace detail {

inline std::vector<double> extract_column(const std::vector<RawRecord>& records, std::size_t idx) {
    std::vector<double> col;
    col.reserve(records.size());
    for (const auto& rec : records) col.push_back(rec.values[idx]);
    return col;
}

inline std::unordered_map<std::string, std::size_t> name_index(
    const std::vector<std::string>& names) {
    std::unordered_map<std::string, std::size_t> idx;
    idx.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) idx.emplace(names[i], i);
    return idx;
}

}  // namespace detail

/// A feature is dropped iff it contains a null, an infinity, or a single
/// repeated value; reason precedence has_null > has_inf > constant.
inline CleaningSpec fit_cleaning(const std::vector<RawRecord>& train,
                                 const std::vector<std::string>& feature_names) {
    if (train.empty()) throw std::invalid_argument("fit_cleaning: empty training set");
    CleaningSpec spec;
    for (std::size_t f = 0; f < feature_names.size(); ++f) {
        bool any_null = false, any_inf = false, constant = true;
        const double first = train.front().values[f];
        for (const auto& rec : train) {
            const double v = rec.values[f];
            if (std::isnan(v)) any_null = true;
            else if (std::isinf(v)) any_inf = true;
            if (!values_equal(v, first)) constant = false;
        }
        if (any_null)
            spec.dropped.push_back({feature_names[f], DropReason::has_null});
        else if (any_inf)
            spec.dropped.push_back({feature_names[f], DropReason::has_inf});
        else if (constant)
            spec.dropped.push_back({feature_names[f], DropReason::constant});
        else
            spec.kept.push_back(feature_names[f]);
    }
    if (spec.kept.empty()) throw DataError("fit_cleaning: all features dropped");
    return spec;
}

/// Symmetric Pearson matrix over already-cleaned columns; unit diagonal.
inline Matrix pearson_matrix(const std::vector<std::vector<double>>& columns) {
    const std::size_t f = columns.size();
    Matrix m(f, f);
    for (std::size_t i = 0; i < f; ++i) {
        m(i, i) = 1.0;
        for (std::size_t j = i + 1; j < f; ++j) {
            const double r = pearson(columns[i], columns[j]);
            m(i, j) = r;
            m(j, i) = r;
        }
    }
    return m;
}

/// Greedy single pass in the given name order: each still-ungrouped
/// feature seeds a group and absorbs every later ungrouped feature with
/// |r| >= threshold against the seed.
inline CorrelationGroups group_correlated(const Matrix& matrix,
                                          const std::vector<std::string>& names,
                                          double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw std::invalid_argument("group_correlated: threshold must be in (0,1]");
    if (matrix.rows != names.size() || matrix.cols != names.size())
        throw std::invalid_argument("group_correlated: matrix/name size mismatch");

    CorrelationGroups out;
    out.threshold = threshold;
    std::vector<bool> grouped(names.size(), false);
    for (std::size_t seed = 0; seed < names.size(); ++seed) {
        if (grouped[seed]) continue;
        std::vector<std::string> group{names[seed]};
        grouped[seed] = true;
        for (std::size_t other = seed + 1; other < names.size(); ++other) {
            if (grouped[other]) continue;
            if (std::abs(matrix(seed, other)) >= threshold) {
                group.push_back(names[other]);
                grouped[other] = true;
            }
        }
        out.representatives.push_back(names[seed]);
        out.groups.push_back(std::move(group));
    }
    return out;
}

inline ImportanceRanking forest_importance(const std::vector<std::vector<double>>& columns,
                                           const std::vector<int>& labels,
                                           const std::vector<std::string>& names, int trees,
                                           int max_depth, std::int64_t seed) {
    if (names.size() != columns.size())
        throw std::invalid_argument("forest_importance: name/column count mismatch");
    auto raw = forest_importance_scores(columns, labels, trees, max_depth, seed);
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    if (total > 0.0)
        for (double& v : raw) v /= total;

    ImportanceRanking ranking;
    for (std::size_t i = 0; i < names.size(); ++i) ranking.scores[names[i]] = raw[i];
    ranking.order.assign(names.begin(), names.end());
    std::sort(ranking.order.begin(), ranking.order.end(),
              [&ranking](const std::string& a, const std::string& b) {
                  const double sa = ranking.scores[a];
                  const double sb = ranking.scores[b];
                  if (sa != sb) return sa > sb;
                  return a < b;
              });
    return ranking;
}

/// Full fit: clean, group correlated features, keep one representative
/// per group (the member most correlated with the label), rank the
/// representatives with the forest, select the top k and fit the min-max
/// scaler on them.
inline FeaturePipeline fit_pipeline(const std::vector<RawRecord>& train,
                                    const std::vector<std::string>& feature_names,
                                    const PipelineParams& params) {
    if (params.k < 1) throw std::invalid_argument("fit_pipeline: k must be >= 1");
    const bool has_pos = std::any_of(train.begin(), train.end(),
                                     [](const RawRecord& r) { return r.label == 1; });
    const bool has_neg = std::any_of(train.begin(), train.end(),
                                     [](const RawRecord& r) { return r.label == 0; });
    if (!has_pos || !has_neg)
        throw std::invalid_argument("fit_pipeline: both classes must be present");
    FeaturePipeline p;
    p.k = params.k;
    p.cleaning = fit_cleaning(train, feature_names);

    const auto index_of = detail::name_index(feature_names);
    std::vector<std::vector<double>> kept_cols;
    kept_cols.reserve(p.cleaning.kept.size());
    for (const auto& name : p.cleaning.kept)
        kept_cols.push_back(detail::extract_column(train, index_of.at(name)));

    const Matrix corr = pearson_matrix(kept_cols);
    p.groups = group_correlated(corr, p.cleaning.kept, params.correlation_threshold);

    std::vector<double> labels;
    labels.reserve(train.size());
    for (const auto& rec : train) labels.push_back(static_cast<double>(rec.label));
    std::vector<int> int_labels;
    int_labels.reserve(train.size());
    for (const auto& rec : train) int_labels.push_back(rec.label);

    const auto kept_index = detail::name_index(p.cleaning.kept);

    // Re-choose each group's representative as the member with the highest
    // |correlation with the label|, ties by name.
    for (std::size_t g = 0; g < p.groups.groups.size(); ++g) {
        const auto& members = p.groups.groups[g];
        std::string best = members.front();
        double best_corr = -1.0;
        std::vector<std::string> sorted_members = members;
        std::sort(sorted_members.begin(), sorted_members.end());
        for (const auto& name : sorted_members) {
            const double c = std::abs(pearson(kept_cols[kept_index.at(name)], labels));
            if (c > best_corr) {
                best_corr = c;
                best = name;
            }
        }
        p.groups.representatives[g] = best;
    }

    std::vector<std::string> reps = p.groups.representatives;
    if (reps.size() < params.k)
        throw DataError("fit_pipeline: only " + std::to_string(reps.size()) +
                        " features survive grouping, need k=" + std::to_string(params.k));

    std::vector<std::vector<double>> rep_cols;
    rep_cols.reserve(reps.size());
    for (const auto& name : reps) rep_cols.push_back(kept_cols[kept_index.at(name)]);
    p.ranking = forest_importance(rep_cols, int_labels, reps, params.forest_trees,
                                  params.forest_max_depth, params.seed);

    p.selected.assign(p.ranking.order.begin(),
                      p.ranking.order.begin() + static_cast<std::ptrdiff_t>(params.k));

    for (const auto& name : p.selected) {
        const auto& col = kept_cols[kept_index.at(name)];
        const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        p.scaler[name] = {*lo, *hi};
    }
    return p;
}

struct TransformedBatch {
    Matrix x;              // n rows, k columns, values in [0,1]
    std::vector<int> labels;
};

/// Maps records to the fitted [0,1] box in selected-feature order; values
/// outside the fitted range clamp to the box edge.
inline TransformedBatch transform(const FeaturePipeline& p,
                                  const std::vector<std::string>& feature_names,
                                  const std::vector<RawRecord>& records) {
    const auto index_of = detail::name_index(feature_names);
    std::vector<std::size_t> src;
    src.reserve(p.selected.size());
    for (const auto& name : p.selected) {
        auto it = index_of.find(name);
        if (it == index_of.end()) throw DataError("transform: records lack feature '" + name + "'");
        src.push_back(it->second);
    }

    TransformedBatch out;
    out.x = Matrix(records.size(), p.selected.size());
    out.labels.reserve(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        for (std::size_t c = 0; c < src.size(); ++c) {
            const double v = records[r].values[src[c]];
            if (std::isnan(v) || std::isinf(v))
                throw DataError("transform: null/inf in selected feature '" + p.selected[c] +
                                "' at record " + std::to_string(r));
            const auto& mm = p.scaler.at(p.selected[c]);
            const double scaled = (v - mm.min) / (mm.max - mm.min);
            out.x(r, c) = std::clamp(scaled, 0.0, 1.0);
        }
        out.labels.push_back(records[r].label);
    }
    return out;
}

inline nlohmann::json pipeline_to_json(const FeaturePipeline& p) {
    nlohmann::json dropped = nlohmann::json::array();
    for (const auto& d : p.cleaning.dropped)
        dropped.push_back({{"name", d.name}, {"reason", to_string(d.reason)}});
    nlohmann::json groups = nlohmann::json::array();
    for (std::size_t g = 0; g < p.groups.groups.size(); ++g)
        groups.push_back(
            {{"representative", p.groups.representatives[g]}, {"members", p.groups.groups[g]}});
    nlohmann::json scaler = nlohmann::json::object();
    for (const auto& [name, mm] : p.scaler)
        scaler[name] = {{"min", mm.min}, {"max", mm.max}};
    return {
        {"format_version", 1},
        {"k", p.k},
        {"cleaning", {{"dropped", dropped}, {"kept", p.cleaning.kept}}},
        {"groups", {{"threshold", p.groups.threshold}, {"groups", groups}}},
        {"ranking", {{"scores", p.ranking.scores}, {"order", p.ranking.order}}},
        {"selected", p.selected},
        {"scaler", scaler},
    };
}

inline FeaturePipeline pipeline_from_json(const nlohmann::json& j) {
    FeaturePipeline p;
    p.k = j.at("k").get<std::size_t>();
    for (const auto& d : j.at("cleaning").at("dropped"))
        p.cleaning.dropped.push_back(
            {d.at("name").get<std::string>(), drop_reason_from_string(d.at("reason"))});
    p.cleaning.kept = j.at("cleaning").at("kept").get<std::vector<std::string>>();
    p.groups.threshold = j.at("groups").at("threshold").get<double>();
    for (const auto& g : j.at("groups").at("groups")) {
        p.groups.representatives.push_back(g.at("representative").get<std::string>());
        p.groups.groups.push_back(g.at("members").get<std::vector<std::string>>());
    }
    p.ranking.scores = j.at("ranking").at("scores").get<std::map<std::string, double>>();
    p.ranking.order = j.at("ranking").at("order").get<std::vector<std::string>>();
    p.selected = j.at("selected").get<std::vector<std::string>>();
    for (const auto& [name, mm] : j.at("scaler").items())
        p.scaler[name] = {mm.at("min").get<double>(), mm.at("max").get<double>()};
    return p;
}

}  // namespace evadelab

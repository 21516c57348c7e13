#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "evadelab/core.hpp"

#include <json.hpp>

namespace evadelab {

struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + tn + fp + fn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

/// One evaluation condition — one row of the result tables.
struct MetricsRow {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::string condition;    // "pre-attack", "day_n", "day_n_plus_1"
    std::string attack_name;  // "none" for the pre-attack row
    ConfusionMatrix counts;
};

/// Positive class is malicious (1).
inline ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& predicted) {
    if (truth.size() != predicted.size())
        throw std::invalid_argument("confusion: label vectors differ in length");
    if (truth.empty()) throw std::invalid_argument("confusion: empty label vectors");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 1)
            (predicted[i] == 1 ? cm.tp : cm.fn)++;
        else
            (predicted[i] == 1 ? cm.fp : cm.tn)++;
    }
    return cm;
}

/// Accuracy, precision, recall and F1 with the zero-denominator
/// convention: precision/recall/f1 are 0 when their denominator is 0.
inline MetricsRow summarize(const ConfusionMatrix& cm, std::string condition,
                            std::string attack_name) {
    if (cm.total() == 0) throw std::invalid_argument("summarize: empty confusion matrix");
    MetricsRow row;
    row.counts = cm;
    row.condition = std::move(condition);
    row.attack_name = std::move(attack_name);
    const auto tp = static_cast<double>(cm.tp);
    const auto tn = static_cast<double>(cm.tn);
    const auto fp = static_cast<double>(cm.fp);
    const auto fn = static_cast<double>(cm.fn);
    row.accuracy = (tp + tn) / (tp + tn + fp + fn);
    row.precision = cm.tp + cm.fp > 0 ? tp / (tp + fp) : 0.0;
    row.recall = cm.tp + cm.fn > 0 ? tp / (tp + fn) : 0.0;
    row.f1 = row.precision + row.recall > 0.0
                 ? 2.0 * row.precision * row.recall / (row.precision + row.recall)
                 : 0.0;
    return row;
}

/// F1 for already-computed precision/recall, same zero convention.
inline double f1_from(double precision, double recall) {
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

inline nlohmann::json metrics_row_to_json(const MetricsRow& row) {
    return {
        {"condition", row.condition},
        {"attack", row.attack_name},
        {"accuracy", row.accuracy},
        {"precision", row.precision},
        {"recall", row.recall},
        {"f1", row.f1},
        {"confusion",
         {{"tp", row.counts.tp}, {"tn", row.counts.tn}, {"fp", row.counts.fp}, {"fn", row.counts.fn}}},
    };
}

inline MetricsRow metrics_row_from_json(const nlohmann::json& j) {
    MetricsRow row;
    row.condition = j.at("condition").get<std::string>();
    row.attack_name = j.at("attack").get<std::string>();
    row.accuracy = j.at("accuracy").get<double>();
    row.precision = j.at("precision").get<double>();
    row.recall = j.at("recall").get<double>();
    row.f1 = j.at("f1").get<double>();
    const auto& c = j.at("confusion");
    row.counts.tp = c.at("tp").get<std::size_t>();
    row.counts.tn = c.at("tn").get<std::size_t>();
    row.counts.fp = c.at("fp").get<std::size_t>();
    row.counts.fn = c.at("fn").get<std::size_t>();
    return row;
}

namespace detail {

inline const char* condition_display(const std::string& condition) {
    if (condition == "pre-attack") return "Pre-attack";
    if (condition == "day_n") return "Day n";
    if (condition == "day_n_plus_1") return "Day n+1";
    return condition.c_str();
}

}  // namespace detail

/// Fixed-width table for one attack, laid out like the paper's tables:
/// columns Accuracy / Precision / Recall / F1, rows Pre-attack / Day n /
/// Day n+1.
inline std::string render_metrics_table(const std::string& caption,
                                        const std::vector<MetricsRow>& rows) {
    std::string out;
    out += caption + "\n";
    char line[128];
    std::snprintf(line, sizeof line, "%-12s%10s%11s%8s%8s\n", "", "Accuracy", "Precision",
                  "Recall", "F1");
    out += line;
    for (const auto& row : rows) {
        std::snprintf(line, sizeof line, "%-12s%10.3f%11.3f%8.3f%8.3f\n",
                      detail::condition_display(row.condition), row.accuracy, row.precision,
                      row.recall, row.f1);
        out += line;
    }
    return out;
}

}  // namespace evadelab

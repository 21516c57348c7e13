#pragma once

#include <openssl/evp.h>

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evadelab/attacks.hpp"
#include "evadelab/config.hpp"
#include "evadelab/core.hpp"
#include "evadelab/dataio.hpp"
#include "evadelab/metrics.hpp"
#include "evadelab/mlp.hpp"
#include "evadelab/pipeline.hpp"

#include <json.hpp>

namespace evadelab {

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256_hex: EVP_Digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

/// Cheap staleness proof: hash of the serialized model document.
inline std::string model_fingerprint(const MlpModel& m) {
    return sha256_hex(model_to_json(m).dump());
}

struct ScenarioReport {
    std::vector<MetricsRow> rows;  // pre-attack, then (day_n, day_n_plus_1) per attack
    ScenarioConfig config_echo;
    std::string fingerprint_day_n;
    std::string fingerprint_day_n_plus_1;
};

/// Report plus the heavyweight artifacts a run wants to persist.
struct ScenarioOutcome {
    ScenarioReport report;
    MlpModel model_day_n;
    MlpModel model_day_n_plus_1;
    FeaturePipeline pipeline;
    TrainLog train_log_day_n;
    TrainLog train_log_day_n_plus_1;

    struct AdversarialBatch {
        std::string attack;
        std::string condition;  // "day_n" / "day_n_plus_1"
        Matrix x;
        std::vector<int> labels;
        int oracle_day = 0;
    };
    std::vector<AdversarialBatch> adversarial;
};

namespace detail {

template <typename Fn>
inline auto scenario_stage(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const ScenarioError&) {
        throw;
    } catch (const std::exception& e) {
        throw ScenarioError(stage, e.what());
    }
}

inline AttackBounds resolve_bounds(const BoundsSpec& spec,
                                   const std::vector<std::string>& selected) {
    AttackBounds b;
    b.lower.assign(selected.size(), spec.lower);
    b.upper.assign(selected.size(), spec.upper);
    b.immutable_mask.assign(selected.size(), false);
    for (const auto& name : spec.immutable_features)
        for (std::size_t i = 0; i < selected.size(); ++i)
            if (selected[i] == name) b.immutable_mask[i] = true;
    b.validate();
    return b;
}

}  // namespace detail

/// The temporal experiment: train on day n, attack with fresh gradients,
/// retrain on day n+1 without forgetting, re-attack with the stale day-n
/// oracle, and report pre-attack / day-n / day-n+1 metrics per attack.
inline ScenarioOutcome run_temporal_scenario_full(const ScenarioConfig& cfg) {
    if (cfg.attacks_enabled.empty())
        throw ConfigError("scenario requires at least one enabled attack");
    if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0))
        throw ConfigError("split_ratio must be in (0,1)");

    ScenarioOutcome out;
    out.report.config_echo = cfg;

    // (0) materialize day n and day n+1
    DayDataset day_n, day_n1;
    detail::scenario_stage("load_data", [&] {
        if (cfg.data.kind == DataSource::Kind::synthetic) {
            if (cfg.data.synth.days < cfg.start_day + 2)
                throw DataError("synthetic stream has " + std::to_string(cfg.data.synth.days) +
                                " day(s); days " + std::to_string(cfg.start_day) + " and " +
                                std::to_string(cfg.start_day + 1) + " are required");
            auto days = generate_synthetic_days(cfg.data.synth);
            day_n = std::move(days[static_cast<std::size_t>(cfg.start_day)]);
            day_n1 = std::move(days[static_cast<std::size_t>(cfg.start_day) + 1]);
        } else {
            const auto file = [&cfg](int day) {
                return cfg.data.csv_dir + "/day_" + std::to_string(day) + ".csv";
            };
            day_n = load_day_csv(file(cfg.start_day), cfg.start_day, cfg.data.label_column);
            day_n1 = load_day_csv(file(cfg.start_day + 1), cfg.start_day + 1,
                                  cfg.data.label_column);
        }
        if (day_n.feature_names != day_n1.feature_names)
            throw DataError("day " + std::to_string(cfg.start_day) + " and day " +
                            std::to_string(cfg.start_day + 1) + " disagree on feature columns");
        return 0;
    });

    const auto seed = static_cast<std::uint64_t>(cfg.seed);

    // (1) split day n, fit the pipeline on its train side, train M_n fresh
    SplitPair split_n = detail::scenario_stage("split_day_n", [&] {
        return split_train_test(day_n, cfg.split_ratio, static_cast<std::int64_t>(mix_seed(seed, 1)));
    });

    out.pipeline = detail::scenario_stage("fit_pipeline", [&] {
        PipelineParams params = cfg.pipeline;
        params.seed = static_cast<std::int64_t>(mix_seed(seed, 2));
        return fit_pipeline(split_n.train, day_n.feature_names, params);
    });
    const FeaturePipeline& pipeline = out.pipeline;

    TransformedBatch train_n = detail::scenario_stage("transform_day_n", [&] {
        return transform(pipeline, day_n.feature_names, split_n.train);
    });
    TransformedBatch test_n = detail::scenario_stage("transform_day_n", [&] {
        return transform(pipeline, day_n.feature_names, split_n.test);
    });

    detail::scenario_stage("train_day_n", [&] {
        MlpModel fresh = init_model(pipeline.k, static_cast<std::int64_t>(mix_seed(seed, 3)));
        TrainConfig tc = cfg.train;
        tc.seed = static_cast<std::int64_t>(mix_seed(seed, 4));
        TrainResult res = train(fresh, train_n.x, train_n.labels, tc);
        out.model_day_n = std::move(res.model);
        out.train_log_day_n = std::move(res.log);
        return 0;
    });

    // (2) pre-attack row on the unperturbed day-n test set
    detail::scenario_stage("evaluate_pre_attack", [&] {
        const auto pred = predict_batch(out.model_day_n, test_n.x);
        out.report.rows.push_back(summarize(confusion(test_n.labels, pred), "pre-attack", "none"));
        return 0;
    });

    // (3) freeze the oracle and attack day n with fresh gradients
    const GradientOracle oracle(out.model_day_n, cfg.start_day);
    const AttackBounds bounds = detail::resolve_bounds(cfg.bounds, pipeline.selected);

    LowProFoolConfig lpf = cfg.lowprofool;
    if (std::find(cfg.attacks_enabled.begin(), cfg.attacks_enabled.end(), "lowprofool") !=
        cfg.attacks_enabled.end()) {
        detail::scenario_stage("importance", [&] {
            if (lpf.importance.empty()) lpf.importance = pearson_importance(train_n.x, train_n.labels);
            return 0;
        });
    }

    auto run_attack = [&](const std::string& name, const Matrix& x, const std::vector<int>& y) {
        return detail::scenario_stage("attack", [&]() -> Matrix {
            if (name == "fgsm")
                return attack_batch(
                    x, y,
                    [&](std::span<const double> row, int label, std::size_t) {
                        return fgsm(oracle, row, label, cfg.fgsm, bounds);
                    },
                    cfg.scope);
            if (name == "pgd")
                return attack_batch(
                    x, y,
                    [&](std::span<const double> row, int label, std::size_t idx) {
                        PgdConfig pc = cfg.pgd;
                        pc.seed = static_cast<std::int64_t>(
                            mix_seed(static_cast<std::uint64_t>(cfg.pgd.seed), idx));
                        return pgd(oracle, row, label, pc, bounds);
                    },
                    cfg.scope);
            return attack_batch(
                x, y,
                [&](std::span<const double> row, int label, std::size_t) {
                    return lowprofool(oracle, row, label, lpf, bounds);
                },
                cfg.scope);
        });
    };

    struct PendingRow {
        std::string attack;
        MetricsRow day_n;
        MetricsRow day_n1;
    };
    std::vector<PendingRow> per_attack;

    for (const auto& name : cfg.attacks_enabled) {
        Matrix adv = run_attack(name, test_n.x, test_n.labels);
        const auto pred = predict_batch(out.model_day_n, adv);
        PendingRow row;
        row.attack = name;
        row.day_n = summarize(confusion(test_n.labels, pred), "day_n", name);
        per_attack.push_back(std::move(row));
        out.adversarial.push_back(
            {name, "day_n", std::move(adv), test_n.labels, cfg.start_day});
    }

    // (4) warm-start retrain on day n+1: old knowledge is kept
    SplitPair split_n1 = detail::scenario_stage("split_day_n_plus_1", [&] {
        return split_train_test(day_n1, cfg.split_ratio,
                                static_cast<std::int64_t>(mix_seed(seed, 5)));
    });
    TransformedBatch train_n1 = detail::scenario_stage("transform_day_n_plus_1", [&] {
        return transform(pipeline, day_n1.feature_names, split_n1.train);
    });
    detail::scenario_stage("train_day_n_plus_1", [&] {
        TrainConfig tc = cfg.train;
        tc.seed = static_cast<std::int64_t>(mix_seed(seed, 6));
        TrainResult res = train(out.model_day_n, train_n1.x, train_n1.labels, tc);
        out.model_day_n_plus_1 = std::move(res.model);
        out.train_log_day_n_plus_1 = std::move(res.log);
        return 0;
    });

    // (5) stale-oracle attacks on the day-n+1 test set, scored against the
    // retrained model
    TransformedBatch test_n1 =
        cfg.reuse_day_n_testset
            ? test_n
            : detail::scenario_stage("transform_day_n_plus_1", [&] {
                  return transform(pipeline, day_n1.feature_names, split_n1.test);
              });

    for (auto& row : per_attack) {
        Matrix adv = run_attack(row.attack, test_n1.x, test_n1.labels);
        const auto pred = predict_batch(out.model_day_n_plus_1, adv);
        row.day_n1 = summarize(confusion(test_n1.labels, pred), "day_n_plus_1", row.attack);
        out.adversarial.push_back(
            {row.attack, "day_n_plus_1", std::move(adv), test_n1.labels, cfg.start_day});
    }

    for (auto& row : per_attack) {
        out.report.rows.push_back(std::move(row.day_n));
        out.report.rows.push_back(std::move(row.day_n1));
    }

    out.report.fingerprint_day_n = model_fingerprint(out.model_day_n);
    out.report.fingerprint_day_n_plus_1 = model_fingerprint(out.model_day_n_plus_1);
    return out;
}

inline ScenarioReport run_temporal_scenario(const ScenarioConfig& cfg) {
    return run_temporal_scenario_full(cfg).report;
}

inline nlohmann::json report_to_json(const ScenarioReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.rows) rows.push_back(metrics_row_to_json(row));
    return {
        {"format_version", 1},
        {"config", scenario_config_to_json(report.config_echo)},
        {"model_fingerprints",
         {{"day_n", report.fingerprint_day_n}, {"day_n_plus_1", report.fingerprint_day_n_plus_1}}},
        {"rows", rows},
    };
}

inline ScenarioReport report_from_json(const nlohmann::json& j) {
    ScenarioReport report;
    report.config_echo = scenario_config_from_json(j.at("config"));
    report.fingerprint_day_n = j.at("model_fingerprints").at("day_n").get<std::string>();
    report.fingerprint_day_n_plus_1 =
        j.at("model_fingerprints").at("day_n_plus_1").get<std::string>();
    for (const auto& row : j.at("rows")) report.rows.push_back(metrics_row_from_json(row));
    return report;
}

namespace detail {

inline const char* attack_display_name(const std::string& name) {
    if (name == "fgsm") return "FGSM";
    if (name == "pgd") return "Projected Gradient Descent";
    if (name == "lowprofool") return "LowProFool";
    return name.c_str();
}

}  // namespace detail

/// Paper-style text rendering: one table per attack, each carrying the
/// shared pre-attack row plus the attack's day-n and day-n+1 rows.
inline std::string render_report_text(const ScenarioReport& report) {
    const MetricsRow* pre = nullptr;
    for (const auto& row : report.rows)
        if (row.condition == "pre-attack") pre = &row;

    std::string text;
    for (const auto& name : report.config_echo.attacks_enabled) {
        std::vector<MetricsRow> rows;
        if (pre != nullptr) rows.push_back(*pre);
        for (const auto& row : report.rows)
            if (row.attack_name == name && row.condition == "day_n") rows.push_back(row);
        for (const auto& row : report.rows)
            if (row.attack_name == name && row.condition == "day_n_plus_1") rows.push_back(row);
        if (!text.empty()) text += "\n";
        text += render_metrics_table(detail::attack_display_name(name), rows);
    }
    return text;
}

}  // namespace evadelab

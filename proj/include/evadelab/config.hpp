#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "evadelab/attacks.hpp"
#include "evadelab/core.hpp"
#include "evadelab/dataio.hpp"
#include "evadelab/mlp.hpp"
#include "evadelab/pipeline.hpp"

#include <json.hpp>

namespace evadelab {

struct DataSource {
    enum class Kind { synthetic, csv_dir };
    Kind kind = Kind::synthetic;
    std::string csv_dir;
    std::string label_column = "Label";
    SynthConfig synth;
};

struct BoundsSpec {
    double lower = 0.0;
    double upper = 1.0;
    std::vector<std::string> immutable_features;
};

/// Everything one temporal run needs. Every field has a documented
/// default; the resolved config (defaults applied) is echoed into the
/// run manifest and the report.
struct ScenarioConfig {
    DataSource data;
    double split_ratio = 0.8;
    PipelineParams pipeline;
    TrainConfig train;
    FgsmConfig fgsm;
    PgdConfig pgd;
    LowProFoolConfig lowprofool;
    BoundsSpec bounds;
    std::vector<std::string> attacks_enabled = {"fgsm", "pgd", "lowprofool"};
    AttackScope scope = AttackScope::all_samples;
    int start_day = 0;
    bool reuse_day_n_testset = false;
    std::int64_t seed = 42;
};

namespace detail {

// Pulls a key out of a section (erasing it), so that leftover keys can be
// rejected as typos once the section has been fully consumed.
template <typename T>
inline T take(nlohmann::json& section, const char* key, T fallback, const char* context) {
    auto it = section.find(key);
    if (it == section.end()) return fallback;
    T value;
    try {
        value = it->get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string(context) + "." + key + ": " + e.what());
    }
    section.erase(it);
    return value;
}

inline void expect_consumed(const nlohmann::json& section, const char* context) {
    if (!section.empty())
        throw ConfigError(std::string("unknown key '") + section.begin().key() + "' in section '" +
                          context + "'");
}

inline nlohmann::json take_section(nlohmann::json& root, const char* key) {
    auto it = root.find(key);
    if (it == root.end()) return nlohmann::json::object();
    if (!it->is_object()) throw ConfigError(std::string("section '") + key + "' must be an object");
    nlohmann::json section = *it;
    root.erase(it);
    return section;
}

}  // namespace detail

inline const char* to_string(AttackScope s) {
    return s == AttackScope::all_samples ? "all" : "malicious_only";
}

/// Parses a config document, filling every omitted key with its default.
/// Unknown keys are rejected so misspelled hyperparameters cannot pass
/// silently.
inline ScenarioConfig scenario_config_from_json(nlohmann::json root) {
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");
    ScenarioConfig cfg;

    auto data = detail::take_section(root, "data");
    {
        const auto source = detail::take<std::string>(data, "source", "synthetic", "data");
        if (source == "synthetic")
            cfg.data.kind = DataSource::Kind::synthetic;
        else if (source == "csv")
            cfg.data.kind = DataSource::Kind::csv_dir;
        else
            throw ConfigError("data.source must be 'synthetic' or 'csv'");
        cfg.data.csv_dir = detail::take<std::string>(data, "csv_dir", "", "data");
        cfg.data.label_column = detail::take<std::string>(data, "label_column", "Label", "data");
        if (cfg.data.kind == DataSource::Kind::csv_dir && cfg.data.csv_dir.empty())
            throw ConfigError("data.csv_dir is required when data.source is 'csv'");
        auto synth = detail::take_section(data, "synthetic");
        cfg.data.synth.days = detail::take<int>(synth, "days", 2, "data.synthetic");
        cfg.data.synth.records_per_day =
            detail::take<int>(synth, "records_per_day", 5000, "data.synthetic");
        cfg.data.synth.raw_feature_count =
            detail::take<int>(synth, "raw_feature_count", 40, "data.synthetic");
        cfg.data.synth.benign_fraction =
            detail::take<double>(synth, "benign_fraction", 0.64, "data.synthetic");
        cfg.data.synth.drift_step = detail::take<double>(synth, "drift_step", 3.0, "data.synthetic");
        cfg.data.synth.noise_std = detail::take<double>(synth, "noise_std", 1.0, "data.synthetic");
        cfg.data.synth.inject_pathologies =
            detail::take<bool>(synth, "inject_pathologies", false, "data.synthetic");
        cfg.data.synth.seed = detail::take<std::int64_t>(synth, "seed", 42, "data.synthetic");
        detail::expect_consumed(synth, "data.synthetic");
        detail::expect_consumed(data, "data");
    }

    auto pipeline = detail::take_section(root, "pipeline");
    const auto k = detail::take<std::int64_t>(pipeline, "k", 32, "pipeline");
    if (k < 1) throw ConfigError("pipeline.k must be >= 1");
    cfg.pipeline.k = static_cast<std::size_t>(k);
    cfg.pipeline.correlation_threshold =
        detail::take<double>(pipeline, "correlation_threshold", 0.9, "pipeline");
    cfg.pipeline.forest_trees = detail::take<int>(pipeline, "forest_trees", 50, "pipeline");
    cfg.pipeline.forest_max_depth = detail::take<int>(pipeline, "forest_max_depth", 8, "pipeline");
    detail::expect_consumed(pipeline, "pipeline");

    auto train = detail::take_section(root, "train");
    cfg.train.learning_rate = detail::take<double>(train, "learning_rate", 0.001, "train");
    cfg.train.dropout = detail::take<double>(train, "dropout", 0.5, "train");
    cfg.train.epochs = detail::take<int>(train, "epochs", 20, "train");
    cfg.train.batch_size = detail::take<int>(train, "batch_size", 16, "train");
    detail::expect_consumed(train, "train");

    auto attacks = detail::take_section(root, "attacks");
    cfg.attacks_enabled = detail::take<std::vector<std::string>>(
        attacks, "enabled", {"fgsm", "pgd", "lowprofool"}, "attacks");
    {
        const auto scope = detail::take<std::string>(attacks, "scope", "all", "attacks");
        if (scope == "all")
            cfg.scope = AttackScope::all_samples;
        else if (scope == "malicious_only")
            cfg.scope = AttackScope::malicious_only;
        else
            throw ConfigError("attacks.scope must be 'all' or 'malicious_only'");
    }
    auto fgsm = detail::take_section(attacks, "fgsm");
    cfg.fgsm.epsilon = detail::take<double>(fgsm, "epsilon", 0.1, "attacks.fgsm");
    detail::expect_consumed(fgsm, "attacks.fgsm");
    auto pgd = detail::take_section(attacks, "pgd");
    cfg.pgd.epsilon = detail::take<double>(pgd, "epsilon", 0.1, "attacks.pgd");
    cfg.pgd.step_size = detail::take<double>(pgd, "step_size", 0.025, "attacks.pgd");
    cfg.pgd.steps = detail::take<int>(pgd, "steps", 10, "attacks.pgd");
    cfg.pgd.random_start = detail::take<bool>(pgd, "random_start", false, "attacks.pgd");
    cfg.pgd.seed = detail::take<std::int64_t>(pgd, "seed", 0, "attacks.pgd");
    detail::expect_consumed(pgd, "attacks.pgd");
    auto lpf = detail::take_section(attacks, "lowprofool");
    cfg.lowprofool.max_iters = detail::take<int>(lpf, "max_iters", 50, "attacks.lowprofool");
    cfg.lowprofool.step_size = detail::take<double>(lpf, "step_size", 0.05, "attacks.lowprofool");
    cfg.lowprofool.tradeoff_lambda =
        detail::take<double>(lpf, "tradeoff_lambda", 1.0, "attacks.lowprofool");
    detail::expect_consumed(lpf, "attacks.lowprofool");
    auto bounds = detail::take_section(attacks, "bounds");
    cfg.bounds.lower = detail::take<double>(bounds, "lower", 0.0, "attacks.bounds");
    cfg.bounds.upper = detail::take<double>(bounds, "upper", 1.0, "attacks.bounds");
    cfg.bounds.immutable_features = detail::take<std::vector<std::string>>(
        bounds, "immutable_features", {}, "attacks.bounds");
    detail::expect_consumed(bounds, "attacks.bounds");
    detail::expect_consumed(attacks, "attacks");

    auto scenario = detail::take_section(root, "scenario");
    cfg.split_ratio = detail::take<double>(scenario, "split_ratio", 0.8, "scenario");
    cfg.start_day = detail::take<int>(scenario, "start_day", 0, "scenario");
    cfg.reuse_day_n_testset =
        detail::take<bool>(scenario, "reuse_day_n_testset", false, "scenario");
    cfg.seed = detail::take<std::int64_t>(scenario, "seed", 42, "scenario");
    detail::expect_consumed(scenario, "scenario");

    detail::expect_consumed(root, "(root)");

    if (cfg.attacks_enabled.empty()) throw ConfigError("attacks.enabled must not be empty");
    for (const auto& name : cfg.attacks_enabled)
        if (name != "fgsm" && name != "pgd" && name != "lowprofool")
            throw ConfigError("unknown attack '" + name + "' in attacks.enabled");
    for (std::size_t i = 0; i < cfg.attacks_enabled.size(); ++i)
        for (std::size_t j = i + 1; j < cfg.attacks_enabled.size(); ++j)
            if (cfg.attacks_enabled[i] == cfg.attacks_enabled[j])
                throw ConfigError("duplicate attack '" + cfg.attacks_enabled[i] +
                                  "' in attacks.enabled");
    if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0))
        throw ConfigError("scenario.split_ratio must be in (0,1)");
    if (cfg.start_day < 0) throw ConfigError("scenario.start_day must be >= 0");
    return cfg;
}

/// Full echo: every default is materialized.
inline nlohmann::json scenario_config_to_json(const ScenarioConfig& cfg) {
    return {
        {"data",
         {{"source", cfg.data.kind == DataSource::Kind::synthetic ? "synthetic" : "csv"},
          {"csv_dir", cfg.data.csv_dir},
          {"label_column", cfg.data.label_column},
          {"synthetic",
           {{"days", cfg.data.synth.days},
            {"records_per_day", cfg.data.synth.records_per_day},
            {"raw_feature_count", cfg.data.synth.raw_feature_count},
            {"benign_fraction", cfg.data.synth.benign_fraction},
            {"drift_step", cfg.data.synth.drift_step},
            {"noise_std", cfg.data.synth.noise_std},
            {"inject_pathologies", cfg.data.synth.inject_pathologies},
            {"seed", cfg.data.synth.seed}}}}},
        {"pipeline",
         {{"k", cfg.pipeline.k},
          {"correlation_threshold", cfg.pipeline.correlation_threshold},
          {"forest_trees", cfg.pipeline.forest_trees},
          {"forest_max_depth", cfg.pipeline.forest_max_depth}}},
        {"train",
         {{"learning_rate", cfg.train.learning_rate},
          {"dropout", cfg.train.dropout},
          {"epochs", cfg.train.epochs},
          {"batch_size", cfg.train.batch_size}}},
        {"attacks",
         {{"enabled", cfg.attacks_enabled},
          {"scope", to_string(cfg.scope)},
          {"fgsm", {{"epsilon", cfg.fgsm.epsilon}}},
          {"pgd",
           {{"epsilon", cfg.pgd.epsilon},
            {"step_size", cfg.pgd.step_size},
            {"steps", cfg.pgd.steps},
            {"random_start", cfg.pgd.random_start},
            {"seed", cfg.pgd.seed}}},
          {"lowprofool",
           {{"max_iters", cfg.lowprofool.max_iters},
            {"step_size", cfg.lowprofool.step_size},
            {"tradeoff_lambda", cfg.lowprofool.tradeoff_lambda}}},
          {"bounds",
           {{"lower", cfg.bounds.lower},
            {"upper", cfg.bounds.upper},
            {"immutable_features", cfg.bounds.immutable_features}}}}},
        {"scenario",
         {{"split_ratio", cfg.split_ratio},
          {"start_day", cfg.start_day},
          {"reuse_day_n_testset", cfg.reuse_day_n_testset},
          {"seed", cfg.seed}}},
    };
}

/// Loads a config file; an empty path yields the all-defaults config.
inline ScenarioConfig load_scenario_config(const std::string& path) {
    if (path.empty()) return scenario_config_from_json(nlohmann::json::object());
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    nlohmann::json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return scenario_config_from_json(std::move(root));
}

}  // namespace evadelab

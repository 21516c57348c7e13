#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "evadelab/config.hpp"
#include "evadelab/core.hpp"
#include "evadelab/dataio.hpp"
#include "evadelab/scenario.hpp"

#include <json.hpp>

namespace evadelab {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 2;
inline constexpr int io = 3;
inline constexpr int scenario = 4;
inline constexpr int gradcheck = 5;
}  // namespace exit_code

/// Command-line overrides that take precedence over the config file.
struct CliOverrides {
    std::optional<std::int64_t> seed;        // scenario seed and synthetic-stream seed
    std::optional<int> days;                 // synth: day count; run: start day
    std::optional<std::vector<std::string>> attacks;
};

inline void apply_overrides(ScenarioConfig& cfg, const CliOverrides& ov, bool for_run) {
    if (ov.seed) {
        cfg.seed = *ov.seed;
        cfg.data.synth.seed = *ov.seed;
    }
    if (ov.attacks) cfg.attacks_enabled = *ov.attacks;
    if (ov.days) {
        if (for_run)
            cfg.start_day = *ov.days;
        else
            cfg.data.synth.days = *ov.days;
    }
}

namespace detail {

inline std::string iso8601_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed: " + path.string());
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

inline void ensure_output_dir(const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
}

}  // namespace detail

/// Writes day_<i>.csv files for the configured synthetic stream.
inline int cmd_synth(const std::string& config_path, const std::string& out_dir,
                     const CliOverrides& overrides = {}) {
    try {
        ScenarioConfig cfg = load_scenario_config(config_path);
        apply_overrides(cfg, overrides, /*for_run=*/false);
        const auto days = generate_synthetic_days(cfg.data.synth);
        detail::ensure_output_dir(out_dir);
        for (const auto& day : days) {
            const auto path = std::filesystem::path(out_dir) /
                              ("day_" + std::to_string(day.day_index) + ".csv");
            save_day_csv(day, path.string(), cfg.data.label_column);
        }
        std::cout << "wrote " << days.size() << " day file(s) to " << out_dir << "\n";
        return exit_code::ok;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::io;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::config;
    }
}

/// Runs the temporal scenario and writes report.json / report.txt /
/// manifest.json plus serialized models, pipeline and adversarial
/// batches — all inside out_dir.
inline int cmd_run(const std::string& config_path, const std::string& out_dir,
                   const CliOverrides& overrides = {}) {
    ScenarioConfig cfg;
    try {
        cfg = load_scenario_config(config_path);
        apply_overrides(cfg, overrides, /*for_run=*/true);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::io;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::config;
    }

    const std::string started_at = detail::iso8601_now();
    ScenarioOutcome outcome;
    try {
        outcome = run_temporal_scenario_full(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::config;
    } catch (const ScenarioError& e) {
        std::cerr << "error: scenario failed at stage " << e.stage() << ": " << e.what() << "\n";
        return exit_code::scenario;
    } catch (const std::exception& e) {
        std::cerr << "error: scenario failed: " << e.what() << "\n";
        return exit_code::scenario;
    }

    try {
        detail::ensure_output_dir(out_dir);
        const std::filesystem::path dir(out_dir);
        detail::write_json_file(dir / "report.json", report_to_json(outcome.report));
        detail::write_text_file(dir / "report.txt", render_report_text(outcome.report));
        detail::write_json_file(dir / "model_day_n.json", model_to_json(outcome.model_day_n));
        detail::write_json_file(dir / "model_day_n_plus_1.json",
                                model_to_json(outcome.model_day_n_plus_1));
        detail::write_json_file(dir / "pipeline.json", pipeline_to_json(outcome.pipeline));
        for (const auto& batch : outcome.adversarial) {
            const auto path = dir / ("adv_" + batch.attack + "_" + batch.condition + ".csv");
            write_adversarial_csv(path.string(), outcome.pipeline.selected, batch.x, batch.labels,
                                  batch.attack, batch.oracle_day);
        }
        nlohmann::json manifest = {
            {"config_path", config_path},
            {"resolved_config", scenario_config_to_json(cfg)},
            {"tool_version", kVersion},
            {"started_at", started_at},
            {"finished_at", detail::iso8601_now()},
            {"output_dir", out_dir},
        };
        detail::write_json_file(dir / "manifest.json", manifest);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::io;
    }
    std::cout << render_report_text(outcome.report);
    return exit_code::ok;
}

/// Maximum relative error of the analytic input gradient against central
/// finite differences over `trials` random (network, input) pairs.
/// Inputs are re-drawn when a ReLU pre-activation sits within 1e-4 of its
/// kink or the output saturates, where finite differences stop being a
/// valid reference. `corrupt_gradient` deliberately biases one analytic
/// coordinate (test hook for the failure path).
inline double gradcheck_max_rel_error(std::int64_t seed, int trials,
                                      bool corrupt_gradient = false) {
    if (trials < 1) throw std::invalid_argument("gradcheck: trials must be >= 1");
    constexpr double h = 1e-5;
    double worst = 0.0;

    for (int trial = 0; trial < trials; ++trial) {
        std::mt19937_64 rng(mix_seed(static_cast<std::uint64_t>(seed),
                                     static_cast<std::uint64_t>(trial)));
        std::uniform_int_distribution<std::size_t> ksize(2, 32);
        const std::size_t k = ksize(rng);
        MlpModel m = init_model(k, static_cast<std::int64_t>(rng()));
        std::uniform_real_distribution<double> bias(-0.5, 0.5);
        for (auto& b : m.b1) b = bias(rng);
        for (auto& b : m.b2) b = bias(rng);
        for (auto& b : m.b3) b = bias(rng);

        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<double> x(k);
        const int y = unit(rng) < 0.5 ? 0 : 1;
        for (int attempt = 0; attempt < 200; ++attempt) {
            for (auto& v : x) v = unit(rng);
            bool near_kink = false;
            for (std::size_t i = 0; i < kHidden1; ++i) {
                double z = m.b1[i];
                for (std::size_t j = 0; j < k; ++j) z += m.w1(i, j) * x[j];
                if (std::abs(z) < 1e-4) near_kink = true;
            }
            const double p = forward(m, x);
            if (!near_kink && p > 0.05 && p < 0.95) break;
        }

        auto loss = [&m, y](const std::vector<double>& in) {
            const double p = forward(m, in);
            const double q = std::clamp(p, 1e-12, 1.0 - 1e-12);
            return y == 1 ? -std::log(q) : -std::log(1.0 - q);
        };

        std::vector<double> analytic = input_gradient(m, x, y);
        if (corrupt_gradient) analytic[0] += 0.01 * (1.0 + std::abs(analytic[0]));

        std::vector<double> probe = x;
        for (std::size_t j = 0; j < k; ++j) {
            probe[j] = x[j] + h;
            const double up = loss(probe);
            probe[j] = x[j] - h;
            const double down = loss(probe);
            probe[j] = x[j];
            const double fd = (up - down) / (2.0 * h);
            const double rel =
                std::abs(fd - analytic[j]) / std::max({std::abs(fd), std::abs(analytic[j]), 1e-8});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

inline int cmd_gradcheck(std::int64_t seed, int trials, bool corrupt_gradient = false) {
    if (trials < 1) {
        std::cerr << "error: trials must be >= 1\n";
        return exit_code::config;
    }
    const double worst = gradcheck_max_rel_error(seed, trials, corrupt_gradient);
    std::printf("max relative error %.3e over %d trials (threshold 1e-4)\n", worst, trials);
    return worst <= 1e-4 ? exit_code::ok : exit_code::gradcheck;
}

/// Re-renders report.txt from an existing report.json.
inline int cmd_report(const std::string& report_json_path, const std::string& out_dir) {
    nlohmann::json doc;
    try {
        std::ifstream in(report_json_path);
        if (!in) throw IoError("cannot open " + report_json_path);
        in >> doc;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::io;
    } catch (const std::exception& e) {
        std::cerr << "error: " << report_json_path << ": " << e.what() << "\n";
        return exit_code::config;
    }
    try {
        const ScenarioReport report = report_from_json(doc);
        detail::ensure_output_dir(out_dir);
        const std::string text = render_report_text(report);
        detail::write_text_file(std::filesystem::path(out_dir) / "report.txt", text);
        std::cout << text;
        return exit_code::ok;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::io;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::config;
    }
}

}  // namespace evadelab

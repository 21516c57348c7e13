#include "evadelab/scenario.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace evadelab {
namespace {

// Desk-scale config that keeps individual tests fast; the acceptance
// suite exercises the full-size defaults.
ScenarioConfig small_config() {
    ScenarioConfig cfg;
    cfg.data.synth.days = 2;
    cfg.data.synth.records_per_day = 600;
    cfg.data.synth.raw_feature_count = 12;
    cfg.pipeline.k = 8;
    cfg.pipeline.forest_trees = 12;
    cfg.pipeline.forest_max_depth = 5;
    cfg.train.epochs = 6;
    cfg.lowprofool.max_iters = 15;
    cfg.seed = 42;
    cfg.data.synth.seed = 42;
    return cfg;
}

TEST(Sha256, KnownDigest) {
    EXPECT_EQ(sha256_hex(""),
              "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Scenario, RowPatternWithAllAttacks) {
    const auto report = run_temporal_scenario(small_config());
    ASSERT_EQ(report.rows.size(), 7u);  // 1 + 2*3
    EXPECT_EQ(report.rows[0].condition, "pre-attack");
    EXPECT_EQ(report.rows[0].attack_name, "none");
    const std::vector<std::string> expect_attack{"fgsm", "fgsm", "pgd", "pgd", "lowprofool",
                                                 "lowprofool"};
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        EXPECT_EQ(report.rows[i].attack_name, expect_attack[i - 1]);
        EXPECT_EQ(report.rows[i].condition, i % 2 == 1 ? "day_n" : "day_n_plus_1");
    }
}

TEST(Scenario, SingleAttackYieldsThreeRows) {
    auto cfg = small_config();
    cfg.attacks_enabled = {"fgsm"};
    const auto report = run_temporal_scenario(cfg);
    EXPECT_EQ(report.rows.size(), 3u);
}

TEST(Scenario, OracleFingerprintDiffersAfterRetraining) {
    const auto outcome = run_temporal_scenario_full(small_config());
    EXPECT_EQ(outcome.report.fingerprint_day_n, model_fingerprint(outcome.model_day_n));
    EXPECT_EQ(outcome.report.fingerprint_day_n_plus_1,
              model_fingerprint(outcome.model_day_n_plus_1));
    EXPECT_NE(outcome.report.fingerprint_day_n, outcome.report.fingerprint_day_n_plus_1);
    EXPECT_GT(outcome.model_day_n_plus_1.train_step_count, outcome.model_day_n.train_step_count);
}

TEST(Scenario, DeterministicReportBytes) {
    const auto a = report_to_json(run_temporal_scenario(small_config())).dump(2);
    const auto b = report_to_json(run_temporal_scenario(small_config())).dump(2);
    EXPECT_EQ(a, b);
}

TEST(Scenario, ReuseDayNTestsetFlag) {
    auto cfg = small_config();
    cfg.attacks_enabled = {"fgsm"};
    cfg.reuse_day_n_testset = true;
    const auto outcome = run_temporal_scenario_full(cfg);
    ASSERT_EQ(outcome.adversarial.size(), 2u);
    // both conditions perturb the same (day n) test set, so labels match
    EXPECT_EQ(outcome.adversarial[0].labels, outcome.adversarial[1].labels);

    cfg.reuse_day_n_testset = false;
    const auto fresh = run_temporal_scenario_full(cfg);
    EXPECT_NE(fresh.adversarial[0].labels, fresh.adversarial[1].labels);
}

TEST(Scenario, MaliciousOnlyScopeRuns) {
    auto cfg = small_config();
    cfg.scope = AttackScope::malicious_only;
    cfg.attacks_enabled = {"fgsm"};
    const auto outcome = run_temporal_scenario_full(cfg);
    EXPECT_EQ(outcome.report.rows.size(), 3u);
    // benign rows pass through the attack untouched, so the day-n
    // adversarial batch must agree with the clean test set on them
    const auto& batch = outcome.adversarial[0];
    std::size_t benign_rows = 0;
    for (std::size_t r = 0; r < batch.labels.size(); ++r)
        if (batch.labels[r] == 0) ++benign_rows;
    EXPECT_GT(benign_rows, 0u);
}

TEST(Scenario, MissingDayFailsInLoadStage) {
    auto cfg = small_config();
    cfg.data.synth.days = 1;
    try {
        run_temporal_scenario(cfg);
        FAIL() << "expected ScenarioError";
    } catch (const ScenarioError& e) {
        EXPECT_EQ(e.stage(), "load_data");
    }

    cfg = small_config();
    cfg.data.kind = DataSource::Kind::csv_dir;
    cfg.data.csv_dir = std::string(testing::TempDir()) + "no_such_dir";
    try {
        run_temporal_scenario(cfg);
        FAIL() << "expected ScenarioError";
    } catch (const ScenarioError& e) {
        EXPECT_EQ(e.stage(), "load_data");
    }
}

TEST(Scenario, TooFewFeaturesFailsInPipelineStage) {
    auto cfg = small_config();
    cfg.pipeline.k = 50;
    try {
        run_temporal_scenario(cfg);
        FAIL() << "expected ScenarioError";
    } catch (const ScenarioError& e) {
        EXPECT_EQ(e.stage(), "fit_pipeline");
    }
}

TEST(Scenario, NoAttacksRejected) {
    auto cfg = small_config();
    cfg.attacks_enabled = {};
    EXPECT_THROW(run_temporal_scenario(cfg), ConfigError);
}

TEST(Scenario, CsvRoundTripMatchesSyntheticRun) {
    // Writing the synthetic days to CSV and loading them back must give
    // the same report as running on the in-memory stream.
    auto cfg = small_config();
    cfg.attacks_enabled = {"fgsm"};
    const auto days = generate_synthetic_days(cfg.data.synth);
    const auto dir = std::filesystem::path(testing::TempDir()) / "scenario_csv";
    std::filesystem::create_directories(dir);
    for (const auto& day : days)
        save_day_csv(day, (dir / ("day_" + std::to_string(day.day_index) + ".csv")).string());

    auto csv_cfg = cfg;
    csv_cfg.data.kind = DataSource::Kind::csv_dir;
    csv_cfg.data.csv_dir = dir.string();
    const auto from_csv = report_to_json(run_temporal_scenario(csv_cfg));
    const auto from_mem = report_to_json(run_temporal_scenario(cfg));
    EXPECT_EQ(from_csv.at("rows").dump(), from_mem.at("rows").dump());
    EXPECT_EQ(from_csv.at("model_fingerprints").dump(), from_mem.at("model_fingerprints").dump());
}

TEST(Scenario, ReportJsonRoundTrip) {
    const auto report = run_temporal_scenario(small_config());
    const auto back = report_from_json(report_to_json(report));
    EXPECT_EQ(report_to_json(back).dump(), report_to_json(report).dump());
}

TEST(Scenario, RenderedReportHasOneTablePerAttack) {
    const auto report = run_temporal_scenario(small_config());
    const auto text = render_report_text(report);
    EXPECT_NE(text.find("FGSM"), std::string::npos);
    EXPECT_NE(text.find("Projected Gradient Descent"), std::string::npos);
    EXPECT_NE(text.find("LowProFool"), std::string::npos);
    EXPECT_NE(text.find("Pre-attack"), std::string::npos);
    EXPECT_NE(text.find("Day n+1"), std::string::npos);
}

// Golden check on the default stream at seed 42: the report must
// regenerate byte-identically, and within it each attack must show the
// pre > day_n+1 > day_n accuracy ordering.
TEST(Scenario, GoldenDefaultSeed42) {
    const ScenarioConfig cfg;  // library defaults: 2 x 5000 records, seed 42
    const auto report = run_temporal_scenario(cfg);

    const MetricsRow* pre = &report.rows[0];
    for (const auto& name : {"fgsm", "pgd", "lowprofool"}) {
        const MetricsRow* fresh = nullptr;
        const MetricsRow* stale = nullptr;
        for (const auto& row : report.rows) {
            if (row.attack_name != name) continue;
            (row.condition == "day_n" ? fresh : stale) = &row;
        }
        ASSERT_NE(fresh, nullptr);
        ASSERT_NE(stale, nullptr);
        EXPECT_GT(pre->accuracy, stale->accuracy) << name;
        EXPECT_GT(stale->accuracy, fresh->accuracy) << name;
    }

    const auto path = std::filesystem::path(EVADELAB_GOLDEN_DIR) / "report_seed42.json";
    ASSERT_TRUE(std::filesystem::exists(path))
        << "golden file missing: " << path << " (generate with: evadelab run --out <dir> "
        << "and copy report.json here)";
    std::ifstream in(path, std::ios::binary);
    std::string golden((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(report_to_json(report).dump(2) + "\n", golden);
}

}  // namespace
}  // namespace evadelab

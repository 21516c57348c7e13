#include <cstdint>
#include <string>
#include <vector>

#include "evadelab/cli.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
    CLI::App app{"evadelab — adversarial evasion vs. continuous training testbed for ML-NIDS"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::int64_t seed = 0;
    bool seed_set = false;
    int days = 0;
    bool days_set = false;
    std::vector<std::string> attacks;

    auto add_common = [&](CLI::App* cmd, bool with_attacks) {
        cmd->add_option("--config", config_path, "JSON config file (defaults apply when omitted)");
        cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
        cmd->add_option("--seed", seed, "override the scenario and synthetic-stream seeds")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--days", days,
                        "override day count (synth) or start day (run)")
            ->each([&](const std::string&) { days_set = true; });
        if (with_attacks)
            cmd->add_option("--attacks", attacks,
                            "comma-separated subset of fgsm,pgd,lowprofool")
                ->delimiter(',');
    };

    auto* synth = app.add_subcommand("synth", "generate synthetic day_<i>.csv files");
    add_common(synth, false);

    auto* run = app.add_subcommand("run", "run the temporal attack scenario");
    add_common(run, true);

    auto* gradcheck =
        app.add_subcommand("gradcheck", "verify input gradients against finite differences");
    std::int64_t gc_seed = 1;
    int gc_trials = 100;
    gradcheck->add_option("--seed", gc_seed, "base seed")->capture_default_str();
    gradcheck->add_option("--trials", gc_trials, "number of random (network, input) pairs")
        ->capture_default_str();

    auto* report = app.add_subcommand("report", "re-render report.txt from a report.json");
    std::string report_in = "report.json";
    report->add_option("--in", report_in, "existing report.json")->capture_default_str();
    report->add_option("--out", out_dir, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : evadelab::exit_code::config;
    }

    evadelab::CliOverrides overrides;
    if (seed_set) overrides.seed = seed;
    if (days_set) overrides.days = days;
    if (!attacks.empty()) overrides.attacks = attacks;

    if (synth->parsed()) return evadelab::cmd_synth(config_path, out_dir, overrides);
    if (run->parsed()) return evadelab::cmd_run(config_path, out_dir, overrides);
    if (gradcheck->parsed()) return evadelab::cmd_gradcheck(gc_seed, gc_trials);
    if (report->parsed()) return evadelab::cmd_report(report_in, out_dir);
    return evadelab::exit_code::config;
}

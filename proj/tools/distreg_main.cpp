#include <string>

#include "CLI11.hpp"
#include "distreg/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"distreg - distribution-aware regression toolkit"};
    app.require_subcommand(1);

    std::string kind = "two-path", out_path = "data.csv";
    std::size_t n = 1000;
    std::uint64_t seed = 1;
    auto* generate = app.add_subcommand("generate", "write a synthetic dataset CSV");
    generate->add_option("--kind", kind, "inverse-square | two-path | unimodal-linear");
    generate->add_option("--n", n, "number of rows");
    generate->add_option("--seed", seed, "generator seed");
    generate->add_option("--out", out_path, "output CSV path");

    std::string run_config, out_root;
    bool validate_only = false;
    auto* run = app.add_subcommand("run", "train one configuration and write its report");
    run->add_option("--config", run_config, "experiment file")->required();
    run->add_option("--out", out_root, "output root (default $DISTREG_OUT or ./runs)");
    run->add_flag("--validate", validate_only, "check the config and exit");

    std::string sweep_config, sweep_out;
    std::size_t jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "run a config grid and aggregate over seeds");
    sweep->add_option("--config", sweep_config, "experiment file with a [sweep] section")->required();
    sweep->add_option("--out", sweep_out, "output root (default $DISTREG_OUT or ./runs)");
    sweep->add_option("--jobs", jobs, "parallel workers");

    std::string report_dir;
    auto* report = app.add_subcommand("report", "tabulate report.json files under a directory");
    report->add_option("--dir", report_dir, "directory of run outputs")->required();

    CLI11_PARSE(app, argc, argv);

    if (generate->parsed()) return distreg::cli::cmd_generate(kind, n, seed, out_path);
    if (run->parsed()) return distreg::cli::cmd_run(run_config, out_root, validate_only);
    if (sweep->parsed()) return distreg::cli::cmd_sweep(sweep_config, sweep_out, jobs);
    if (report->parsed()) return distreg::cli::cmd_report(report_dir);
    return distreg::cli::kExitConfigError;
}

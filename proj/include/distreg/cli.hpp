#pragma once

#include <string>

#include "distreg/trainer.hpp"

namespace distreg::cli {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitIoError = 4;

// Default output root: --out flag, else $DISTREG_OUT, else ./runs.
std::string resolve_out_root(const std::string& flag_value);

int cmd_generate(const std::string& kind, std::size_t n, std::uint64_t seed,
                 const std::string& out_path);

// Runs one experiment; writes <out>/<config_hash>/{report.json,density.csv,
// epochs.jsonl}. Exit 3 with the divergence flag recorded on a NaN abort.
// validate_only parses and checks the config, then stops before training.
int cmd_run(const std::string& config_path, const std::string& out_root,
            bool validate_only = false);

// Runs the sweep grid; per-run artifacts plus <out>/<sweep-dir>/aggregate.csv.
int cmd_sweep(const std::string& config_path, const std::string& out_root, std::size_t jobs);

// Prints an aligned table over every report.json found under `dir`
// (recursively), ordered by config hash, best value per metric column marked.
int cmd_report(const std::string& dir);

}  // namespace distreg::cli

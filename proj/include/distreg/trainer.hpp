#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "distreg/config.hpp"
#include "distreg/data.hpp"
#include "distreg/models.hpp"

namespace distreg::trainer {

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    std::optional<double> val_rmse;

    std::string to_json_line() const;
};

// All metric values are on the standardized-target scale; the recorded scaler
// converts back to raw units. Wall time is tracked in memory but deliberately
// left out of the serialized report so reruns are byte-identical.
struct MetricsReport {
    std::string label;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string loss_family;
    std::string dataset;
    double test_loss = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    double wasserstein = 0.0;
    double js = 0.0;
    double bc_target = 0.0;
    double bc_pred = 0.0;
    double delta_bc = 0.0;
    double val_rmse = 0.0;
    bool diverged = false;
    double wall_time_sec = 0.0;  // not serialized
    // provenance
    std::array<double, 3> split_ratios = {0.7, 0.15, 0.15};
    std::uint64_t split_seed = 0;
    std::string last_batch_policy;  // "keep" or "drop"
    double scaler_y_mean = 0.0;
    double scaler_y_std = 1.0;
    std::string config_json;  // canonical resolved config

    std::string to_json() const;
    static MetricsReport from_json(const std::string& text);
};

struct RunResult {
    std::unique_ptr<models::Model> model;
    MetricsReport report;
    std::vector<EpochRecord> epoch_log;
    // density curves for figure reproduction
    std::vector<double> kde_grid, target_density, pred_density;
    // test-split samples behind the metrics
    std::vector<double> test_targets, test_pred_sample;
};

// Builds the dataset described by the config (generate or load, split, inject,
// standardize).
data::Dataset assemble_dataset(const cli::DataSpec& spec);

// One seeded training run: shuffled mini-batches, Adam, per-epoch diagnostics,
// final metrics on the test split in eval mode. A non-finite loss aborts with
// the divergence flag set instead of raising. `on_epoch`, when set, streams
// each record as it is produced (the CLI appends them to epochs.jsonl live).
using EpochCallback = std::function<void(const EpochRecord&)>;
RunResult train(const cli::RunConfig& cfg, const EpochCallback& on_epoch = {});

struct SweepRow {
    cli::RunConfig config;
    MetricsReport report;
};

struct SweepResult {
    std::vector<SweepRow> rows;  // one per (grid point, seed), config-hash order
    // Aggregates keyed by grid point (config with seed stripped), in
    // config-hash order: median and mean per metric over seeds.
    struct Aggregate {
        std::string label;
        std::string grid_hash;
        double separation = 0.0;
        double alpha = 0.0;
        std::string family;
        std::size_t runs = 0;
        std::size_t diverged = 0;
        double median_rmse = 0.0, mean_rmse = 0.0;
        double median_wasserstein = 0.0, median_js = 0.0, median_delta_bc = 0.0;
        double median_test_loss = 0.0;
    };
    std::vector<Aggregate> aggregates;
};

// Cross product of the sweep axes (values absent from the spec keep the base
// config's setting). `jobs` caps the number of parallel workers; results are
// merged in deterministic config-hash order regardless of completion order.
SweepResult sweep(const cli::RunConfig& base, const cli::SweepSpec& spec, std::size_t jobs = 1);

// Expands a sweep spec into the concrete run configs (also used by tests).
std::vector<cli::RunConfig> expand_sweep(const cli::RunConfig& base, const cli::SweepSpec& spec);

double median(std::vector<double> values);

}  // namespace distreg::trainer

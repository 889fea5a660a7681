#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "distreg/losses.hpp"
#include "distreg/models.hpp"

namespace distreg::cli {

enum class DatasetKind { InverseSquare, TwoPath, UnimodalLinear, Csv };

std::string dataset_kind_name(DatasetKind k);
DatasetKind dataset_kind_from_name(const std::string& name);

struct DataSpec {
    DatasetKind kind = DatasetKind::TwoPath;
    std::size_t n = 5000;
    std::uint64_t seed = 7;
    double noise_sd = -1.0;  // <0 means the generator default
    double radius = 5.0;     // two-path
    double slope = 3.0;      // unimodal-linear
    std::string csv_path;
    std::string target_column = "y";
    std::vector<std::string> feature_columns;  // empty = all non-target
    std::array<double, 3> split_ratios = {0.7, 0.15, 0.15};
    std::uint64_t split_seed = 0;  // 0 = derive from seed
    std::optional<double> separation;

    double effective_noise_sd() const;
    std::uint64_t effective_split_seed() const;
};

struct MetricsSpec {
    int js_bins = 64;
    std::size_t kde_points = 512;
};

struct RunConfig {
    int schema = 1;
    std::string label;
    DataSpec data;
    models::ModelSpec model;  // input_dim 0 = resolved from the dataset
    losses::LossSpec loss;
    MetricsSpec metrics;
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    double lr = 1e-3;
    double weight_decay = 0.0;
    std::uint64_t seed = 1;
    std::size_t eval_cadence = 10;
    std::vector<double> quantile_levels_for_model() const { return loss.quantile_levels; }

    void validate() const;  // includes head/loss compatibility
};

struct SweepSpec {
    std::vector<double> separation_values;
    std::vector<double> alpha_values;
    std::vector<std::string> families;  // family[:variant]
    std::vector<std::uint64_t> seed_values;
    std::size_t num_seeds = 0;  // used when seed_values is empty: derive from base seed

    std::vector<std::uint64_t> resolve_seeds(std::uint64_t base_seed) const;
};

struct Experiment {
    RunConfig run;
    std::optional<SweepSpec> sweep;
};

// Parses the documented key = value / [section] grammar. Unknown sections or
// keys and malformed values raise ConfigError with the line number.
Experiment parse_experiment_text(const std::string& text, const std::string& origin = "<config>");
Experiment load_experiment(const std::string& path);

// Canonical JSON of the fully resolved config (defaults applied, keys sorted,
// seed included). The config hash is FNV-1a over these bytes, so semantically
// identical files hash identically.
std::string canonical_config_json(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

// Head kind implied by a loss family, used when [model] head is omitted.
models::HeadKind default_head_for(losses::Family family);

}  // namespace distreg::cli

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "distreg/matrix.hpp"
#include "distreg/rng.hpp"

namespace distreg::data {

// Per-column z-score parameters, fit on the training split only.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> stddev;  // constant columns are clamped to 1
};

struct SplitIndices {
    std::vector<std::size_t> train, val, test;
};

struct Dataset {
    Matrix features;  // n x d
    std::vector<double> targets;
    std::vector<std::string> feature_names;
    SplitIndices split;
    Scaler scaler_x;  // d columns
    Scaler scaler_y;  // 1 column
    bool standardized = false;

    std::size_t n() const { return targets.size(); }
    std::size_t dim() const { return features.cols(); }

    Matrix gather_features(const std::vector<std::size_t>& idx) const;
    std::vector<double> gather_targets(const std::vector<std::size_t>& idx) const;
};

// y ~ U[-3,3]; informative feature x = y^2 + noise; plus an independent
// standard-normal noise channel. The inverse mapping x -> +/- sqrt(x) is
// conditionally bimodal.
Dataset gen_inverse_square(std::size_t n, double noise_sd, std::uint64_t seed);

// Noisy circle of radius r: feature x = r cos(phi) + noise, target
// y = r sin(phi) + noise; plus a noise channel. P(y|x) has two arcs.
Dataset gen_two_path(std::size_t n, double r, double noise_sd, std::uint64_t seed);

// Unimodal control: y = slope * x + noise with x ~ N(0,1), plus a noise
// channel. Used as the base distribution for separation injection.
Dataset gen_unimodal_linear(std::size_t n, double slope, double noise_sd, std::uint64_t seed);

struct KMeans2Result {
    double c_low = 0.0;
    double c_high = 0.0;
    bool converged = false;
};

// Lloyd's algorithm on scalars with K=2. Deterministic: centers start at the
// 10th and 90th percentiles, so the seed parameter is reserved and currently
// unused. Converged when assignments stop changing.
KMeans2Result kmeans2_1d(const std::vector<double>& values, std::uint64_t seed, int max_iter = 100);

struct SeparationConfig {
    double S = 0.0;
    std::uint64_t kmeans_seed = 0;
    double c_mid = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
};

// Derives the split point and domain bounds from the training targets only.
SeparationConfig fit_separation(const Dataset& ds, double S, std::uint64_t kmeans_seed);

// Divergent linear transform pulling the two K-means halves toward the domain
// bounds: y' = y (1-S) + y_min S below the centroid midpoint, y_max S above.
// The same c_mid and bounds apply to every split. Operates on raw targets;
// standardize afterwards.
void inject_separation(Dataset& ds, const SeparationConfig& cfg);
void inject_separation(Dataset& ds, double S, std::uint64_t kmeans_seed);

// Seeded uniform partition; ratios must sum to 1 and every part must be
// nonempty.
void assign_split(Dataset& ds, const std::array<double, 3>& ratios, std::uint64_t seed);

// Fits per-column z-score stats on the train split and transforms all rows
// (features and targets). Constant columns keep std = 1 so indexing is stable.
void zscore_fit_transform(Dataset& ds);

std::vector<double> zscore_apply(const std::vector<double>& values, const Scaler& scaler,
                                 std::size_t column = 0);
std::vector<double> zscore_inverse(const std::vector<double>& values, const Scaler& scaler,
                                   std::size_t column = 0);

// CSV with a header row, comma separators, '.' decimals, UTF-8. Embedding
// files use the same schema with columns f0..f1279, y.
Dataset load_csv(const std::string& path, const std::string& target_column,
                 const std::vector<std::string>& feature_columns = {});
void write_csv(const std::string& path, const Dataset& ds);

// Eq-style error target for ingested probability columns: y = 1 - p.
double error_target_from_probability(double p);

}  // namespace distreg::data

#include "distreg/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "distreg/errors.hpp"

namespace distreg::data {

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

Matrix Dataset::gather_features(const std::vector<std::size_t>& idx) const {
    Matrix out(idx.size(), features.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < features.cols(); ++j) out(i, j) = features(idx[i], j);
    return out;
}

std::vector<double> Dataset::gather_targets(const std::vector<std::size_t>& idx) const {
    std::vector<double> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = targets[idx[i]];
    return out;
}

Dataset gen_inverse_square(std::size_t n, double noise_sd, std::uint64_t seed) {
    if (n < 1) throw ContractError("gen_inverse_square: n must be >= 1");
    Rng rng(seed);
    Dataset ds;
    ds.features = Matrix(n, 2);
    ds.targets.resize(n);
    ds.feature_names = {"x0", "x1"};
    for (std::size_t i = 0; i < n; ++i) {
        const double y = rng.uniform(-3.0, 3.0);
        ds.targets[i] = y;
        ds.features(i, 0) = y * y + (noise_sd > 0.0 ? rng.normal(0.0, noise_sd) : 0.0);
        ds.features(i, 1) = rng.normal();
    }
    return ds;
}

Dataset gen_two_path(std::size_t n, double r, double noise_sd, std::uint64_t seed) {
    if (n < 1) throw ContractError("gen_two_path: n must be >= 1");
    Rng rng(seed);
    Dataset ds;
    ds.features = Matrix(n, 2);
    ds.targets.resize(n);
    ds.feature_names = {"x0", "x1"};
    for (std::size_t i = 0; i < n; ++i) {
        const double phi = rng.uniform(0.0, 2.0 * M_PI);
        const double ex = noise_sd > 0.0 ? rng.normal(0.0, noise_sd) : 0.0;
        const double ey = noise_sd > 0.0 ? rng.normal(0.0, noise_sd) : 0.0;
        ds.features(i, 0) = r * std::cos(phi) + ex;
        ds.targets[i] = r * std::sin(phi) + ey;
        ds.features(i, 1) = rng.normal();
    }
    return ds;
}

Dataset gen_unimodal_linear(std::size_t n, double slope, double noise_sd, std::uint64_t seed) {
    if (n < 1) throw ContractError("gen_unimodal_linear: n must be >= 1");
    Rng rng(seed);
    Dataset ds;
    ds.features = Matrix(n, 2);
    ds.targets.resize(n);
    ds.feature_names = {"x0", "x1"};
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.normal();
        ds.features(i, 0) = x;
        ds.targets[i] = slope * x + (noise_sd > 0.0 ? rng.normal(0.0, noise_sd) : 0.0);
        ds.features(i, 1) = rng.normal();
    }
    return ds;
}

KMeans2Result kmeans2_1d(const std::vector<double>& values, std::uint64_t /*seed*/, int /*max_iter*/) {
    if (values.size() < 2) throw ContractError("kmeans2_1d: need at least 2 values");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back())
        throw ContractError("kmeans2_1d: need at least 2 distinct values");

    // In 1-D every K=2 assignment that Lloyd's iteration can converge to is a
    // threshold partition of the sorted values, so the global optimum is found
    // exactly by scanning all n-1 split points with prefix sums. Deterministic
    // and order-independent; the seed parameter is reserved.
    const std::size_t n = sorted.size();
    std::vector<double> prefix_sum(n + 1, 0.0), prefix_sq(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        prefix_sum[i + 1] = prefix_sum[i] + sorted[i];
        prefix_sq[i + 1] = prefix_sq[i] + sorted[i] * sorted[i];
    }
    KMeans2Result res;
    double best_sse = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < n; ++k) {
        const double nl = static_cast<double>(k), nh = static_cast<double>(n - k);
        const double sum_lo = prefix_sum[k], sum_hi = prefix_sum[n] - prefix_sum[k];
        const double sse = (prefix_sq[k] - sum_lo * sum_lo / nl) +
                           (prefix_sq[n] - prefix_sq[k] - sum_hi * sum_hi / nh);
        if (sse < best_sse) {
            best_sse = sse;
            res.c_low = sum_lo / nl;
            res.c_high = sum_hi / nh;
        }
    }
    res.converged = true;
    return res;
}

SeparationConfig fit_separation(const Dataset& ds, double S, std::uint64_t kmeans_seed) {
    if (S < 0.0 || S > 1.0) throw ContractError("separation S must lie in [0,1]");
    const std::vector<double> train_y =
        ds.split.train.empty() ? ds.targets : ds.gather_targets(ds.split.train);
    const KMeans2Result km = kmeans2_1d(train_y, kmeans_seed);
    if (km.c_low == km.c_high) throw ContractError("inject_separation: degenerate 2-means centroids");
    SeparationConfig cfg;
    cfg.S = S;
    cfg.kmeans_seed = kmeans_seed;
    cfg.c_mid = 0.5 * (km.c_low + km.c_high);
    const auto [lo_it, hi_it] = std::minmax_element(train_y.begin(), train_y.end());
    cfg.y_min = *lo_it;
    cfg.y_max = *hi_it;
    return cfg;
}

void inject_separation(Dataset& ds, const SeparationConfig& cfg) {
    for (double& y : ds.targets) {
        const double anchor = y <= cfg.c_mid ? cfg.y_min : cfg.y_max;
        y = y * (1.0 - cfg.S) + anchor * cfg.S;
    }
}

void inject_separation(Dataset& ds, double S, std::uint64_t kmeans_seed) {
    inject_separation(ds, fit_separation(ds, S, kmeans_seed));
}

void assign_split(Dataset& ds, const std::array<double, 3>& ratios, std::uint64_t seed) {
    const double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::fabs(sum - 1.0) > 1e-9) throw ContractError("split ratios must sum to 1");
    const std::size_t n = ds.n();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    // Fisher-Yates with the toolkit RNG so splits are platform-stable.
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(idx[i - 1], idx[j]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n)));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
        throw ContractError("split: every partition must be nonempty");
    ds.split.train.assign(idx.begin(), idx.begin() + n_train);
    ds.split.val.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
    ds.split.test.assign(idx.begin() + n_train + n_val, idx.end());
}

namespace {

Scaler fit_scaler_columns(const Matrix& m, const std::vector<std::size_t>& rows) {
    Scaler s;
    s.mean.resize(m.cols());
    s.stddev.resize(m.cols());
    const double n = static_cast<double>(rows.size());
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double mean = 0.0;
        for (std::size_t r : rows) mean += m(r, j);
        mean /= n;
        double var = 0.0;
        for (std::size_t r : rows) {
            const double d = m(r, j) - mean;
            var += d * d;
        }
        var /= n;
        s.mean[j] = mean;
        const double sd = std::sqrt(var);
        // constant columns (up to accumulation noise) clamp to 1
        s.stddev[j] = sd > 1e-12 * std::max(1.0, std::fabs(mean)) ? sd : 1.0;
    }
    return s;
}

}  // namespace

void zscore_fit_transform(Dataset& ds) {
    if (ds.split.train.empty()) throw ContractError("zscore: empty train split");
    if (ds.standardized) throw ContractError("zscore: dataset already standardized");
    ds.scaler_x = fit_scaler_columns(ds.features, ds.split.train);
    Matrix y_col = Matrix::from_column(ds.targets);
    ds.scaler_y = fit_scaler_columns(y_col, ds.split.train);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j)
            ds.features(i, j) = (ds.features(i, j) - ds.scaler_x.mean[j]) / ds.scaler_x.stddev[j];
        ds.targets[i] = (ds.targets[i] - ds.scaler_y.mean[0]) / ds.scaler_y.stddev[0];
    }
    ds.standardized = true;
}

std::vector<double> zscore_apply(const std::vector<double>& values, const Scaler& scaler,
                                 std::size_t column) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = (values[i] - scaler.mean[column]) / scaler.stddev[column];
    return out;
}

std::vector<double> zscore_inverse(const std::vector<double>& values, const Scaler& scaler,
                                   std::size_t column) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = values[i] * scaler.stddev[column] + scaler.mean[column];
    return out;
}

Dataset load_csv(const std::string& path, const std::string& target_column,
                 const std::vector<std::string>& feature_columns) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    auto column_index = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ParseError(path + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t target_idx = column_index(target_column);
    std::vector<std::size_t> feature_idx;
    if (feature_columns.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (j != target_idx) feature_idx.push_back(j);
    } else {
        for (const auto& name : feature_columns) feature_idx.push_back(column_index(name));
    }

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        row.reserve(header.size());
        std::size_t start = 0;
        for (std::size_t col = 0; col <= header.size(); ++col) {
            const std::size_t end = line.find(',', start);
            if (col == header.size()) {
                if (end != std::string::npos)
                    throw ParseError(path + ": row " + std::to_string(line_no - 1) +
                                     " has more cells than the header");
                break;
            }
            const std::string cell =
                end == std::string::npos ? line.substr(start) : line.substr(start, end - start);
            if (end == std::string::npos && col + 1 != header.size())
                throw ParseError(path + ": row " + std::to_string(line_no - 1) + " has " +
                                 std::to_string(col + 1) + " cells, expected " +
                                 std::to_string(header.size()));
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc{} || ptr != cell.data() + cell.size())
                throw ParseError(path + ": non-numeric cell at row " + std::to_string(line_no - 1) +
                                 ", column " + header[col]);
            if (!std::isfinite(v))
                throw ParseError(path + ": non-finite value at row " + std::to_string(line_no - 1) +
                                 ", column " + header[col]);
            row.push_back(v);
            start = end == std::string::npos ? line.size() : end + 1;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": no data rows");

    Dataset ds;
    ds.features = Matrix(rows.size(), feature_idx.size());
    ds.targets.resize(rows.size());
    for (std::size_t j : feature_idx) ds.feature_names.push_back(header[j]);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < feature_idx.size(); ++j)
            ds.features(i, j) = rows[i][feature_idx[j]];
        ds.targets[i] = rows[i][target_idx];
    }
    return ds;
}

void write_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        const std::string name =
            j < ds.feature_names.size() ? ds.feature_names[j] : "x" + std::to_string(j);
        out << name << ',';
    }
    out << "y\n";
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j) out << format_double(ds.features(i, j)) << ',';
        out << format_double(ds.targets[i]) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

double error_target_from_probability(double p) {
    if (p < 0.0 || p > 1.0) throw ContractError("probability must lie in [0,1]");
    return 1.0 - p;
}

}  // namespace distreg::data

#pragma once

#include <cstddef>
#include <vector>

namespace distreg::metrics {

double rmse(const std::vector<double>& pred, const std::vector<double>& target);
double mae(const std::vector<double>& pred, const std::vector<double>& target);

// W1 between two empirical distributions via merged-breakpoint integration of
// |F_a - F_b|; sample sizes may differ.
double exact_wasserstein(const std::vector<double>& a, const std::vector<double>& b);

// Base-2 Jensen-Shannon divergence between histograms of the two samples on
// `bins` equal-width bins spanning their joint range, with `smoothing` mass
// added to every bin. Result lies in [0,1]. Values are comparable only for a
// fixed binning; the bin count is a config knob.
double js_divergence(const std::vector<double>& a, const std::vector<double>& b, int bins = 64,
                     double smoothing = 1e-10);

struct DistributionSummary {
    std::vector<double> sample;  // sorted ascending
    std::size_t n = 0;
    double mean = 0.0;
    double stddev = 0.0;           // population (biased) standard deviation
    double skewness = 0.0;         // g1 = m3 / m2^(3/2)
    double excess_kurtosis = 0.0;  // g2 = m4 / m2^2 - 3
};

DistributionSummary summarize(const std::vector<double>& sample);

// (g1^2 + 1) / (g2 + 3(n-1)^2 / ((n-2)(n-3))). Values above 0.555 (the
// uniform-distribution benchmark) indicate bimodality.
double bimodality_coefficient(const DistributionSummary& s);
double bimodality_coefficient(const std::vector<double>& sample);

// |BC(target) - BC(pred)|
double delta_bc(const std::vector<double>& target_sample, const std::vector<double>& pred_sample);

// Gaussian-kernel density estimate evaluated on `grid`.
std::vector<double> kde_density(const std::vector<double>& sample, const std::vector<double>& grid,
                                double bandwidth);

// Scott's rule: std * n^(-1/5), floored at 1e-6 so degenerate samples still
// produce a usable density.
double scott_bandwidth(const std::vector<double>& sample);

// Evenly spaced grid covering the samples' joint range plus 4 bandwidths.
std::vector<double> density_grid(const std::vector<double>& a, const std::vector<double>& b,
                                 double bandwidth, std::size_t points);

}  // namespace distreg::metrics

#include "distreg/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "distreg/errors.hpp"

namespace distreg::metrics {

namespace {

void require_equal_nonempty(const std::vector<double>& a, const std::vector<double>& b,
                            const char* op) {
    if (a.empty()) throw ContractError(std::string(op) + ": empty input");
    if (a.size() != b.size())
        throw ContractError(std::string(op) + ": length mismatch, " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()));
}

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

}  // namespace

double rmse(const std::vector<double>& pred, const std::vector<double>& target) {
    require_equal_nonempty(pred, target, "rmse");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(pred.size()));
}

double mae(const std::vector<double>& pred, const std::vector<double>& target) {
    require_equal_nonempty(pred, target, "mae");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::fabs(pred[i] - target[i]);
    return s / static_cast<double>(pred.size());
}

double exact_wasserstein(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw ContractError("exact_wasserstein: empty input");
    std::vector<double> sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    // Sweep the pooled values; between consecutive breakpoints the CDF gap is
    // constant, contributing |F_a - F_b| * dx.
    double total = 0.0;
    std::size_t ia = 0, ib = 0;
    double prev = std::min(sa.front(), sb.front());
    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    while (ia < sa.size() || ib < sb.size()) {
        const double x = (ia < sa.size() && (ib == sb.size() || sa[ia] <= sb[ib])) ? sa[ia] : sb[ib];
        total += std::fabs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb) * (x - prev);
        while (ia < sa.size() && sa[ia] == x) ++ia;
        while (ib < sb.size() && sb[ib] == x) ++ib;
        prev = x;
    }
    return total;
}

double js_divergence(const std::vector<double>& a, const std::vector<double>& b, int bins,
                     double smoothing) {
    if (a.empty() || b.empty()) throw ContractError("js_divergence: empty input");
    if (bins < 1) throw ContractError("js_divergence: bins must be >= 1");
    const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
    const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
    const double lo = std::min(*amin, *bmin);
    const double hi = std::max(*amax, *bmax);
    if (lo == hi) return 0.0;  // both samples are a point mass at the same value

    const double width = (hi - lo) / bins;
    auto histogram = [&](const std::vector<double>& s) {
        std::vector<double> h(static_cast<std::size_t>(bins), smoothing);
        for (double v : s) {
            auto idx = static_cast<std::size_t>((v - lo) / width);
            if (idx >= h.size()) idx = h.size() - 1;  // hi falls into the last bin
            h[idx] += 1.0;
        }
        double total = 0.0;
        for (double v : h) total += v;
        for (double& v : h) v /= total;
        return h;
    };
    const std::vector<double> p = histogram(a);
    const std::vector<double> q = histogram(b);

    // JS = 0.5 KL(p||m) + 0.5 KL(q||m), base-2 logs so the result is in [0,1].
    double js = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) js += 0.5 * p[i] * std::log2(p[i] / m);
        if (q[i] > 0.0) js += 0.5 * q[i] * std::log2(q[i] / m);
    }
    return std::max(0.0, std::min(1.0, js));
}

DistributionSummary summarize(const std::vector<double>& sample) {
    if (sample.empty()) throw ContractError("summarize: empty sample");
    DistributionSummary s;
    s.sample = sample;
    std::sort(s.sample.begin(), s.sample.end());
    s.n = sample.size();
    const double n = static_cast<double>(s.n);
    for (double v : sample) s.mean += v;
    s.mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : sample) {
        const double d = v - s.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    s.stddev = std::sqrt(m2);
    if (m2 > 0.0) {
        s.skewness = m3 / std::pow(m2, 1.5);
        s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return s;
}

double bimodality_coefficient(const DistributionSummary& s) {
    if (s.n < 4) throw ContractError("bimodality_coefficient: need n >= 4");
    if (!(s.stddev > 0.0)) throw ContractError("bimodality_coefficient: zero standard deviation");
    const double n = static_cast<double>(s.n);
    const double correction = 3.0 * (n - 1.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0));
    const double denom = s.excess_kurtosis + correction;
    if (denom <= 0.0) throw ContractError("bimodality_coefficient: nonpositive denominator");
    return (s.skewness * s.skewness + 1.0) / denom;
}

double bimodality_coefficient(const std::vector<double>& sample) {
    return bimodality_coefficient(summarize(sample));
}

double delta_bc(const std::vector<double>& target_sample, const std::vector<double>& pred_sample) {
    return std::fabs(bimodality_coefficient(target_sample) - bimodality_coefficient(pred_sample));
}

std::vector<double> kde_density(const std::vector<double>& sample, const std::vector<double>& grid,
                                double bandwidth) {
    if (bandwidth <= 0.0) throw ContractError("kde_density: bandwidth must be positive");
    std::vector<double> density(grid.size(), 0.0);
    const double scale = 1.0 / (static_cast<double>(sample.size()) * bandwidth);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double s = 0.0;
        for (double x : sample) {
            const double z = (grid[g] - x) / bandwidth;
            s += kInvSqrt2Pi * std::exp(-0.5 * z * z);
        }
        density[g] = s * scale;
    }
    return density;
}

double scott_bandwidth(const std::vector<double>& sample) {
    const DistributionSummary s = summarize(sample);
    const double h = s.stddev * std::pow(static_cast<double>(s.n), -0.2);
    return std::max(h, 1e-6);
}

std::vector<double> density_grid(const std::vector<double>& a, const std::vector<double>& b,
                                 double bandwidth, std::size_t points) {
    if (points < 2) throw ContractError("density_grid: need at least 2 points");
    const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
    const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
    const double lo = std::min(*amin, *bmin) - 4.0 * bandwidth;
    const double hi = std::max(*amax, *bmax) + 4.0 * bandwidth;
    std::vector<double> grid(points);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) grid[i] = lo + step * static_cast<double>(i);
    return grid;
}

}  // namespace distreg::metrics

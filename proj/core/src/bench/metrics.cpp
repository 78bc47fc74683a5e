#include "fpinv/bench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace fpinv::bench {

double metric_l2(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    require(a.size() == b.size(), "metric_l2: size mismatch");
    return (a - b).norm();
}

double metric_psnr(const Eigen::VectorXd& reference, const Eigen::VectorXd& test, double peak) {
    require(reference.size() == test.size() && reference.size() > 0, "metric_psnr: size mismatch");
    require(peak > 0.0 && std::isfinite(peak), "metric_psnr: peak must be positive");
    const double mse = (reference - test).squaredNorm() / static_cast<double>(reference.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double dynamic_range(const Eigen::VectorXd& x) {
    require(x.size() > 0, "dynamic_range: empty vector");
    return x.maxCoeff() - x.minCoeff();
}

double quantile(std::span<const double> values, double q) {
    require(!values.empty(), "quantile: empty input");
    require(q >= 0.0 && q <= 1.0, "quantile: q must lie in [0, 1]");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) return v[lo];
    return v[lo] + frac * (v[hi] - v[lo]);
}

double median(std::span<const double> values) { return quantile(values, 0.5); }

double mean(std::span<const double> values) {
    require(!values.empty(), "mean: empty input");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace fpinv::bench

#pragma once

#include <span>

#include "fpinv/types.hpp"

namespace fpinv::bench {

/// Euclidean distance.
double metric_l2(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// 10 log10(peak^2 / MSE). Returns +inf for an exact match.
double metric_psnr(const Eigen::VectorXd& reference, const Eigen::VectorXd& test, double peak);

/// max - min of the entries; the PSNR peak of a reference signal.
double dynamic_range(const Eigen::VectorXd& x);

double median(std::span<const double> values);
double mean(std::span<const double> values);
double quantile(std::span<const double> values, double q);

}  // namespace fpinv::bench

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace catbbm::stats {

/// Pairwise (cascade) summation; order-independent to O(log n) rounding.
double pairwise_sum(std::span<const double> values);

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error = 0.0;
};

/// Two-pass mean/variance built on pairwise_sum. Requires n >= 2 for a
/// finite standard error.
Moments moments(std::span<const double> values);

/// Type-7 (linear interpolation) sample quantile of unsorted data.
double quantile(std::vector<double> values, double p);

/// Same, for data already sorted ascending.
double quantile_sorted(std::span<const double> sorted, double p);

/// sup |F_n - F| for a continuous reference CDF, given F at the sorted sample.
double ks_statistic_sorted(std::span<const double> cdf_at_sorted_sample);

/// One-sample KS distance against `cdf`.
double ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Two-sample KS distance.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Critical value c(alpha)/sqrt(n) for the one-sample test, alpha in {0.05, 0.01}.
double ks_critical_value(std::size_t n, double alpha);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace catbbm::stats

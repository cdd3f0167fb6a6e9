#pragma once

#include <span>
#include <vector>

namespace irt {

/// Linear interpolation between closest ranks: position (n-1)*p/100 in the
/// sorted values. Throws StatsError on empty input or p outside [0,100].
double percentile(std::span<const double> values, double p);

/// Pearson product-moment correlation. Throws StatsError for length
/// mismatch, fewer than 2 points, or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// 1-based ranks, ties receive their average rank.
std::vector<double> average_ranks(std::span<const double> values);

double mean(std::span<const double> values);
double median(std::span<const double> values);
/// Sample standard deviation (n-1 denominator); 0 for fewer than 2 values.
double stddev(std::span<const double> values);
double mean_abs_diff(std::span<const double> x, std::span<const double> y);

}  // namespace irt

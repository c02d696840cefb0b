#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dwlab::stats {

double mean(std::span<const double> v);
/// Unbiased (n-1) sample variance; 0 for fewer than two values.
double variance(std::span<const double> v);
double median(std::vector<double> v);

struct GaussianityZ {
    double z_skew = 0.0;
    double z_kurt = 0.0;
};

/// Z-scores of the bias-adjusted sample skewness G1 and excess kurtosis G2,
///   SE_skew = sqrt(6n(n-1) / ((n-2)(n+1)(n+3)))
///   SE_kurt = 2 SE_skew sqrt((n^2-1) / ((n-3)(n+5)))
/// Needs n >= 8 and positive variance.
GaussianityZ gaussianity_z(std::span<const double> samples);

/// Rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool excludes_zero() const { return lo > 0.0 || hi < 0.0; }
};

/// Percentile bootstrap interval for mean(a) - mean(b).
Interval bootstrap_mean_diff(std::span<const double> a, std::span<const double> b, double level,
                             std::size_t resamples, std::uint64_t seed);

}  // namespace dwlab::stats

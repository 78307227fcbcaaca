#pragma once

// Small statistics toolbox shared by the diagnostics and the test suites.

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace libmlab::stats {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean (0 for fewer than 2 samples)
};

MeanSe mean_se(std::span<const double> xs);

double normal_cdf(double z);

// Survival function of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_sf(double lambda);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample Kolmogorov-Smirnov test against a continuous CDF. Uses the
// asymptotic distribution with the Stephens small-sample correction.
KsResult ks_test(std::vector<double> samples,
                 const std::function<double(double)>& cdf);

// 1% critical value of the one-sample KS statistic (asymptotic).
double ks_critical_1pct(std::size_t n);

// Percentile bootstrap interval of statistic(resample) where a resample is a
// list of indices into [0, n). Deterministic in seed.
std::pair<double, double> bootstrap_interval(
    std::size_t n, int resamples, double level, std::uint64_t seed,
    const std::function<double(std::span<const std::size_t>)>& statistic);

}  // namespace libmlab::stats

#pragma once

// Small statistics toolbox: running moments, KS and chi-square tests with
// p-values, log-log regression, batch bootstrap.  Self-contained (the p-value
// special functions live in stats.cpp).

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "levylan/rng.hpp"

namespace levylan {

struct MeanVar {
  long n = 0;
  double mean = 0.0, m2 = 0.0;
  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / double(n);
    m2 += d * (x - mean);
  }
  double var() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
  double se() const;
};

// Regularized upper incomplete gamma Q(a,x)
double gamma_q(double a, double x);

// Survival function of chi-square with k dof
double chi2_sf(double x, double k);

// Asymptotic Kolmogorov distribution survival Q(lambda)
double kolmogorov_sf(double lambda);

struct KsResult {
  double d = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

// One-sample KS against a CDF; sample need not be sorted (copied internally).
KsResult ks_test(std::vector<double> sample,
                 const std::function<double(double)>& cdf);

// Two-sample KS.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct Chi2Result {
  double stat = 0.0;
  double p = 1.0;
  long dof = 0;
};

// GOF with expected counts; bins with expected < 5 are pooled into neighbors.
Chi2Result chi2_gof(const std::vector<double>& observed,
                    const std::vector<double>& expected);

struct FitResult {
  double slope = 0.0, intercept = 0.0, se_slope = 0.0, r2 = 0.0;
};

FitResult ols_fit(const std::vector<double>& x, const std::vector<double>& y);

// Slope SE by bootstrap over per-point replicate batches: batch_means[i] holds
// the batch-level estimates entering point i (heavy-tail robust).
double slope_se_bootstrap(const std::vector<double>& x,
                          const std::vector<std::vector<double>>& batch_means,
                          bool log_y, int resamples, uint64_t seed);

double quantile_sorted(const std::vector<double>& sorted, double q);

struct EnergyResult {
  double stat = 0.0;
  double p = 1.0;
  int permutations = 0;
};

// Two-sample energy distance test in the plane, permutation p-value with the
// observed labeling counted into the null set.  Pairwise distances are cached
// once in float, so keep na + nb below ~2e4.
EnergyResult energy_test_2d(const std::vector<std::array<double, 2>>& a,
                            const std::vector<std::array<double, 2>>& b,
                            int permutations, uint64_t seed);

}  // namespace levylan

#pragma once

#include <cstdint>
#include <vector>

#include "esn/reservoir.hpp"

namespace esn {

/// Summary of sampled difference-quotient magnitudes of an activation.
struct LipschitzStats {
  double max = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  long sample_count = 0;
  double epsilon = 0.0;
  Interval domain{0.0, 0.0};
};

/// Samples |f(x + epsilon) - f(x)| / epsilon at uniformly drawn points and
/// reports max, median, and 95th percentile; deterministic in the seed.
/// Stochastic activations are rejected.
LipschitzStats estimate_lipschitz(const ActivationSpec& spec,
                                  double epsilon = 1e-6,
                                  long samples = 100000,
                                  Interval domain = Interval{-5.0, 5.0},
                                  std::uint64_t seed = 0);

/// Leak-adjusted contraction factor (1 - leak) + leak * l_g * w_norm.
double effective_gain(double leak, double l_g, double w_norm);

/// State dimension per codebook level, n / k.
double crowding_ratio(long n, long k);

/// Pairwise separation extremes of a finite codebook.
struct CodebookStats {
  double d_l = 0.0;
  double delta_l = 0.0;
  long k = 0;
};

/// Computes max and min nonzero pairwise separations; rejects codebooks
/// with fewer than two values or duplicates.
CodebookStats codebook_stats(const std::vector<double>& levels);

/// Time-averaged contraction proxy along a trajectory, with the count of
/// codebook jump points excluded from the slope average.
struct GainProxy {
  double value = 0.0;
  long excluded = 0;
};

/// Averages (1 - leak) + leak * (mean local slope) * ||w_res||_inf over the
/// recorded pre-activation vectors, estimating slopes by central differences
/// and skipping codebook discontinuities.
GainProxy mean_jacobian_gain_proxy(const std::vector<Vecd>& preactivations,
                                   const ActivationSpec& spec,
                                   const ReservoirMatrices& m, double leak,
                                   double epsilon = 1e-6);

}  // namespace esn

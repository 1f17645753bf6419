#include "esn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "esn/rng.hpp"

namespace esn {

namespace {

[[noreturn]] void fail(const char* what) { throw std::invalid_argument(what); }

double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

LipschitzStats estimate_lipschitz(const ActivationSpec& spec, double epsilon,
                                  long samples, Interval domain,
                                  std::uint64_t seed) {
  spec.validate();
  if (spec.stochastic()) {
    fail("difference quotients of a stochastic activation are undefined");
  }
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (samples < 1) fail("samples must be >= 1");
  if (!(domain.lo < domain.hi)) fail("domain must be a nonempty interval");

  Rng rng(mix_seed({seed, stream::lipschitz}));
  std::vector<double> slopes;
  slopes.reserve(static_cast<std::size_t>(samples));
  for (long i = 0; i < samples; ++i) {
    const double x = rng.uniform(domain.lo, domain.hi);
    slopes.push_back(std::fabs(spec.eval(x + epsilon) - spec.eval(x)) /
                     epsilon);
  }
  std::sort(slopes.begin(), slopes.end());

  LipschitzStats stats;
  stats.max = slopes.back();
  stats.median = percentile(slopes, 0.5);
  stats.p95 = percentile(slopes, 0.95);
  stats.sample_count = samples;
  stats.epsilon = epsilon;
  stats.domain = domain;
  return stats;
}

double effective_gain(double leak, double l_g, double w_norm) {
  if (!(leak > 0.0) || leak > 1.0) fail("leak must lie in (0, 1]");
  if (l_g < 0.0) fail("l_g must be nonnegative");
  if (w_norm < 0.0) fail("w_norm must be nonnegative");
  return (1.0 - leak) + leak * l_g * w_norm;
}

double crowding_ratio(long n, long k) {
  if (n < 1) fail("n must be >= 1");
  if (k < 2) fail("k must be >= 2");
  return static_cast<double>(n) / static_cast<double>(k);
}

CodebookStats codebook_stats(const std::vector<double>& levels) {
  if (levels.size() < 2) fail("a codebook needs at least two levels");
  std::vector<double> sorted = levels;
  std::sort(sorted.begin(), sorted.end());
  CodebookStats stats;
  stats.k = static_cast<long>(sorted.size());
  stats.d_l = sorted.back() - sorted.front();
  stats.delta_l = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double gap = sorted[i] - sorted[i - 1];
    if (gap == 0.0) fail("codebook levels must be distinct");
    stats.delta_l = std::min(stats.delta_l, gap);
  }
  return stats;
}

GainProxy mean_jacobian_gain_proxy(const std::vector<Vecd>& preactivations,
                                   const ActivationSpec& spec,
                                   const ReservoirMatrices& m, double leak,
                                   double epsilon) {
  spec.validate();
  if (spec.stochastic()) {
    fail("slope proxies of a stochastic activation are undefined");
  }
  if (preactivations.empty()) {
    fail("the trajectory must record at least one pre-activation vector");
  }
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (!(leak > 0.0) || leak > 1.0) fail("leak must lie in (0, 1]");

  const double w_norm = induced_inf_norm(m.w_res);
  const bool codebook = spec.has_codebook();
  GainProxy proxy;
  double gain_sum = 0.0;
  for (const Vecd& pre : preactivations) {
    double slope_sum = 0.0;
    long included = 0;
    for (Index i = 0; i < pre.size(); ++i) {
      const double up = spec.eval(pre[i] + epsilon);
      const double down = spec.eval(pre[i] - epsilon);
      if (codebook && up != down) {
        ++proxy.excluded;
        continue;
      }
      slope_sum += std::fabs(up - down) / (2.0 * epsilon);
      ++included;
    }
    const double mean_slope =
        included > 0 ? slope_sum / static_cast<double>(included) : 0.0;
    gain_sum += (1.0 - leak) + leak * mean_slope * w_norm;
  }
  proxy.value = gain_sum / static_cast<double>(preactivations.size());
  return proxy;
}

}  // namespace esn

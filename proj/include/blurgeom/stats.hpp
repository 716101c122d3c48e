#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace blurgeom {

/// Ranks starting at 1; tied values share the average of their ranks.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of the two rank vectors.
double spearman_rho(std::span<const double> x, std::span<const double> y);

struct SpearmanResult {
  double rho;
  /// P(rho_perm >= rho) when rho >= 0, else P(rho_perm <= rho), over all
  /// permutations of the y ranks.
  double p_one_sided;
  /// P(|rho_perm| >= |rho|).
  double p_two_sided;
  std::size_t permutations;
};

inline constexpr std::size_t kMaxExactSpearman = 8;

/// Exact permutation test. Throws InsufficientPoints (< 2), TooManyItems
/// (> 8), DimensionMismatch, or InvalidArgument when either side is constant.
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

struct BetaSummary {
  double mean;
  double lo;
  double hi;
};

/// Beta(k + 1, n - k + 1) posterior of a rate under a flat prior: mean and
/// central interval holding `mass` of the probability.
BetaSummary beta_posterior(std::size_t k, std::size_t n, double mass = 0.68);

/// Linear-interpolation sample quantile (q in [0, 1]) of unsorted data.
double quantile(std::vector<double> data, double q);

}  // namespace blurgeom

#include "blurgeom/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>

#include "blurgeom/linalg.hpp"

namespace blurgeom {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "rank correlation of a constant sequence");
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  require_same_size(static_cast<Index>(x.size()), static_cast<Index>(y.size()), "spearman");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  require_same_size(static_cast<Index>(x.size()), static_cast<Index>(y.size()), "spearman");
  if (x.size() < 2) throw Error(ErrorCode::InsufficientPoints, "spearman needs >= 2 items");
  if (x.size() > kMaxExactSpearman) {
    throw Error(ErrorCode::TooManyItems, "exact spearman enumeration supports <= 8 items");
  }
  const auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  const double rho = pearson(rx, ry);
  const double tol = 1e-12;

  std::sort(ry.begin(), ry.end());
  std::size_t total = 0, one = 0, two = 0;
  // Every ordering of positions, including those that only swap tied ranks.
  std::vector<std::size_t> perm(ry.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> permuted(ry.size());
  do {
    for (std::size_t i = 0; i < perm.size(); ++i) permuted[i] = ry[perm[i]];
    const double r = pearson(rx, permuted);
    ++total;
    if (rho >= 0.0 ? r >= rho - tol : r <= rho + tol) ++one;
    if (std::abs(r) >= std::abs(rho) - tol) ++two;
  } while (std::next_permutation(perm.begin(), perm.end()));

  return SpearmanResult{rho, static_cast<double>(one) / static_cast<double>(total),
                        static_cast<double>(two) / static_cast<double>(total), total};
}

BetaSummary beta_posterior(std::size_t k, std::size_t n, double mass) {
  if (k > n) throw Error(ErrorCode::InvalidArgument, "k > n in beta posterior");
  if (!(mass > 0.0 && mass < 1.0)) throw Error(ErrorCode::InvalidArgument, "mass outside (0, 1)");
  const double a = static_cast<double>(k) + 1.0;
  const double b = static_cast<double>(n - k) + 1.0;
  const double tail = 0.5 * (1.0 - mass);
  return BetaSummary{a / (a + b), boost::math::ibeta_inv(a, b, tail),
                     boost::math::ibeta_inv(a, b, 1.0 - tail)};
}

double quantile(std::vector<double> data, double q) {
  if (data.empty()) throw Error(ErrorCode::EmptySet, "quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile outside [0, 1]");
  std::sort(data.begin(), data.end());
  const double pos = q * static_cast<double>(data.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, data.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return data[lo] + frac * (data[hi] - data[lo]);
}

}  // namespace blurgeom

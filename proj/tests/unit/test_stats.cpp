#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "blurgeom/error.hpp"
#include "blurgeom/stats.hpp"

using namespace blurgeom;

namespace {

/// 1 - 6 sum d^2 / (n (n^2 - 1)) for tie-free ranks.
double rho_closed_form(const std::vector<int>& perm) {
  const double n = static_cast<double>(perm.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) d2 += std::pow(static_cast<double>(perm[i]) - static_cast<double>(i), 2);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace

TEST(Ranks, TiesShareAverageRank) {
  const std::vector<double> v{10.0, 20.0, 20.0, 5.0};
  const auto r = average_ranks(v);
  EXPECT_EQ(r, (std::vector<double>{2.0, 3.5, 3.5, 1.0}));
}

TEST(Spearman, AdjacentSwapOfFiveItems) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{1, 2, 3, 5, 4};
  const SpearmanResult r = spearman(x, y);
  EXPECT_NEAR(r.rho, 0.9, 1e-15);
  EXPECT_EQ(r.permutations, 120u);
  EXPECT_DOUBLE_EQ(r.p_one_sided, 5.0 / 120.0);
  EXPECT_DOUBLE_EQ(r.p_two_sided, 10.0 / 120.0);
}

TEST(Spearman, PublishedPairIsNotAttainable) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{1, 2, 3, 5, 4};
  const SpearmanResult r = spearman(x, y);
  EXPECT_GT(std::abs(r.p_one_sided - 0.037), 4e-3);
  EXPECT_GT(std::abs(r.p_two_sided - 0.037), 4e-3);
}

TEST(Spearman, EnumerationMatchesClosedFormCounts) {
  std::vector<int> perm{0, 1, 2, 3, 4, 5};
  std::vector<double> rhos;
  do rhos.push_back(rho_closed_form(perm));
  while (std::next_permutation(perm.begin(), perm.end()));
  const std::vector<double> x{1, 2, 3, 4, 5, 6};
  const std::vector<double> y{2, 1, 3, 4, 6, 5};
  const SpearmanResult r = spearman(x, y);
  const double count = static_cast<double>(std::count_if(rhos.begin(), rhos.end(), [&](double v) { return v >= r.rho - 1e-12; }));
  EXPECT_DOUBLE_EQ(r.p_one_sided, count / 720.0);
  EXPECT_NEAR(r.rho, rho_closed_form({1, 0, 2, 3, 5, 4}), 1e-15);
}

TEST(Spearman, NegativeCorrelationUsesLowerTail) {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{4, 3, 2, 1};
  const SpearmanResult r = spearman(x, y);
  EXPECT_NEAR(r.rho, -1.0, 1e-15);
  EXPECT_DOUBLE_EQ(r.p_one_sided, 1.0 / 24.0);
  EXPECT_DOUBLE_EQ(r.p_two_sided, 2.0 / 24.0);
}

TEST(Spearman, SizeLimitsAndDegenerateInput) {
  const auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  std::vector<double> nine(9);
  std::iota(nine.begin(), nine.end(), 0.0);
  EXPECT_EQ(code([&] { spearman(nine, nine); }), ErrorCode::TooManyItems);
  const std::vector<double> one{1.0};
  EXPECT_EQ(code([&] { spearman(one, one); }), ErrorCode::InsufficientPoints);
  const std::vector<double> c{1, 1, 1}, d{1, 2, 3};
  EXPECT_EQ(code([&] { spearman(c, d); }), ErrorCode::InvalidArgument);
  const std::vector<double> eight{1, 2, 3, 4, 5, 6, 7, 8};
  EXPECT_EQ(spearman(eight, eight).permutations, 40320u);
  EXPECT_DOUBLE_EQ(spearman(eight, eight).p_one_sided, 1.0 / 40320.0);
}

TEST(Beta, PosteriorSummary) {
  const BetaSummary b = beta_posterior(3, 10);
  EXPECT_DOUBLE_EQ(b.mean, 4.0 / 12.0);
  EXPECT_LT(b.lo, b.mean);
  EXPECT_GT(b.hi, b.mean);
  const BetaSummary flat = beta_posterior(0, 0, 0.5);
  EXPECT_NEAR(flat.lo, 0.25, 1e-12);
  EXPECT_NEAR(flat.hi, 0.75, 1e-12);
  const BetaSummary wide = beta_posterior(3, 10, 0.95);
  EXPECT_LT(wide.lo, b.lo);
  EXPECT_GT(wide.hi, b.hi);
  EXPECT_THROW(beta_posterior(5, 4), Error);
}

TEST(Quantile, LinearInterpolation) {
  const std::vector<double> v{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile(v, 0.9), 3.7);
}

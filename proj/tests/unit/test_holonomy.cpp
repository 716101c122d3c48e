#include <gtest/gtest.h>

#include <algorithm>

#include "blurgeom/holonomy.hpp"
#include "support.hpp"

using namespace blurgeom;
using namespace testing_support;

TEST(Clover, MatchesExplicitDenseSquares) {
  std::mt19937_64 rng(30);
  for (int trial = 0; trial < 4; ++trial) {
    const RawGeometry raw = random_raw(rng, 6);
    const BranchGeometry g = make_geometry(raw);
    for (double eps : {1e-3, 1e-2, 0.1}) {
      HolonomyOptions o;
      o.epsilon = eps;
      const Matrix want = clover_reference(raw, eps);
      EXPECT_LE((clover_holonomy(g, o).H.to_dense() - want).norm(), 1e-13) << eps;
    }
  }
}

TEST(Clover, EqualsAverageOfFourSquareHolonomies) {
  std::mt19937_64 rng(31);
  const BranchGeometry g = make_geometry(random_raw(rng, 9));
  const HolonomyResult r = clover_holonomy(g);
  const TangentVector& u = r.plane.u;
  const TangentVector& v = r.plane.v;
  const std::array<RotationOperator, 4> sq{
      square_holonomy(g, u, v, r.epsilon), square_holonomy(g, v, -u, r.epsilon),
      square_holonomy(g, -u, -v, r.epsilon), square_holonomy(g, -v, u, r.epsilon)};
  EXPECT_LE(frobenius_distance(r.H, RotationOperator::average(sq)), 1e-17);
}

TEST(Clover, LowrankAndDensePathsAgree) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 5; ++trial) {
    const BranchGeometry g = make_geometry(random_raw(rng, 20));
    HolonomyOptions dense;
    dense.eval.rep = Representation::Dense;
    const HolonomyResult a = clover_holonomy(g);
    const HolonomyResult b = clover_holonomy(g, dense);
    EXPECT_TRUE(a.H.is_lowrank());
    EXPECT_FALSE(b.H.is_lowrank());
    EXPECT_LE(frobenius_distance(a.H, b.H), 1e-15);
    EXPECT_LE(frobenius_distance(a.h, b.h), 1e-15);
  }
}

TEST(Curvature, MatchesExactDerivativeOracle) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 4; ++trial) {
    const RawGeometry raw = random_raw(rng, 8);
    const BranchGeometry g = make_geometry(raw);
    const double eps = 1e-3;
    const SkewOperator h = curvature_closed_form(g, select_plane(g), eps, eps);
    const Matrix want = curvature_reference(raw, eps);
    EXPECT_LE((h.to_dense() - want).norm(), 1e-9 * want.norm());
  }
}

TEST(Clover, FourthOrderAgainstCurvature) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    const BranchGeometry g = make_geometry(random_raw(rng, 10));
    HolonomyOptions coarse, fine;
    coarse.epsilon = 1e-2;
    fine.epsilon = 5e-3;
    const double ratio = clover_holonomy(g, coarse).diagnostics.clover_vs_closed_form_gap /
                         clover_holonomy(g, fine).diagnostics.clover_vs_closed_form_gap;
    EXPECT_GT(ratio, 14.0);
    EXPECT_LT(ratio, 18.0);
  }
}

TEST(Naive, ThirdOrderAgainstCurvature) {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 10; ++trial) {
    const BranchGeometry g = make_geometry(random_raw(rng, 10));
    HolonomyOptions coarse, fine;
    coarse.epsilon = 1e-2;
    fine.epsilon = 5e-3;
    const double ratio = naive_square_holonomy(g, coarse).diagnostics.clover_vs_closed_form_gap /
                         naive_square_holonomy(g, fine).diagnostics.clover_vs_closed_form_gap;
    EXPECT_GT(ratio, 7.0);
    EXPECT_LT(ratio, 9.0);
  }
}

TEST(Holonomy, OrthogonalAndSkewInvariants) {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 20; ++trial) {
    const BranchGeometry g = make_geometry(random_raw(rng, 16));
    const HolonomyResult r = clover_holonomy(g);
    EXPECT_LE(r.H.orthogonality_defect(), 1e-8);
    const Matrix h = r.h.to_dense();
    EXPECT_LE((h + h.transpose()).norm(), 1e-10 * std::max(1.0, h.norm()));
    EXPECT_NEAR(r.H.determinant(), 1.0, 1e-10);
  }
}

TEST(Holonomy, ConfinedToSupport) {
  std::mt19937_64 rng(37);
  const int n = 24;
  const BranchGeometry g = make_geometry(random_raw(rng, n));
  const HolonomyResult r = clover_holonomy(g);
  const Matrix& b = *g.support();
  for (int i = 0; i < 50; ++i) {
    Vector x = gaussian(rng, n);
    x -= b * (b.transpose() * x);
    EXPECT_LE(r.H.apply_minus_identity(x).norm(), 1e-9);
  }
}

TEST(Holonomy, IdentityWithoutCharge) {
  std::mt19937_64 rng(38);
  const BranchGeometry g = make_geometry(random_raw(rng, 8, 1.0, 0.0));
  const HolonomyResult r = clover_holonomy(g);
  EXPECT_EQ(r.H.distance_from_identity(), 0.0);
  EXPECT_EQ(r.h.norm(), 0.0);
  EXPECT_EQ(r.charge, 0.0);
}

TEST(Holonomy, QVectorFollowsCurvature) {
  std::mt19937_64 rng(39);
  const double eps = 1e-3;
  for (int trial = 0; trial < 10; ++trial) {
    const BranchGeometry g = make_geometry(random_raw(rng, 12));
    const HolonomyResult r = clover_holonomy(g);
    const Vector y = gaussian(rng, 12);
    const Vector q = r.H.apply_minus_identity(y);
    EXPECT_LE((q - r.h.apply(y)).norm(), 4.0 * eps * eps * eps * eps * y.norm());
  }
}

TEST(Holonomy, RejectsEpsilonOutsideRange) {
  std::mt19937_64 rng(40);
  const BranchGeometry g = make_geometry(random_raw(rng, 5));
  for (double eps : {0.0, -1e-3, 0.2}) {
    HolonomyOptions o;
    o.epsilon = eps;
    EXPECT_THROW(clover_holonomy(g, o), Error) << eps;
  }
}

TEST(Transport, OneStepIsLeftPointProduct) {
  std::mt19937_64 rng(41);
  const RawGeometry raw = random_raw(rng, 7);
  const BranchGeometry g = make_geometry(raw);
  const TangentPlane p = select_plane(g);
  const double eps = 1e-2;
  const Vector a = eps * p.u.data(), b = eps * p.v.data();
  const std::vector<Vector> pts{raw.z, raw.z + a, raw.z + a + b, raw.z + b, raw.z};
  Matrix want = Matrix::Identity(7, 7);
  for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
    want = expm_reference(-connection_dense(raw, pts[j], pts[j + 1] - pts[j])) * want;
  }
  const RotationOperator t = transport(g, PolyPath::square(g, p.u, p.v, eps), 1);
  EXPECT_LE((t.to_dense() - want).norm(), 1e-13);
}

TEST(Transport, RetracedPathApproachesIdentity) {
  std::mt19937_64 rng(43);
  const BranchGeometry g = make_geometry(random_raw(rng, 6));
  const TangentPlane p = select_plane(g);
  const Vector& z = g.z().data();
  const PolyPath there({z, z + 0.01 * p.u.data(), z + 0.01 * (p.u.data() + p.v.data())}, false);
  const PolyPath back({z + 0.01 * (p.u.data() + p.v.data()), z + 0.01 * p.u.data(), z}, false);
  const auto defect = [&](int steps) {
    return (transport(g, back, steps) * transport(g, there, steps)).distance_from_identity();
  };
  EXPECT_LT(defect(16), defect(4) / 3.0);
}

TEST(Path, ValidatesPoints) {
  const Vector a = Vector::Ones(4), b = Vector::Zero(4);
  EXPECT_THROW(PolyPath({a, a}, false), Error);
  EXPECT_THROW(PolyPath({a, b}, true), Error);
  EXPECT_NO_THROW(PolyPath({a, b, a}, true));
}

TEST(Total, ComposesLaterFactorsOnTheLeft) {
  std::mt19937_64 rng(44);
  const int n = 5;
  const RotationOperator a = expm_skew(0.3 * phi_iso({gaussian(rng, n), gaussian(rng, n)}));
  const RotationOperator b = expm_skew(0.4 * phi_iso({gaussian(rng, n), gaussian(rng, n)}));
  const std::vector<RotationOperator> hs{a, b};
  const Matrix want = b.to_dense() * a.to_dense();
  EXPECT_LE((total_holonomy(hs, n).to_dense() - want).norm(), 1e-14);
  EXPECT_EQ(total_holonomy({}, n).distance_from_identity(), 0.0);
}

TEST(Charge, HolonomyShrinksWithConfidence) {
  std::mt19937_64 rng(45);
  const RawGeometry raw = random_raw(rng, 8);
  const BranchGeometry g = make_geometry(raw);
  const double loud = clover_holonomy(g.with_probabilities(0.5, 0.5)).H.distance_from_identity();
  const double quiet = clover_holonomy(g.with_probabilities(0.999, 0.0005)).H.distance_from_identity();
  EXPECT_LT(quiet, 1e-2 * loud);
}

TEST(Diagnostics, ExpConsistencyIsSmall) {
  std::mt19937_64 rng(46);
  const HolonomyResult r = clover_holonomy(make_geometry(random_raw(rng, 8)));
  EXPECT_LE(r.diagnostics.exp_consistency_gap, 1e-11);
  EXPECT_LE(r.diagnostics.clover_vs_closed_form_gap, 1e-11);
}

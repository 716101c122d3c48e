#include <gtest/gtest.h>

#include "blurgeom/ablation.hpp"
#include "blurgeom/holonomy.hpp"
#include "support.hpp"

using namespace blurgeom;
using namespace testing_support;

TEST(RandomRotation, MatchesReferenceDistance) {
  std::mt19937_64 rng(70);
  for (int trial = 0; trial < 5; ++trial) {
    const HolonomyResult h = clover_holonomy(make_geometry(random_raw(rng, 12)));
    const RotationOperator r = random_matched_rotation(h.H, 1000 + trial);
    EXPECT_NEAR(r.distance_from_identity(), h.H.distance_from_identity(), 1e-10 * h.H.distance_from_identity());
    EXPECT_LE(r.orthogonality_defect(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-10);
  }
}

TEST(RandomRotation, LargeTargetsStayMatched) {
  std::mt19937_64 rng(71);
  const int n = 8;
  const RotationOperator ref = expm_skew(1.3 * phi_iso({gaussian(rng, n).normalized(), gaussian(rng, n).normalized()}));
  const RotationOperator r = random_matched_rotation(ref, 5);
  EXPECT_NEAR(r.distance_from_identity(), ref.distance_from_identity(), 1e-10);
}

TEST(RandomRotation, DeterministicPerSeed) {
  std::mt19937_64 rng(72);
  const HolonomyResult h = clover_holonomy(make_geometry(random_raw(rng, 10)));
  const RotationOperator a = random_matched_rotation(h.H, 7);
  const RotationOperator b = random_matched_rotation(h.H, 7);
  const RotationOperator c = random_matched_rotation(h.H, 8);
  EXPECT_EQ(frobenius_distance(a, b), 0.0);
  EXPECT_GT(frobenius_distance(a, c), 0.0);
  EXPECT_NE(record_seed(7, 1), record_seed(7, 2));
  EXPECT_EQ(record_seed(7, 1), record_seed(7, 1));
}

TEST(RandomRotation, IdentityInIdentityOut) {
  const RotationOperator r = random_matched_rotation(RotationOperator::identity(6), 3);
  EXPECT_EQ(r.distance_from_identity(), 0.0);
}

TEST(RotateOnto, TakesZToTarget) {
  std::mt19937_64 rng(73);
  const int n = 9;
  const UnitVector z(gaussian(rng, n));
  const Vector t = 3.0 * gaussian(rng, n);
  const RotationOperator r = rotate_onto(z, t);
  EXPECT_LE((r.apply(z.data()) - t.normalized()).norm(), 1e-14);
  EXPECT_LE(r.orthogonality_defect(), 1e-14);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-13);
  Vector x = gaussian(rng, n);
  const Basis b = orthonormal_basis(std::vector<Vector>{z.data(), t});
  x -= *b * (b->transpose() * x);
  EXPECT_LE(r.apply_minus_identity(x).norm(), 1e-14);
}

TEST(RotateOnto, DegenerateTargets) {
  Vector z = Vector::Zero(4);
  z(0) = 1.0;
  const UnitVector u(z);
  const auto code = [&](const Vector& t) {
    try {
      rotate_onto(u, t);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  EXPECT_EQ(code(Vector::Zero(4)), ErrorCode::ZeroVector);
  EXPECT_EQ(code(-z), ErrorCode::AntipodalTarget);
  EXPECT_EQ(rotate_onto(u, 2.0 * z).distance_from_identity(), 0.0);
}

TEST(Spec, SeedRules) {
  EXPECT_THROW((AblationSpec{AblationMode::RandomSoN, std::nullopt}.validate()), Error);
  EXPECT_THROW((AblationSpec{AblationMode::RotateOntoV1, 3}.validate()), Error);
  EXPECT_NO_THROW((AblationSpec{AblationMode::RandomSoN, 3}.validate()));
  EXPECT_NO_THROW((AblationSpec{AblationMode::RotateOntoV2, std::nullopt}.validate()));
}

TEST(Spec, ModeNamesRoundTrip) {
  for (auto m : {AblationMode::RandomSoN, AblationMode::RotateOntoV1, AblationMode::RotateOntoV2}) {
    EXPECT_EQ(parse_ablation_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_ablation_mode("random"), Error);
}

TEST(Operator, RotateOntoEmbeddings) {
  std::mt19937_64 rng(74);
  const BranchGeometry g = make_geometry(random_raw(rng, 8));
  const HolonomyResult h = clover_holonomy(g);
  const RotationOperator r1 = ablation_operator({AblationMode::RotateOntoV1, std::nullopt}, g, h.H, 1);
  const RotationOperator r2 = ablation_operator({AblationMode::RotateOntoV2, std::nullopt}, g, h.H, 1);
  EXPECT_LE((r1.apply(g.z().data()) - g.v1().normalized()).norm(), 1e-14);
  EXPECT_LE((r2.apply(g.z().data()) - g.v2().normalized()).norm(), 1e-14);
  const RotationOperator rr = ablation_operator({AblationMode::RandomSoN, 11}, g, h.H, 1);
  EXPECT_NEAR(rr.distance_from_identity(), h.H.distance_from_identity(), 1e-10 * h.H.distance_from_identity());
}

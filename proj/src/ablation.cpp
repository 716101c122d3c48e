#include "blurgeom/ablation.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <boost/math/tools/roots.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

namespace blurgeom {

void AblationSpec::validate() const {
  if ((mode == AblationMode::RandomSoN) != seed.has_value()) {
    throw Error(ErrorCode::InvalidArgument, "a seed is required exactly for random-so-n");
  }
}

AblationMode parse_ablation_mode(std::string_view s) {
  if (s == "random-so-n") return AblationMode::RandomSoN;
  if (s == "rotate-v1") return AblationMode::RotateOntoV1;
  if (s == "rotate-v2") return AblationMode::RotateOntoV2;
  throw Error(ErrorCode::InvalidArgument, "unknown ablation mode '" + std::string(s) + "'");
}

std::string_view to_string(AblationMode m) {
  switch (m) {
    case AblationMode::RandomSoN: return "random-so-n";
    case AblationMode::RotateOntoV1: return "rotate-v1";
    case AblationMode::RotateOntoV2: return "rotate-v2";
  }
  return "?";
}

RotationOperator random_matched_rotation(const RotationOperator& reference, std::uint64_t seed) {
  const Index n = reference.dim();
  const double target = reference.distance_from_identity();
  if (target == 0.0) return RotationOperator::identity(n);

  boost::random::mt19937_64 rng(seed);
  boost::random::normal_distribution<double> normal;
  Matrix g(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) g(i, j) = normal(rng);
  }
  const Matrix s = g - g.transpose();

  // -S^2 = U diag(w^2) U^T; each rotation plane contributes two eigenvalues.
  Eigen::SelfAdjointEigenSolver<Matrix> es(-(s * s));
  const Vector omega = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const double wmax = omega.maxCoeff();
  const auto dist2 = [&](double tau) {
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double h = std::sin(0.5 * tau * omega(i));
      acc += 4.0 * h * h;
    }
    return acc;
  };
  // Increasing on [0, pi / wmax].
  const double hi = std::numbers::pi / wmax;
  const double t2 = target * target;
  if (dist2(hi) < t2) {
    throw Error(ErrorCode::RangeError, "reference holonomy too far from identity to match");
  }
  boost::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      [&](double tau) { return dist2(tau) - t2; }, 0.0, hi, -t2, dist2(hi) - t2,
      boost::math::tools::eps_tolerance<double>(52), iters);
  const double tau = 0.5 * (a + b);

  const Matrix& u = es.eigenvectors();
  Vector cm1(n), sinc(n);
  for (Index i = 0; i < n; ++i) {
    const double th = tau * omega(i);
    const double h = std::sin(0.5 * th);
    cm1(i) = -2.0 * h * h;
    sinc(i) = th == 0.0 ? tau : std::sin(th) / omega(i);
  }
  Matrix dev = u * cm1.asDiagonal() * u.transpose() + s * (u * sinc.asDiagonal() * u.transpose());
  return RotationOperator::dense_deviation(std::move(dev));
}

RotationOperator rotate_onto(const UnitVector& z, const Vector& target) {
  require_same_size(target.size(), z.size(), "rotate_onto");
  require_finite(target, "rotate_onto target");
  const double tn = target.norm();
  if (tn == 0.0) throw Error(ErrorCode::ZeroVector, "rotate_onto with a zero target");
  const Vector t = target / tn;
  const Vector& x = z.data();
  const Vector diff = t - x;
  const double d2 = diff.squaredNorm();
  if (d2 == 0.0) return RotationOperator::identity(z.size());
  const double c = x.dot(t);
  Vector perp = t - c * x;
  const double s = perp.norm();
  if (s <= 1e-12) {
    if (c < 0.0) throw Error(ErrorCode::AntipodalTarget, "target is antipodal to z");
    return RotationOperator::identity(z.size());
  }
  perp /= s;
  auto basis = std::make_shared<Matrix>(z.size(), 2);
  basis->col(0) = x;
  basis->col(1) = perp;
  // c - 1 = -|t - z|^2 / 2 keeps precision for small angles.
  const double cm1 = -0.5 * d2;
  Matrix dev(2, 2);
  dev << cm1, -s, s, cm1;
  return RotationOperator::lowrank_deviation(std::move(basis), std::move(dev));
}

std::uint64_t record_seed(std::uint64_t seed, std::uint64_t record_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(record_id), static_cast<std::uint32_t>(record_id >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

RotationOperator ablation_operator(const AblationSpec& spec, const BranchGeometry& g,
                                   const RotationOperator& h, std::uint64_t record_id) {
  spec.validate();
  switch (spec.mode) {
    case AblationMode::RandomSoN: return random_matched_rotation(h, record_seed(*spec.seed, record_id));
    case AblationMode::RotateOntoV1: return rotate_onto(g.z(), g.v1());
    case AblationMode::RotateOntoV2: return rotate_onto(g.z(), g.v2());
  }
  throw Error(ErrorCode::InvalidArgument, "unknown ablation mode");
}

}  // namespace blurgeom

#pragma once

// The blurring connection: an so(n)-valued 1-form built from the output
// state z and the embeddings of the two most likely tokens,
//
//   A_mu(z) = 4 p1 p2 ( -(mu . v1) phi(z ^ v2) + (mu . v2) phi(z ^ v1) ),
//
// which collapses to the single two-blade phi(z ^ w) with
// w = 4 p1 p2 ( -(mu . v1) v2 + (mu . v2) v1 ).

#include <cstdint>
#include <memory>

#include "blurgeom/linalg.hpp"

namespace blurgeom {

enum class ChargeMode {
  Frozen,      ///< p1, p2 fixed at the branch point
  Recomputed,  ///< p_i = softmax(V x)[token_i] at every evaluation point
};

struct EvalOptions {
  ChargeMode mode = ChargeMode::Frozen;
  Representation rep = Representation::LowRank;
  /// Project displaced evaluation points back onto the unit sphere.
  bool renormalize = false;
};

class BranchGeometry {
 public:
  /// Throws ProbabilityOutOfRange, InvalidArgument (tokens, unembedding
  /// ranking) or DimensionMismatch.
  BranchGeometry(Vector z, Vector v1, Vector v2, double p1, double p2, std::uint32_t token1,
                 std::uint32_t token2, std::shared_ptr<const Matrix> unembed = nullptr);

  Index dim() const { return z_.size(); }
  const UnitVector& z() const { return z_; }
  const Vector& v1() const { return v1_; }
  const Vector& v2() const { return v2_; }
  double p1() const { return p1_; }
  double p2() const { return p2_; }
  std::uint32_t token1() const { return token1_; }
  std::uint32_t token2() const { return token2_; }
  const std::shared_ptr<const Matrix>& unembed() const { return unembed_; }
  double charge() const;

  /// Orthonormal basis of span{z, v1, v2}; every connection value lives here.
  const Basis& support() const { return support_; }

  /// Same geometry with the probabilities replaced (validated again).
  BranchGeometry with_probabilities(double p1, double p2) const;

 private:
  UnitVector z_;
  Vector v1_;
  Vector v2_;
  double p1_;
  double p2_;
  std::uint32_t token1_;
  std::uint32_t token2_;
  std::shared_ptr<const Matrix> unembed_;
  Basis support_;
};

struct TangentPlane {
  TangentVector u;
  TangentVector v;
};

/// 4 p1 p2. Requires 0 <= p2 <= p1 <= 1.
double probability_charge(double p1, double p2);

/// Numerically stable softmax of V x.
Vector softmax_logits(const Matrix& unembed, const Vector& x);

/// Connection at the branch point itself.
SkewOperator connection(const BranchGeometry& g, const TangentVector& mu,
                        Representation rep = Representation::LowRank);

/// Connection evaluated at a displaced point with token identities frozen.
/// Recomputed mode throws RecomputedWithoutUnembed without an unembedding
/// and TopTwoChanged when the argmax pair at base_z differs.
SkewOperator connection_at_displaced(const BranchGeometry& g, const Vector& base_z,
                                     const TangentVector& mu, const EvalOptions& opts = {});

/// u = tangent direction of v1, v = tangent part of v2 orthogonalized to u.
TangentPlane select_plane(const BranchGeometry& g);

/// Central difference (A_of(z + d along) - A_of(z - d along)) / 2d.
SkewOperator connection_derivative(const BranchGeometry& g, const TangentVector& along,
                                   const TangentVector& of, double delta,
                                   const EvalOptions& opts = {});

/// z + offset, optionally projected back onto the sphere.
Vector displaced_point(const BranchGeometry& g, const Vector& offset, bool renormalize);

}  // namespace blurgeom

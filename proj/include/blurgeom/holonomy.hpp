#pragma once

// Parallel transport of the blurring connection, clover-averaged holonomy
// around a branch point, and the closed-form curvature it approximates.

#include <optional>
#include <span>
#include <vector>

#include "blurgeom/connection.hpp"

namespace blurgeom {

inline constexpr double kDefaultEpsilon = 1e-3;

struct HolonomyOptions {
  double epsilon = kDefaultEpsilon;
  /// Finite-difference step for the curvature; defaults to epsilon.
  std::optional<double> fd_delta;
  EvalOptions eval;

  double delta() const { return fd_delta.value_or(epsilon); }
};

/// Discretized curve through ambient points (displacements from z must be
/// tangent at z).
class PolyPath {
 public:
  /// Throws InvalidArgument when consecutive points coincide or a closed
  /// path does not end where it starts.
  PolyPath(std::vector<Vector> points, bool closed);

  const std::vector<Vector>& points() const { return points_; }
  bool closed() const { return closed_; }

  /// Square loop of side `side` starting at z: z, z+s mu, z+s(mu+nu), z+s nu, z.
  static PolyPath square(const BranchGeometry& g, const TangentVector& mu, const TangentVector& nu,
                         double side);

 private:
  std::vector<Vector> points_;
  bool closed_;
};

struct HolonomyDiagnostics {
  /// ||(H - I) - h||_F
  double clover_vs_closed_form_gap = 0.0;
  /// ||H - exp(h)||_F
  double exp_consistency_gap = 0.0;
};

struct HolonomyResult {
  RotationOperator H;
  SkewOperator h;
  TangentPlane plane;
  double epsilon;
  double charge;
  HolonomyDiagnostics diagnostics;
};

/// Ordered product of exp(-A_dx(x_i)) over sub-segments, later factors on
/// the left; x_i is the start of each sub-segment.
RotationOperator transport(const BranchGeometry& g, const PolyPath& path, int steps_per_segment,
                           const EvalOptions& opts = {});

/// Holonomy of one first-order square with legs
/// L1 = e A_mu(z), L2 = e A_nu(z + e mu), L3 = -e A_mu(z + e nu), L4 = -e A_nu(z),
/// H = exp(-L4) exp(-L3) exp(-L2) exp(-L1).
RotationOperator square_holonomy(const BranchGeometry& g, const TangentVector& mu,
                                 const TangentVector& nu, double epsilon,
                                 const EvalOptions& opts = {});

/// Average of the four squares obtained by quarter turns (mu, nu) -> (nu, -mu)
/// of the first, in the plane chosen by select_plane.
HolonomyResult clover_holonomy(const BranchGeometry& g, const HolonomyOptions& opts = {});

/// The single first square (mu, nu) = (u, v); error is O(eps^3).
HolonomyResult naive_square_holonomy(const BranchGeometry& g, const HolonomyOptions& opts = {});

/// h = -eps^2 (d_mu A_nu - d_nu A_mu - [A_nu, A_mu]) with mu = plane.u, nu = plane.v.
SkewOperator curvature_closed_form(const BranchGeometry& g, const TangentPlane& plane,
                                   double epsilon, double delta, const EvalOptions& opts = {});

/// H_t ... H_1 for hs = [H_1, ..., H_t]; identity of dimension n when empty.
RotationOperator total_holonomy(std::span<const RotationOperator> hs, Index n);

}  // namespace blurgeom

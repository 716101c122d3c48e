#include "blurgeom/holonomy.hpp"

#include <array>
#include <cmath>

namespace blurgeom {

PolyPath::PolyPath(std::vector<Vector> points, bool closed)
    : points_(std::move(points)), closed_(closed) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    require_finite(points_[i], "path point");
    if (i > 0) {
      require_same_size(points_[i].size(), points_[0].size(), "path points");
      if (points_[i] == points_[i - 1]) {
        throw Error(ErrorCode::InvalidArgument, "consecutive path points coincide");
      }
    }
  }
  if (closed_ && !points_.empty() && points_.front() != points_.back()) {
    throw Error(ErrorCode::InvalidArgument, "closed path must end at its start");
  }
}

PolyPath PolyPath::square(const BranchGeometry& g, const TangentVector& mu,
                          const TangentVector& nu, double side) {
  const Vector& z = g.z().data();
  const Vector a = side * mu.data();
  const Vector b = side * nu.data();
  return PolyPath({z, z + a, z + a + b, z + b, z}, true);
}

RotationOperator transport(const BranchGeometry& g, const PolyPath& path, int steps_per_segment,
                           const EvalOptions& opts) {
  if (steps_per_segment < 1) throw Error(ErrorCode::InvalidArgument, "steps_per_segment < 1");
  RotationOperator u = RotationOperator::identity(g.dim());
  if (opts.rep == Representation::Dense) u = u.as(Representation::Dense);
  const auto& pts = path.points();
  for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
    require_same_size(pts[j].size(), g.dim(), "path vs geometry");
    const Vector dx = (pts[j + 1] - pts[j]) / steps_per_segment;
    const TangentVector step(dx, g.z());
    for (int i = 0; i < steps_per_segment; ++i) {
      Vector x = pts[j] + static_cast<double>(i) * dx;
      if (opts.renormalize) x.normalize();
      const SkewOperator a = connection_at_displaced(g, x, step, opts);
      u = expm_skew(-a) * u;
    }
  }
  return u;
}

RotationOperator square_holonomy(const BranchGeometry& g, const TangentVector& mu,
                                 const TangentVector& nu, double epsilon,
                                 const EvalOptions& opts) {
  const Vector& z = g.z().data();
  const SkewOperator l1 = epsilon * connection_at_displaced(g, z, mu, opts);
  const SkewOperator l2 =
      epsilon * connection_at_displaced(g, displaced_point(g, epsilon * mu.data(), opts.renormalize), nu, opts);
  const SkewOperator l3 =
      -epsilon * connection_at_displaced(g, displaced_point(g, epsilon * nu.data(), opts.renormalize), mu, opts);
  const SkewOperator l4 = -epsilon * connection_at_displaced(g, z, nu, opts);
  return expm_skew(-l4) * (expm_skew(-l3) * (expm_skew(-l2) * expm_skew(-l1)));
}

SkewOperator curvature_closed_form(const BranchGeometry& g, const TangentPlane& plane,
                                   double epsilon, double delta, const EvalOptions& opts) {
  const TangentVector& mu = plane.u;
  const TangentVector& nu = plane.v;
  const SkewOperator d_mu_a_nu = connection_derivative(g, mu, nu, delta, opts);
  const SkewOperator d_nu_a_mu = connection_derivative(g, nu, mu, delta, opts);
  const Vector& z = g.z().data();
  const SkewOperator a_nu = connection_at_displaced(g, z, nu, opts);
  const SkewOperator a_mu = connection_at_displaced(g, z, mu, opts);
  return (-epsilon * epsilon) * (d_mu_a_nu - d_nu_a_mu - commutator(a_nu, a_mu));
}

namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 0.1)) {
    throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0, 0.1]");
  }
}

HolonomyResult finish(const BranchGeometry& g, RotationOperator h_rot, TangentPlane plane,
                      const HolonomyOptions& opts) {
  SkewOperator h = curvature_closed_form(g, plane, opts.epsilon, opts.delta(), opts.eval);
  HolonomyDiagnostics diag;
  diag.clover_vs_closed_form_gap = deviation_gap(h_rot, h);
  diag.exp_consistency_gap = frobenius_distance(h_rot, expm_skew(h));
  const double charge = g.charge();
  return HolonomyResult{std::move(h_rot), std::move(h), std::move(plane), opts.epsilon, charge, diag};
}

}  // namespace

HolonomyResult clover_holonomy(const BranchGeometry& g, const HolonomyOptions& opts) {
  check_epsilon(opts.epsilon);
  TangentPlane plane = select_plane(g);
  const TangentVector& u = plane.u;
  const TangentVector& v = plane.v;
  const double e = opts.epsilon;
  const Vector& z = g.z().data();
  // A_mu is linear in mu, so exp(-e A_{-mu}(x)) = exp(-e A_mu(x))^T and the
  // sixteen leg exponentials of the four squares reduce to six.
  const auto leg = [&](const Vector& x, const TangentVector& dir) {
    return expm_skew(-e * connection_at_displaced(g, x, dir, opts.eval));
  };
  const auto at = [&](const Vector& offset) { return displaced_point(g, e * offset, opts.eval.renormalize); };
  const RotationOperator bu = leg(z, u);
  const RotationOperator bv = leg(z, v);
  const RotationOperator d_uv = leg(at(u.data()), v);
  const RotationOperator d_vu = leg(at(v.data()), u);
  const RotationOperator d_mu_v = leg(at(-u.data()), v);
  const RotationOperator d_mv_u = leg(at(-v.data()), u);
  // Square (mu, nu): B(nu)^T D(nu, mu)^T D(mu, nu) B(mu), with
  // B(-x) = B(x)^T and D(x, -y) = D(x, y)^T.
  const std::array<RotationOperator, 4> squares{
      bv.transpose() * (d_vu.transpose() * (d_uv * bu)),
      bu * (d_mu_v.transpose() * (d_vu.transpose() * bv)),
      bv * (d_mv_u * (d_mu_v.transpose() * bu.transpose())),
      bu.transpose() * (d_uv * (d_mv_u * bv.transpose())),
  };
  return finish(g, RotationOperator::average(squares), std::move(plane), opts);
}

HolonomyResult naive_square_holonomy(const BranchGeometry& g, const HolonomyOptions& opts) {
  check_epsilon(opts.epsilon);
  TangentPlane plane = select_plane(g);
  RotationOperator h = square_holonomy(g, plane.u, plane.v, opts.epsilon, opts.eval);
  return finish(g, std::move(h), std::move(plane), opts);
}

RotationOperator total_holonomy(std::span<const RotationOperator> hs, Index n) {
  RotationOperator total = RotationOperator::identity(n);
  for (const auto& h : hs) {
    require_same_size(h.dim(), n, "holonomy dimensions");
    total = h * total;
  }
  return total;
}

}  // namespace blurgeom

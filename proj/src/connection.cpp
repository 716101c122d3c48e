#include "blurgeom/connection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace blurgeom {

namespace {

void check_probabilities(double p1, double p2) {
  if (!std::isfinite(p1) || !std::isfinite(p2) || p2 < 0.0 || p2 > p1 || p1 > 1.0 || p1 <= 0.0 ||
      p1 + p2 > 1.0 + 1e-6) {
    std::ostringstream os;
    os << "p1=" << p1 << " p2=" << p2;
    throw Error(ErrorCode::ProbabilityOutOfRange, os.str());
  }
}

// Index of the largest and second largest entries; ties resolve to the
// lower index.
std::pair<Index, Index> top_two(const Vector& p) {
  Index first = 0;
  for (Index i = 1; i < p.size(); ++i) {
    if (p(i) > p(first)) first = i;
  }
  Index second = first == 0 ? 1 : 0;
  for (Index i = 0; i < p.size(); ++i) {
    if (i != first && p(i) > p(second)) second = i;
  }
  return {first, second};
}

// Accepts ties: token1 must attain the maximum and token2 the maximum over
// the remaining entries.
bool ranks_top_two(const Vector& p, std::uint32_t t1, std::uint32_t t2) {
  const auto [a, b] = top_two(p);
  const double p1 = p(static_cast<Index>(t1));
  const double p2 = p(static_cast<Index>(t2));
  return p1 >= p(a) && p2 >= (a == static_cast<Index>(t1) ? p(b) : p(a));
}

void require_based_at(const BranchGeometry& g, const TangentVector& v) {
  require_same_size(v.size(), g.dim(), "tangent vector vs geometry");
  if ((v.base().data() - g.z().data()).norm() > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "tangent vector is not based at the branch point");
  }
}

}  // namespace

BranchGeometry::BranchGeometry(Vector z, Vector v1, Vector v2, double p1, double p2,
                               std::uint32_t token1, std::uint32_t token2,
                               std::shared_ptr<const Matrix> unembed)
    : z_(std::move(z)),
      v1_(std::move(v1)),
      v2_(std::move(v2)),
      p1_(p1),
      p2_(p2),
      token1_(token1),
      token2_(token2),
      unembed_(std::move(unembed)) {
  const Index n = z_.size();
  require_same_size(v1_.size(), n, "v1");
  require_same_size(v2_.size(), n, "v2");
  require_finite(v1_, "v1");
  require_finite(v2_, "v2");
  check_probabilities(p1_, p2_);
  if (token1_ == token2_) throw Error(ErrorCode::InvalidArgument, "token1 == token2");
  if (unembed_) {
    require_same_size(unembed_->cols(), n, "unembedding columns");
    const Index l = unembed_->rows();
    if (static_cast<Index>(std::max(token1_, token2_)) >= l) {
      throw Error(ErrorCode::InvalidArgument, "token id outside the vocabulary");
    }
    if (!ranks_top_two(softmax_logits(*unembed_, z_.data()), token1_, token2_)) {
      throw Error(ErrorCode::InvalidArgument, "unembedding does not rank token1, token2 first");
    }
  }
  const std::array<Vector, 3> span{z_.data(), v1_, v2_};
  support_ = orthonormal_basis(span);
}

double BranchGeometry::charge() const { return probability_charge(p1_, p2_); }

BranchGeometry BranchGeometry::with_probabilities(double p1, double p2) const {
  BranchGeometry g = *this;
  check_probabilities(p1, p2);
  g.p1_ = p1;
  g.p2_ = p2;
  return g;
}

double probability_charge(double p1, double p2) {
  check_probabilities(p1, p2);
  return 4.0 * p1 * p2;
}

Vector softmax_logits(const Matrix& unembed, const Vector& x) {
  require_same_size(unembed.cols(), x.size(), "softmax");
  Vector logits = unembed * x;
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

SkewOperator connection(const BranchGeometry& g, const TangentVector& mu, Representation rep) {
  EvalOptions opts;
  opts.rep = rep;
  return connection_at_displaced(g, g.z().data(), mu, opts);
}

SkewOperator connection_at_displaced(const BranchGeometry& g, const Vector& base_z,
                                     const TangentVector& mu, const EvalOptions& opts) {
  require_based_at(g, mu);
  require_same_size(base_z.size(), g.dim(), "evaluation point");
  require_finite(base_z, "evaluation point");

  double p1 = g.p1();
  double p2 = g.p2();
  if (opts.mode == ChargeMode::Recomputed) {
    if (!g.unembed()) {
      throw Error(ErrorCode::RecomputedWithoutUnembed, "recomputed charge needs the unembedding");
    }
    const Vector p = softmax_logits(*g.unembed(), base_z);
    if (!ranks_top_two(p, g.token1(), g.token2())) {
      throw Error(ErrorCode::TopTwoChanged, "top-two tokens change inside the loop");
    }
    p1 = p(static_cast<Index>(g.token1()));
    p2 = p(static_cast<Index>(g.token2()));
  }
  const double c = 4.0 * p1 * p2;
  const Vector& m = mu.data();
  const Vector w = c * (-(m.dot(g.v1())) * g.v2() + m.dot(g.v2()) * g.v1());

  if (opts.rep == Representation::Dense) {
    Matrix a = w * base_z.transpose() - base_z * w.transpose();
    return SkewOperator::dense(std::move(a));
  }

  // Coordinates on the support frame when the evaluation point stays in it.
  const Matrix& frame = *g.support();
  const Vector xr = frame.transpose() * base_z;
  const Vector wr = frame.transpose() * w;
  const double xres = (base_z - frame * xr).norm();
  const double wres = (w - frame * wr).norm();
  if (xres <= 1e-12 * std::max(1.0, base_z.norm()) && wres <= 1e-12 * std::max(1.0, w.norm())) {
    Matrix coeffs = wr * xr.transpose() - xr * wr.transpose();
    return SkewOperator::lowrank(g.support(), std::move(coeffs));
  }
  return phi_iso({base_z, w});
}

TangentPlane select_plane(const BranchGeometry& g) {
  const TangentVector t1 = project_tangent(g.v1(), g.z());
  const TangentVector t2 = project_tangent(g.v2(), g.z());
  if (t1.norm() < 1e-7 * std::max(1.0, g.v1().norm())) {
    throw Error(ErrorCode::DegeneratePlane, "v1 is parallel to z");
  }
  auto [u, v] = orthonormalize_pair(t1, t2);
  return {std::move(u), std::move(v)};
}

Vector displaced_point(const BranchGeometry& g, const Vector& offset, bool renormalize) {
  Vector x = g.z().data() + offset;
  if (renormalize) x.normalize();
  return x;
}

SkewOperator connection_derivative(const BranchGeometry& g, const TangentVector& along,
                                   const TangentVector& of, double delta,
                                   const EvalOptions& opts) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw Error(ErrorCode::InvalidArgument, "finite-difference delta must be positive");
  }
  require_based_at(g, along);
  const Vector step = delta * along.data();
  const SkewOperator fwd = connection_at_displaced(g, displaced_point(g, step, opts.renormalize), of, opts);
  const SkewOperator bwd = connection_at_displaced(g, displaced_point(g, -step, opts.renormalize), of, opts);
  return (0.5 / delta) * (fwd - bwd);
}

}  // namespace blurgeom

#include "support.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "blurgeom/synth.hpp"

namespace testing_support {

Vector gaussian(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

RawGeometry random_raw(std::mt19937_64& rng, int n, double p1, double p2) {
  RawGeometry g;
  g.z = gaussian(rng, n).normalized();
  g.v1 = (gaussian(rng, n).normalized() + 0.3 * g.z).normalized();
  g.v2 = (gaussian(rng, n).normalized() - 0.2 * g.z).normalized();
  g.p1 = p1;
  g.p2 = p2;
  return g;
}

blurgeom::BranchGeometry make_geometry(const RawGeometry& r) {
  return blurgeom::BranchGeometry(r.z, r.v1, r.v2, r.p1, r.p2, 0, 1);
}

Matrix phi_dense(const Vector& a, const Vector& b) { return b * a.transpose() - a * b.transpose(); }

Matrix connection_dense(const RawGeometry& g, const Vector& x, const Vector& mu) {
  const double c = 4.0 * g.p1 * g.p2;
  return c * (-mu.dot(g.v1) * phi_dense(x, g.v2) + mu.dot(g.v2) * phi_dense(x, g.v1));
}

Matrix expm_reference(const Matrix& m) { return m.exp(); }

Plane plane_reference(const RawGeometry& g) {
  const Vector& z = g.z;
  Vector u = g.v1 - g.v1.dot(z) * z;
  u.normalize();
  Vector v = g.v2 - g.v2.dot(z) * z;
  v -= v.dot(u) * u;
  v.normalize();
  return {u, v};
}

Matrix square_reference(const RawGeometry& g, const Vector& mu, const Vector& nu, double eps) {
  const Vector& z = g.z;
  const Matrix l1 = eps * connection_dense(g, z, mu);
  const Matrix l2 = eps * connection_dense(g, z + eps * mu, nu);
  const Matrix l3 = -eps * connection_dense(g, z + eps * nu, mu);
  const Matrix l4 = -eps * connection_dense(g, z, nu);
  return expm_reference(-l4) * expm_reference(-l3) * expm_reference(-l2) * expm_reference(-l1);
}

Matrix clover_reference(const RawGeometry& g, double eps) {
  const Plane p = plane_reference(g);
  const Vector& u = p.u;
  const Vector& v = p.v;
  return 0.25 * (square_reference(g, u, v, eps) + square_reference(g, v, -u, eps) +
                 square_reference(g, -u, -v, eps) + square_reference(g, -v, u, eps));
}

Matrix curvature_reference(const RawGeometry& g, double eps) {
  const Plane p = plane_reference(g);
  const double c = 4.0 * g.p1 * g.p2;
  const auto w = [&](const Vector& mu) { return Vector(c * (-mu.dot(g.v1) * g.v2 + mu.dot(g.v2) * g.v1)); };
  const Matrix d_mu_a_nu = phi_dense(p.u, w(p.v));
  const Matrix d_nu_a_mu = phi_dense(p.v, w(p.u));
  const Matrix a_nu = connection_dense(g, g.z, p.v);
  const Matrix a_mu = connection_dense(g, g.z, p.u);
  return -eps * eps * (d_mu_a_nu - d_nu_a_mu - (a_nu * a_mu - a_mu * a_nu));
}

blurgeom::Dataset small_dataset(std::uint64_t seed, std::uint32_t n, std::uint32_t records, std::uint32_t probes) {
  blurgeom::SynthConfig c;
  c.seed = seed;
  c.n = n;
  c.record_count = records;
  c.probe_count = probes;
  c.active_min = 2;
  c.active_max = 6;
  return blurgeom::synthesize(c).dataset;
}

}  // namespace testing_support

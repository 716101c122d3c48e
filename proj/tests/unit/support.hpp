#pragma once

// Shared fixtures and independent dense oracles for the unit tests.

#include <cstdint>
#include <random>

#include "blurgeom/connection.hpp"
#include "blurgeom/dataset.hpp"

namespace testing_support {

using blurgeom::Matrix;
using blurgeom::Vector;

struct RawGeometry {
  Vector z, v1, v2;
  double p1, p2;
};

/// Unit z, unit-ish v1 and v2 at random angles to z.
RawGeometry random_raw(std::mt19937_64& rng, int n, double p1 = 0.6, double p2 = 0.35);

blurgeom::BranchGeometry make_geometry(const RawGeometry& r);

Vector gaussian(std::mt19937_64& rng, int n);

/// b a^T - a b^T
Matrix phi_dense(const Vector& a, const Vector& b);

/// Frozen-charge connection written out from its definition.
Matrix connection_dense(const RawGeometry& g, const Vector& x, const Vector& mu);

/// exp(m) through Eigen's unsupported matrix functions.
Matrix expm_reference(const Matrix& m);

struct Plane {
  Vector u, v;
};

/// Tangent part of v1, then of v2 orthogonalized against it.
Plane plane_reference(const RawGeometry& g);

/// Four explicit squares with full n x n exponentials, averaged.
Matrix clover_reference(const RawGeometry& g, double eps);

/// The single square (u, v).
Matrix square_reference(const RawGeometry& g, const Vector& mu, const Vector& nu, double eps);

/// Curvature with exact derivatives of the (linear in x) frozen connection.
Matrix curvature_reference(const RawGeometry& g, double eps);

/// Small valid dataset from the synthesizer.
blurgeom::Dataset small_dataset(std::uint64_t seed = 3, std::uint32_t n = 8, std::uint32_t records = 12,
                                std::uint32_t probes = 40);

}  // namespace testing_support

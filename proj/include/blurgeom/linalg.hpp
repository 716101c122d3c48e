#pragma once

// Exterior-algebra and skew-matrix primitives on R^n.
//
// Skew generators and rotations carry a dual representation: a dense n x n
// matrix, or coordinates on a shared orthonormal basis of a small support
// subspace (k <= kMaxLowRank). Rotations are stored as their deviation from
// the identity, R = I + B D B^T, so that near-identity holonomies keep full
// relative precision in R - I.

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "blurgeom/error.hpp"

namespace blurgeom {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Shared, immutable n x k matrix with orthonormal columns.
using Basis = std::shared_ptr<const Matrix>;

inline constexpr Index kMaxLowRank = 4;

enum class Representation { LowRank, Dense };

class UnitVector {
 public:
  /// Normalizes `v`; the pre-normalization norm is kept in raw_norm().
  explicit UnitVector(Vector v);

  const Vector& data() const { return data_; }
  double raw_norm() const { return raw_norm_; }
  Index size() const { return data_.size(); }

 private:
  Vector data_;
  double raw_norm_ = 0.0;
};

class TangentVector {
 public:
  /// Throws InvalidArgument unless |data . base| <= 1e-8 |data|.
  TangentVector(Vector data, UnitVector base);

  const Vector& data() const { return data_; }
  const UnitVector& base() const { return base_; }
  Index size() const { return data_.size(); }
  double norm() const { return data_.norm(); }

  TangentVector operator-() const;
  TangentVector scaled(double s) const;

 private:
  TangentVector(Vector data, UnitVector base, bool /*unchecked*/)
      : data_(std::move(data)), base_(std::move(base)) {}

  Vector data_;
  UnitVector base_;
};

/// The two-blade a ^ b, kept as its spanning vectors.
struct SimpleBivector {
  Vector a;
  Vector b;
};

class SkewOperator {
 public:
  static SkewOperator zero(Index n);
  /// Validates ||M + M^T||_F <= 1e-10 max(1, ||M||_F).
  static SkewOperator dense(Matrix m);
  /// `coeffs` is k x k skew on the columns of `basis`.
  static SkewOperator lowrank(Basis basis, Matrix coeffs);

  Index dim() const { return n_; }
  bool is_lowrank() const { return basis_ != nullptr; }
  Index rank_bound() const { return is_lowrank() ? basis_->cols() : n_; }

  /// Lowrank only.
  const Basis& basis() const { return basis_; }
  /// k x k coefficients (lowrank) or the full matrix (dense).
  const Matrix& coeffs() const { return mat_; }

  Matrix to_dense() const;
  SkewOperator as(Representation rep) const;
  Vector apply(const Vector& x) const;
  double norm() const;

  SkewOperator operator-() const;
  friend SkewOperator operator*(double s, const SkewOperator& a);
  friend SkewOperator operator+(const SkewOperator& a, const SkewOperator& b);
  friend SkewOperator operator-(const SkewOperator& a, const SkewOperator& b);

 private:
  SkewOperator(Index n, Basis basis, Matrix mat)
      : n_(n), basis_(std::move(basis)), mat_(std::move(mat)) {}

  Index n_ = 0;
  Basis basis_;
  Matrix mat_;

  friend SkewOperator commutator(const SkewOperator& a, const SkewOperator& b);
};

class RotationOperator {
 public:
  static RotationOperator identity(Index n);
  static RotationOperator dense(const Matrix& r);
  static RotationOperator dense_deviation(Matrix deviation);
  static RotationOperator lowrank_deviation(Basis basis, Matrix deviation);

  Index dim() const { return n_; }
  bool is_lowrank() const { return basis_ != nullptr; }
  const Basis& basis() const { return basis_; }
  /// R - I restricted to the support block (lowrank) or on all of R^n.
  const Matrix& deviation() const { return dev_; }

  Matrix to_dense() const;
  RotationOperator as(Representation rep) const;
  Vector apply(const Vector& y) const;
  /// (R - I) y
  Vector apply_minus_identity(const Vector& y) const;
  RotationOperator transpose() const;

  /// ||R - I||_F
  double distance_from_identity() const;
  /// ||R^T R - I||_F
  double orthogonality_defect() const;
  double determinant() const;

  friend RotationOperator operator*(const RotationOperator& a, const RotationOperator& b);

  /// Arithmetic mean of the matrices; the result is only approximately orthogonal.
  static RotationOperator average(std::span<const RotationOperator> rs);

 private:
  RotationOperator(Index n, Basis basis, Matrix dev)
      : n_(n), basis_(std::move(basis)), dev_(std::move(dev)) {}

  Index n_ = 0;
  Basis basis_;
  Matrix dev_;
};

/// Orthonormal basis of span(vs) by twice-iterated modified Gram-Schmidt.
/// Vectors whose residual falls below rel_tol times the largest input norm
/// are dropped.
Basis orthonormal_basis(std::span<const Vector> vs, double rel_tol = 1e-12);

/// phi(a ^ b) = b a^T - a b^T as a rank <= 2 operator.
SkewOperator phi_iso(const SimpleBivector& bv);

/// Volume of the parallelepiped spanned by x, y, z: sqrt(det Gram).
double blade3_volume(const Vector& x, const Vector& y, const Vector& z);

TangentVector project_tangent(const Vector& v, const UnitVector& base);

/// Gram-Schmidt on (u, w). Throws DegeneratePlane when the residual of w is
/// below 1e-7 ||w||.
std::pair<TangentVector, TangentVector> orthonormalize_pair(const TangentVector& u,
                                                            const TangentVector& w);

/// Closed form on the support block for lowrank input; scaling-and-squaring
/// Taylor for dense input.
RotationOperator expm_skew(const SkewOperator& s);

/// exp(A) - I for a dense square matrix, accurate to unit roundoff relative
/// to ||exp(A)||.
Matrix expm_minus_identity_dense(const Matrix& a);

/// exp(K) - I for a small skew block via the closed forms (k = 2 planar,
/// k = 3 Rodrigues, otherwise eigen-decomposition of K^2).
Matrix expm_minus_identity_block(const Matrix& k);

/// [A, B] = AB - BA
SkewOperator commutator(const SkewOperator& a, const SkewOperator& b);

/// ||A - B||_F between two rotations in any representation.
double frobenius_distance(const RotationOperator& a, const RotationOperator& b);
double frobenius_distance(const SkewOperator& a, const SkewOperator& b);

/// ||(H - I) - h||_F
double deviation_gap(const RotationOperator& h_rot, const SkewOperator& h_gen);

void require_same_size(Index a, Index b, const char* what);
void require_finite(const Vector& v, const char* what);

}  // namespace blurgeom

#include "blurgeom/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace blurgeom {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegeneratePlane: return "DegeneratePlane";
    case ErrorCode::RecomputedWithoutUnembed: return "RecomputedWithoutUnembed";
    case ErrorCode::TopTwoChanged: return "TopTwoChanged";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::TooManyItems: return "TooManyItems";
    case ErrorCode::NoEvalData: return "NoEvalData";
    case ErrorCode::AntipodalTarget: return "AntipodalTarget";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::TrailingBytes: return "TrailingBytes";
    case ErrorCode::RangeError: return "RangeError";
    case ErrorCode::OrderingError: return "OrderingError";
    case ErrorCode::TokenError: return "TokenError";
    case ErrorCode::NormError: return "NormError";
    case ErrorCode::LabelGrammar: return "LabelGrammar";
  }
  return "Unknown";
}

void require_same_size(Index a, Index b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": " << a << " vs " << b;
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw Error(ErrorCode::NonFiniteInput, what);
}

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorCode::NonFiniteInput, what);
}

Basis empty_basis(Index n) { return std::make_shared<const Matrix>(n, 0); }

bool contains_span(const Matrix& outer, const Matrix& inner) {
  if (inner.cols() == 0) return true;
  if (outer.cols() == 0) return false;
  const Matrix resid = inner - outer * (outer.transpose() * inner);
  return resid.norm() <= 1e-12 * std::max(1.0, inner.norm());
}

// Smallest basis containing both spans, or nullopt when it would exceed
// kMaxLowRank.
std::optional<Basis> merged_basis(const Basis& a, const Basis& b) {
  if (a == b) return a;
  if (contains_span(*a, *b)) return a;
  if (contains_span(*b, *a)) return b;
  std::vector<Vector> cols;
  cols.reserve(a->cols() + b->cols());
  for (Index j = 0; j < a->cols(); ++j) cols.emplace_back(a->col(j));
  for (Index j = 0; j < b->cols(); ++j) cols.emplace_back(b->col(j));
  Basis merged = orthonormal_basis(cols);
  if (merged->cols() > kMaxLowRank) return std::nullopt;
  return merged;
}

// Re-express block coefficients on a basis whose span contains the old one.
Matrix rebase(const Matrix& coeffs, const Matrix& from, const Matrix& to) {
  if (&from == &to) return coeffs;
  const Matrix t = to.transpose() * from;
  return t * coeffs * t.transpose();
}

struct Aligned {
  Basis basis;  // null => dense n x n matrices
  Matrix a;
  Matrix b;
};

Aligned align_skew(const SkewOperator& x, const SkewOperator& y) {
  require_same_size(x.dim(), y.dim(), "skew operator dimensions");
  if (x.is_lowrank() && y.is_lowrank()) {
    if (auto m = merged_basis(x.basis(), y.basis())) {
      return {*m, rebase(x.coeffs(), *x.basis(), **m), rebase(y.coeffs(), *y.basis(), **m)};
    }
  }
  return {nullptr, x.to_dense(), y.to_dense()};
}

Aligned align_rotation(const RotationOperator& x, const RotationOperator& y) {
  require_same_size(x.dim(), y.dim(), "rotation operator dimensions");
  if (x.is_lowrank() && y.is_lowrank()) {
    if (auto m = merged_basis(x.basis(), y.basis())) {
      return {*m, rebase(x.deviation(), *x.basis(), **m),
              rebase(y.deviation(), *y.basis(), **m)};
    }
  }
  auto dense_dev = [](const RotationOperator& r) -> Matrix {
    if (!r.is_lowrank()) return r.deviation();
    const Matrix& bm = *r.basis();
    return bm * r.deviation() * bm.transpose();
  };
  return {nullptr, dense_dev(x), dense_dev(y)};
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// UnitVector / TangentVector

UnitVector::UnitVector(Vector v) : data_(std::move(v)) {
  require_finite(data_, "unit vector input");
  raw_norm_ = data_.norm();
  if (raw_norm_ == 0.0) throw Error(ErrorCode::ZeroVector, "cannot normalize the zero vector");
  data_ /= raw_norm_;
}

TangentVector::TangentVector(Vector data, UnitVector base)
    : data_(std::move(data)), base_(std::move(base)) {
  require_same_size(data_.size(), base_.size(), "tangent vector vs base");
  require_finite(data_, "tangent vector");
  if (std::abs(data_.dot(base_.data())) > 1e-8 * data_.norm()) {
    throw Error(ErrorCode::InvalidArgument, "vector is not tangent at its base point");
  }
}

TangentVector TangentVector::operator-() const { return TangentVector(-data_, base_, true); }

TangentVector TangentVector::scaled(double s) const { return TangentVector(s * data_, base_, true); }

// ---------------------------------------------------------------------------
// SkewOperator

SkewOperator SkewOperator::zero(Index n) { return SkewOperator(n, empty_basis(n), Matrix(0, 0)); }

SkewOperator SkewOperator::dense(Matrix m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "dense skew must be square");
  require_finite(m, "dense skew operator");
  const double defect = (m + m.transpose()).norm();
  if (defect > 1e-10 * std::max(1.0, m.norm())) {
    throw Error(ErrorCode::InvalidArgument, "matrix is not skew-symmetric");
  }
  const Index n = m.rows();
  return SkewOperator(n, nullptr, std::move(m));
}

SkewOperator SkewOperator::lowrank(Basis basis, Matrix coeffs) {
  if (!basis) throw Error(ErrorCode::InvalidArgument, "null basis");
  const Index k = basis->cols();
  if (k > kMaxLowRank) throw Error(ErrorCode::InvalidArgument, "support basis too large");
  if (coeffs.rows() != k || coeffs.cols() != k) {
    throw Error(ErrorCode::DimensionMismatch, "coefficient block does not match basis");
  }
  require_finite(coeffs, "skew coefficients");
  if ((basis->transpose() * *basis - Matrix::Identity(k, k)).norm() > 1e-10) {
    throw Error(ErrorCode::InvalidArgument, "support basis is not orthonormal");
  }
  if ((coeffs + coeffs.transpose()).norm() > 1e-12 * std::max(1.0, coeffs.norm())) {
    throw Error(ErrorCode::InvalidArgument, "coefficient block is not skew-symmetric");
  }
  const Index n = basis->rows();
  return SkewOperator(n, std::move(basis), std::move(coeffs));
}

Matrix SkewOperator::to_dense() const {
  if (!is_lowrank()) return mat_;
  if (basis_->cols() == 0) return Matrix::Zero(n_, n_);
  return *basis_ * mat_ * basis_->transpose();
}

SkewOperator SkewOperator::as(Representation rep) const {
  if (rep == Representation::Dense && is_lowrank()) return SkewOperator(n_, nullptr, to_dense());
  return *this;
}

Vector SkewOperator::apply(const Vector& x) const {
  require_same_size(x.size(), n_, "skew apply");
  if (!is_lowrank()) return mat_ * x;
  if (basis_->cols() == 0) return Vector::Zero(n_);
  return *basis_ * (mat_ * (basis_->transpose() * x));
}

double SkewOperator::norm() const { return mat_.norm(); }

SkewOperator SkewOperator::operator-() const { return SkewOperator(n_, basis_, -mat_); }

SkewOperator operator*(double s, const SkewOperator& a) {
  return SkewOperator(a.n_, a.basis_, s * a.mat_);
}

SkewOperator operator+(const SkewOperator& a, const SkewOperator& b) {
  Aligned al = align_skew(a, b);
  return SkewOperator(a.n_, std::move(al.basis), al.a + al.b);
}

SkewOperator operator-(const SkewOperator& a, const SkewOperator& b) {
  Aligned al = align_skew(a, b);
  return SkewOperator(a.n_, std::move(al.basis), al.a - al.b);
}

SkewOperator commutator(const SkewOperator& a, const SkewOperator& b) {
  Aligned al = align_skew(a, b);
  Matrix c = al.a * al.b - al.b * al.a;
  return SkewOperator(a.n_, std::move(al.basis), std::move(c));
}

// ---------------------------------------------------------------------------
// RotationOperator

RotationOperator RotationOperator::identity(Index n) {
  return RotationOperator(n, empty_basis(n), Matrix(0, 0));
}

RotationOperator RotationOperator::dense(const Matrix& r) {
  if (r.rows() != r.cols()) throw Error(ErrorCode::DimensionMismatch, "rotation must be square");
  require_finite(r, "dense rotation");
  return RotationOperator(r.rows(), nullptr, r - Matrix::Identity(r.rows(), r.cols()));
}

RotationOperator RotationOperator::dense_deviation(Matrix deviation) {
  if (deviation.rows() != deviation.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "rotation must be square");
  }
  require_finite(deviation, "dense rotation");
  const Index n = deviation.rows();
  return RotationOperator(n, nullptr, std::move(deviation));
}

RotationOperator RotationOperator::lowrank_deviation(Basis basis, Matrix deviation) {
  if (!basis) throw Error(ErrorCode::InvalidArgument, "null basis");
  const Index k = basis->cols();
  if (deviation.rows() != k || deviation.cols() != k) {
    throw Error(ErrorCode::DimensionMismatch, "rotation block does not match basis");
  }
  require_finite(deviation, "rotation block");
  const Index n = basis->rows();
  return RotationOperator(n, std::move(basis), std::move(deviation));
}

Matrix RotationOperator::to_dense() const {
  Matrix r = Matrix::Identity(n_, n_);
  if (!is_lowrank()) return r + dev_;
  if (basis_->cols() > 0) r += *basis_ * dev_ * basis_->transpose();
  return r;
}

RotationOperator RotationOperator::as(Representation rep) const {
  if (rep == Representation::Dense && is_lowrank()) {
    Matrix d = to_dense();
    d.diagonal().array() -= 1.0;
    return RotationOperator(n_, nullptr, std::move(d));
  }
  return *this;
}

Vector RotationOperator::apply(const Vector& y) const { return y + apply_minus_identity(y); }

Vector RotationOperator::apply_minus_identity(const Vector& y) const {
  require_same_size(y.size(), n_, "rotation apply");
  if (!is_lowrank()) return dev_ * y;
  if (basis_->cols() == 0) return Vector::Zero(n_);
  return *basis_ * (dev_ * (basis_->transpose() * y));
}

RotationOperator RotationOperator::transpose() const {
  return RotationOperator(n_, basis_, dev_.transpose());
}

double RotationOperator::distance_from_identity() const { return dev_.norm(); }

double RotationOperator::orthogonality_defect() const {
  // (I + D)^T (I + D) - I = D + D^T + D^T D
  return (dev_ + dev_.transpose() + dev_.transpose() * dev_).norm();
}

double RotationOperator::determinant() const {
  const Index k = dev_.rows();
  if (k == 0) return 1.0;
  return (Matrix::Identity(k, k) + dev_).determinant();
}

RotationOperator operator*(const RotationOperator& a, const RotationOperator& b) {
  Aligned al = align_rotation(a, b);
  // (I + A)(I + B) - I = A + B + AB
  Matrix d = al.a + al.b + al.a * al.b;
  return RotationOperator(a.n_, std::move(al.basis), std::move(d));
}

RotationOperator RotationOperator::average(std::span<const RotationOperator> rs) {
  if (rs.empty()) throw Error(ErrorCode::EmptySet, "cannot average zero rotations");
  RotationOperator acc = rs.front();
  for (std::size_t i = 1; i < rs.size(); ++i) {
    Aligned al = align_rotation(acc, rs[i]);
    acc = RotationOperator(acc.n_, std::move(al.basis), al.a + al.b);
  }
  acc.dev_ /= static_cast<double>(rs.size());
  return acc;
}

// ---------------------------------------------------------------------------
// Free functions

Basis orthonormal_basis(std::span<const Vector> vs, double rel_tol) {
  if (vs.empty()) throw Error(ErrorCode::InvalidArgument, "no vectors");
  const Index n = vs.front().size();
  double scale = 0.0;
  for (const auto& v : vs) {
    require_same_size(v.size(), n, "basis vectors");
    require_finite(v, "basis vector");
    scale = std::max(scale, v.norm());
  }
  std::vector<Vector> kept;
  for (const auto& v : vs) {
    Vector r = v;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : kept) r -= q.dot(r) * q;
    }
    const double rn = r.norm();
    if (rn > rel_tol * scale && rn > 0.0) kept.push_back(r / rn);
  }
  auto b = std::make_shared<Matrix>(n, static_cast<Index>(kept.size()));
  for (Index j = 0; j < b->cols(); ++j) b->col(j) = kept[static_cast<std::size_t>(j)];
  return b;
}

SkewOperator phi_iso(const SimpleBivector& bv) {
  const Index n = bv.a.size();
  require_same_size(bv.b.size(), n, "bivector factors");
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "bivector needs n >= 2");
  require_finite(bv.a, "bivector a");
  require_finite(bv.b, "bivector b");

  const double an = bv.a.norm();
  const double bn = bv.b.norm();
  if (an == 0.0 || bn == 0.0) return SkewOperator::zero(n);
  const Vector e1 = bv.a / an;
  Vector r = bv.b - e1.dot(bv.b) * e1;
  r -= e1.dot(r) * e1;
  const double beta = r.norm();
  // Below this the pair is collinear to working precision.
  if (beta <= 1e-13 * bn) return SkewOperator::zero(n);

  auto basis = std::make_shared<Matrix>(n, 2);
  basis->col(0) = e1;
  basis->col(1) = r / beta;
  // b a^T - a b^T = |a| beta (e2 e1^T - e1 e2^T)
  Matrix c = Matrix::Zero(2, 2);
  c(1, 0) = an * beta;
  c(0, 1) = -an * beta;
  return SkewOperator::lowrank(std::move(basis), std::move(c));
}

double blade3_volume(const Vector& x, const Vector& y, const Vector& z) {
  require_same_size(y.size(), x.size(), "blade3 y");
  require_same_size(z.size(), x.size(), "blade3 z");
  if (x.size() < 3) throw Error(ErrorCode::InvalidArgument, "three-blade needs n >= 3");
  // Product of Gram-Schmidt residual norms equals sqrt(det Gram).
  const double xn = x.norm();
  if (xn == 0.0) return 0.0;
  const Vector e1 = x / xn;
  Vector ry = y - e1.dot(y) * e1;
  ry -= e1.dot(ry) * e1;
  const double yn = ry.norm();
  if (yn == 0.0) return 0.0;
  const Vector e2 = ry / yn;
  Vector rz = z;
  for (int pass = 0; pass < 2; ++pass) {
    rz -= e1.dot(rz) * e1;
    rz -= e2.dot(rz) * e2;
  }
  return xn * yn * rz.norm();
}

TangentVector project_tangent(const Vector& v, const UnitVector& base) {
  require_same_size(v.size(), base.size(), "project_tangent");
  require_finite(v, "project_tangent input");
  const Vector& b = base.data();
  Vector r = v - b.dot(v) * b;
  r -= b.dot(r) * b;
  return TangentVector(std::move(r), base);
}

std::pair<TangentVector, TangentVector> orthonormalize_pair(const TangentVector& u,
                                                            const TangentVector& w) {
  require_same_size(u.size(), w.size(), "orthonormalize_pair");
  if ((u.base().data() - w.base().data()).norm() > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "tangent vectors have different base points");
  }
  const double un = u.norm();
  if (un == 0.0) throw Error(ErrorCode::DegeneratePlane, "first tangent vector is zero");
  const Vector uh = u.data() / un;
  Vector r = w.data() - uh.dot(w.data()) * uh;
  r -= uh.dot(r) * uh;
  const double rn = r.norm();
  if (rn == 0.0 || rn < 1e-7 * w.norm()) {
    throw Error(ErrorCode::DegeneratePlane, "tangent vectors are collinear");
  }
  return {TangentVector(uh, u.base()), TangentVector(r / rn, u.base())};
}

Matrix expm_minus_identity_block(const Matrix& k) {
  const Index m = k.rows();
  if (m != k.cols()) throw Error(ErrorCode::DimensionMismatch, "skew block must be square");
  if (m < 2) return Matrix::Zero(m, m);
  if (m == 2) {
    const double theta = 0.5 * (k(1, 0) - k(0, 1));
    const double s = std::sin(theta);
    const double h = std::sin(0.5 * theta);
    const double cm1 = -2.0 * h * h;  // cos(theta) - 1 without cancellation
    Matrix d(2, 2);
    d << cm1, -s, s, cm1;
    return d;
  }
  if (m == 3) {
    const Eigen::Vector3d omega(k(2, 1), k(0, 2), k(1, 0));
    const double theta = omega.norm();
    double f1 = 1.0;  // sin(theta) / theta
    double f2 = 0.5;  // (1 - cos(theta)) / theta^2
    if (theta > 0.0) {
      const double h = std::sin(0.5 * theta);
      f1 = std::sin(theta) / theta;
      f2 = 2.0 * h * h / (theta * theta);
    }
    return f1 * k + f2 * (k * k);
  }
  // exp(K) u = cos(t) u + sinc(t) K u for every eigenvector u of K^2 = -t^2.
  const Matrix k2 = k * k;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (k2 + k2.transpose()));
  const Matrix& u = es.eigenvectors();
  Vector cm1(m), sinc(m);
  for (Index j = 0; j < m; ++j) {
    const double t = std::sqrt(std::max(0.0, -es.eigenvalues()(j)));
    const double h = std::sin(0.5 * t);
    cm1(j) = -2.0 * h * h;
    sinc(j) = t > 0.0 ? std::sin(t) / t : 1.0;
  }
  return u * cm1.asDiagonal() * u.transpose() + k * (u * sinc.asDiagonal() * u.transpose());
}

Matrix expm_minus_identity_dense(const Matrix& a) {
  const Index n = a.rows();
  if (n != a.cols()) throw Error(ErrorCode::DimensionMismatch, "expm needs a square matrix");
  require_finite(a, "expm input");
  // The Frobenius norm is submultiplicative and, unlike the 1-norm, does not
  // grow with n for the low-rank generators met here.
  const double norm = a.norm();
  if (norm == 0.0) return Matrix::Zero(n, n);

  int squarings = 0;
  double scaled = norm;
  while (scaled > 0.5) {
    scaled *= 0.5;
    ++squarings;
  }
  // Smallest Taylor degree whose remainder bound is below unit roundoff.
  constexpr double kTol = std::numeric_limits<double>::epsilon() / 2;
  int degree = 1;
  while (degree < 24 && std::pow(scaled, degree + 1) / factorial(degree + 1) > kTol) ++degree;

  const Matrix as = std::ldexp(1.0, -squarings) * a;
  // Paterson-Stockmeyer evaluation of sum_{j=1..m} A^j / j!.
  const int q = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(degree)))));
  std::vector<Matrix> pow(static_cast<std::size_t>(q) + 1);
  pow[1] = as;
  for (int i = 2; i <= q; ++i) pow[static_cast<std::size_t>(i)] = pow[static_cast<std::size_t>(i) - 1] * as;

  auto block = [&](int b, int hi) {
    Matrix acc = Matrix::Zero(n, n);
    for (int deg = b * q; deg <= hi; ++deg) {
      if (deg == 0) continue;
      const double c = 1.0 / factorial(deg);
      const int i = deg - b * q;
      if (i == 0) {
        acc.diagonal().array() += c;
      } else {
        acc.noalias() += c * pow[static_cast<std::size_t>(i)];
      }
    }
    return acc;
  };
  const int top = (degree - 1) / q;
  Matrix e = block(top, degree);
  for (int b = top - 1; b >= 0; --b) {
    Matrix next = block(b, b * q + q - 1);
    next.noalias() += pow[static_cast<std::size_t>(q)] * e;
    e = std::move(next);
  }
  // (I + E)^2 - I = 2E + E^2
  for (int s = 0; s < squarings; ++s) {
    Matrix sq = e * e;
    e = 2.0 * e + sq;
  }
  return e;
}

RotationOperator expm_skew(const SkewOperator& s) {
  if (s.is_lowrank()) {
    return RotationOperator::lowrank_deviation(s.basis(), expm_minus_identity_block(s.coeffs()));
  }
  return RotationOperator::dense_deviation(expm_minus_identity_dense(s.coeffs()));
}

double frobenius_distance(const RotationOperator& a, const RotationOperator& b) {
  Aligned al = align_rotation(a, b);
  return (al.a - al.b).norm();
}

double frobenius_distance(const SkewOperator& a, const SkewOperator& b) {
  Aligned al = align_skew(a, b);
  return (al.a - al.b).norm();
}

double deviation_gap(const RotationOperator& h_rot, const SkewOperator& h_gen) {
  require_same_size(h_rot.dim(), h_gen.dim(), "deviation_gap");
  if (h_rot.is_lowrank() && h_gen.is_lowrank()) {
    if (auto m = merged_basis(h_rot.basis(), h_gen.basis())) {
      return (rebase(h_rot.deviation(), *h_rot.basis(), **m) -
              rebase(h_gen.coeffs(), *h_gen.basis(), **m))
          .norm();
    }
  }
  Matrix d = h_rot.to_dense();
  d.diagonal().array() -= 1.0;
  if (!h_rot.is_lowrank()) d = h_rot.deviation();
  return (d - h_gen.to_dense()).norm();
}

}  // namespace blurgeom

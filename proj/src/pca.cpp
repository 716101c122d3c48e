#include "blurgeom/pca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "blurgeom/stats.hpp"

namespace blurgeom {

PcaResult pca(std::span<const Vector> points, int dims) {
  if (points.empty()) throw Error(ErrorCode::InsufficientPoints, "pca of no points");
  const Index n = points.front().size();
  if (dims < 1 || dims > n) throw Error(ErrorCode::InvalidArgument, "pca dims outside [1, n]");
  const auto count = static_cast<Index>(points.size());
  if (count < dims + 1) throw Error(ErrorCode::InsufficientPoints, "pca needs dims + 1 points");

  Matrix x(count, n);
  for (Index i = 0; i < count; ++i) {
    require_same_size(points[i].size(), n, "pca points");
    require_finite(points[i], "pca point");
    x.row(i) = points[i].transpose();
  }
  PcaResult out;
  out.mean = x.colwise().mean().transpose();
  x.rowwise() -= out.mean.transpose();

  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double denom = static_cast<double>(count - 1);
  const Vector var = s.array().square() / denom;
  out.total_variance = var.sum();
  const double cutoff = s.size() > 0 ? s(0) * static_cast<double>(std::max(count, n)) *
                                           std::numeric_limits<double>::epsilon()
                                     : 0.0;
  out.numerical_rank = (s.array() > cutoff).count();
  out.rank_deficient = out.numerical_rank < dims;

  const Index avail = std::min<Index>(dims, s.size());
  out.components = Matrix::Zero(dims, n);
  out.explained_variance = Vector::Zero(dims);
  out.explained_variance_fraction = Vector::Zero(dims);
  for (Index c = 0; c < avail; ++c) {
    Vector v = svd.matrixV().col(c);
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.components.row(c) = v.transpose();
    out.explained_variance(c) = var(c);
    if (out.total_variance > 0.0) out.explained_variance_fraction(c) = var(c) / out.total_variance;
  }
  out.projections = x * out.components.transpose();
  return out;
}

namespace {

constexpr std::size_t kMaxLineSeeds = 256;

std::optional<LineFit> fit_line(const Matrix& p, std::span<const std::size_t> idx) {
  if (idx.size() < 2) return std::nullopt;
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (std::size_t i : idx) c += p.row(static_cast<Index>(i)).transpose();
  c /= static_cast<double>(idx.size());
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (std::size_t i : idx) {
    const Eigen::Vector3d d = p.row(static_cast<Index>(i)).transpose() - c;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
  Eigen::Vector3d dir = es.eigenvectors().col(2);
  Index arg = 0;
  dir.cwiseAbs().maxCoeff(&arg);
  if (dir(arg) < 0.0) dir = -dir;
  return LineFit{c, dir, idx.size()};
}

double line_distance(const LineFit& f, const Eigen::Vector3d& x) {
  const Eigen::Vector3d d = x - f.point;
  return (d - d.dot(f.direction) * f.direction).norm();
}

}  // namespace

ClusterSelection select_clusters(const Matrix& proj2, const Matrix& proj3,
                                 std::span<const Continuation> labels,
                                 const ClusterConfig& config) {
  const Index count = proj2.rows();
  if (proj2.cols() != 2 || proj3.cols() != 3) {
    throw Error(ErrorCode::DimensionMismatch, "cluster selection needs 2D and 3D projections");
  }
  require_same_size(proj3.rows(), count, "2D vs 3D projections");
  require_same_size(static_cast<Index>(labels.size()), count, "labels");

  ClusterSelection out;
  if (count == 0) return out;

  std::vector<char> taken(static_cast<std::size_t>(count), 0);
  std::vector<double> r2(static_cast<std::size_t>(count));
  std::vector<double> r3(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    r2[i] = proj2.row(i).norm();
    r3[i] = proj3.row(i).norm();
  }
  out.ear_radius_threshold = quantile(r2, config.ear_quantile);
  for (Index i = 0; i < count; ++i) {
    if (!(r2[i] > out.ear_radius_threshold) || !(proj2(i, 1) > 0.0)) continue;
    if (proj2(i, 0) < 0.0) {
      out.left_ear.push_back(static_cast<std::size_t>(i));
      taken[i] = 1;
    } else if (proj2(i, 0) > 0.0) {
      out.right_ear.push_back(static_cast<std::size_t>(i));
      taken[i] = 1;
    }
  }

  double ms = 0.0;
  for (double r : r3) ms += r * r;
  out.line_distance_threshold = config.line_distance_fraction * std::sqrt(ms / static_cast<double>(count));
  const double min_radius = config.line_min_radius_factor * quantile(r3, 0.5);

  const auto select_line = [&](Continuation c, std::vector<std::size_t>& members,
                               std::optional<LineFit>& fit) {
    std::vector<std::size_t> candidates;
    for (Index i = 0; i < count; ++i) {
      if (labels[i] == c && !taken[i] && r3[i] >= min_radius) candidates.push_back(static_cast<std::size_t>(i));
    }
    if (candidates.size() < 2) return;
    const auto within = [&](const LineFit& f, std::size_t i) {
      return line_distance(f, proj3.row(static_cast<Index>(i)).transpose()) <= out.line_distance_threshold;
    };
    const auto consensus = [&](const LineFit& f) {
      std::vector<std::size_t> in;
      for (std::size_t i : candidates) {
        if (within(f, i)) in.push_back(i);
      }
      return in;
    };
    std::vector<std::size_t> seeds = candidates;
    std::stable_sort(seeds.begin(), seeds.end(), [&](std::size_t a, std::size_t b) { return r3[a] > r3[b]; });
    if (seeds.size() > kMaxLineSeeds) seeds.resize(kMaxLineSeeds);
    std::vector<std::size_t> inliers;
    for (std::size_t a = 0; a < seeds.size(); ++a) {
      for (std::size_t b = a + 1; b < seeds.size(); ++b) {
        const Eigen::Vector3d pa = proj3.row(static_cast<Index>(seeds[a])).transpose();
        const Eigen::Vector3d d = proj3.row(static_cast<Index>(seeds[b])).transpose() - pa;
        if (d.norm() <= out.line_distance_threshold) continue;
        auto in = consensus(LineFit{pa, d.normalized(), 2});
        if (in.size() > inliers.size()) inliers = std::move(in);
      }
    }
    fit = fit_line(proj3, inliers.size() >= 2 ? std::span<const std::size_t>(inliers) : std::span<const std::size_t>(candidates));
    if (auto refit = fit_line(proj3, consensus(*fit))) fit = refit;
    for (Index i = 0; i < count; ++i) {
      if (labels[i] == c && !taken[i] && within(*fit, static_cast<std::size_t>(i))) {
        members.push_back(static_cast<std::size_t>(i));
      }
    }
  };
  select_line(Continuation::Greedy, out.greedy_line, out.greedy_fit);
  select_line(Continuation::Branch, out.branch_line, out.branch_fit);
  for (std::size_t i : out.greedy_line) taken[i] = 1;
  for (std::size_t i : out.branch_line) taken[i] = 1;
  for (Index i = 0; i < count; ++i) {
    if (!taken[i]) out.bulk.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

double membership_recovery(std::span<const std::size_t> planted,
                           std::span<const std::size_t> selected) {
  if (planted.empty()) return 1.0;
  std::vector<std::size_t> sel(selected.begin(), selected.end());
  std::sort(sel.begin(), sel.end());
  std::size_t hit = 0;
  for (std::size_t i : planted) {
    if (std::binary_search(sel.begin(), sel.end(), i)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(planted.size());
}

}  // namespace blurgeom

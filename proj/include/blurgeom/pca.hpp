#pragma once

// Principal components of a point population and selection of the
// off-centre "ear" clusters (2D) and continuation-separated lines (3D).

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "blurgeom/linalg.hpp"

namespace blurgeom {

struct PcaResult {
  /// dims x n, orthonormal rows; each row's largest-magnitude entry is positive.
  Matrix components;
  /// Variance captured by each component over the total variance.
  Vector explained_variance_fraction;
  Vector explained_variance;
  /// N x dims coordinates of the centered points.
  Matrix projections;
  Vector mean;
  /// Trace of the sample covariance (normalized by N - 1).
  double total_variance = 0.0;
  Index numerical_rank = 0;
  bool rank_deficient = false;
};

/// Thin SVD of the centered N x n data matrix. Throws InsufficientPoints
/// for fewer than dims + 1 points and InvalidArgument for dims outside
/// [1, n].
PcaResult pca(std::span<const Vector> points, int dims);

enum class Continuation : std::uint8_t { Greedy, Branch };

struct ClusterConfig {
  /// Ears are points whose 2D radius exceeds this quantile.
  double ear_quantile = 0.90;
  /// Line membership: orthogonal distance at most this fraction of the RMS
  /// radius of the 3D cloud.
  double line_distance_fraction = 0.05;
  /// Line fits use points at least this multiple of the median 3D radius.
  double line_min_radius_factor = 3.0;
};

struct LineFit {
  Eigen::Vector3d point;
  Eigen::Vector3d direction;
  std::size_t support;
};

struct ClusterSelection {
  std::vector<std::size_t> left_ear;   ///< x < 0, y > 0
  std::vector<std::size_t> right_ear;  ///< x > 0, y > 0
  std::vector<std::size_t> greedy_line;
  std::vector<std::size_t> branch_line;
  std::vector<std::size_t> bulk;
  std::optional<LineFit> greedy_fit;
  std::optional<LineFit> branch_fit;
  double ear_radius_threshold = 0.0;
  double line_distance_threshold = 0.0;
};

/// `proj2` is N x 2, `proj3` is N x 3, `labels` has N entries. Each line is
/// the candidate pair line (over the 256 largest-radius candidates) with the
/// most candidates within the distance threshold, refit by least squares on
/// that consensus. Empty selections are returned as empty lists.
ClusterSelection select_clusters(const Matrix& proj2, const Matrix& proj3,
                                 std::span<const Continuation> labels,
                                 const ClusterConfig& config = {});

/// Fraction of `planted` contained in `selected` (1 for an empty plant).
double membership_recovery(std::span<const std::size_t> planted,
                           std::span<const std::size_t> selected);

}  // namespace blurgeom

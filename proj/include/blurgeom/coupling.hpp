#pragma once

// Curvature-rotated states q = Hy - y and their couplings |cos(q, w)| to
// probe world vectors.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "blurgeom/linalg.hpp"
#include "blurgeom/probe.hpp"
#include "blurgeom/stats.hpp"

namespace blurgeom {

using ProbeId = std::uint32_t;

struct StatePair {
  Vector y_greedy;
  Vector y_branch;
};

/// Hy - y, through the support block when H is lowrank.
Vector q_vector(const RotationOperator& h, const Vector& y);

/// |q.w| / (|q||w|). Throws ZeroVector when either argument vanishes.
double coupling(const Vector& q, const Vector& w);

/// coupling(q, w_j) for every probe.
std::vector<double> couplings(const Vector& q, std::span<const Probe> probes);

struct ProbeMax {
  ProbeId probe;
  double value;
};

struct MaxProbes {
  ProbeMax active;
  ProbeMax bulk;
};

/// Argmax over the active ids and over their complement; ties go to the
/// lowest id. Throws EmptySet when either set is empty and RangeError for
/// ids outside the coupling row.
MaxProbes max_probes(std::span<const double> row, std::span<const ProbeId> active_ids);

struct CouplingRow {
  std::uint64_t record_id;
  Vector q_greedy;
  Vector q_branch;
  std::vector<double> couplings_greedy;
  std::vector<double> couplings_branch;
  MaxProbes max_greedy;
  MaxProbes max_branch;
};

struct Deltas {
  Vector delta_q;  ///< q_branch - q_greedy
  Vector delta_y;  ///< y_branch - y_greedy
};

Deltas delta_vectors(const CouplingRow& row, const StatePair& pair);

struct PieceGroup {
  Side side;
  Piece piece;
  double mean_coupling;  ///< NaN when the group has no samples
  std::size_t samples;
};

struct PieceSpectrum {
  std::array<PieceGroup, kSideCount * kPieceCount> groups;
  /// Rows with a zero delta, for which coupling is undefined.
  std::size_t skipped_rows = 0;

  const PieceGroup& at(Side s, Piece p) const {
    return groups[static_cast<int>(s) * kPieceCount + static_cast<int>(p)];
  }
};

/// Mean coupling(dq, w) over rows and over the probes of each (side, piece)
/// group. Throws EmptySet for no rows.
PieceSpectrum piece_spectrum(std::span<const Vector> delta_q_rows, std::span<const Probe> probes);

/// Spearman test of group mean coupling against piece value for one side
/// (king excluded).
SpearmanResult piece_value_correlation(const PieceSpectrum& spectrum, Side side);

struct FileRate {
  std::size_t count;
  std::size_t total;
  BetaSummary posterior;
};

/// Per-file counts of the probes in `max_probe_ids` with Beta posteriors.
std::array<FileRate, kFileCount> file_distribution(std::span<const ProbeId> max_probe_ids,
                                                   std::span<const Probe> probes,
                                                   double mass = 0.68);

struct CentipawnSummary {
  double mean_abs_log_cp;
  double std;  ///< population standard deviation
  std::size_t used;
  std::size_t skipped_zero;
  std::size_t missing;
};

struct Evaluation {
  double cp_greedy;
  double cp_branch;
};

/// Statistics of |ln|cp_branch - cp_greedy||. Non-finite evaluations count as
/// missing, equal ones as zero changes. Throws NoEvalData when nothing
/// remains.
CentipawnSummary centipawn_summary(std::span<const std::optional<Evaluation>> evals);

}  // namespace blurgeom

#include "blurgeom/coupling.hpp"

#include <cmath>
#include <limits>

namespace blurgeom {

Vector q_vector(const RotationOperator& h, const Vector& y) {
  require_same_size(y.size(), h.dim(), "q_vector");
  return h.apply_minus_identity(y);
}

double coupling(const Vector& q, const Vector& w) {
  require_same_size(q.size(), w.size(), "coupling");
  const double nq = q.norm();
  const double nw = w.norm();
  if (nq == 0.0 || nw == 0.0) throw Error(ErrorCode::ZeroVector, "coupling with a zero vector");
  return std::min(1.0, std::abs(q.dot(w)) / (nq * nw));
}

std::vector<double> couplings(const Vector& q, std::span<const Probe> probes) {
  std::vector<double> out;
  out.reserve(probes.size());
  for (const auto& p : probes) out.push_back(coupling(q, p.w()));
  return out;
}

MaxProbes max_probes(std::span<const double> row, std::span<const ProbeId> active_ids) {
  std::vector<char> active(row.size(), 0);
  for (ProbeId id : active_ids) {
    if (id >= row.size()) throw Error(ErrorCode::RangeError, "active probe id out of range");
    active[id] = 1;
  }
  std::optional<ProbeMax> best_active;
  std::optional<ProbeMax> best_bulk;
  for (std::size_t i = 0; i < row.size(); ++i) {
    auto& best = active[i] ? best_active : best_bulk;
    if (!best || row[i] > best->value) best = ProbeMax{static_cast<ProbeId>(i), row[i]};
  }
  if (!best_active) throw Error(ErrorCode::EmptySet, "no active probes");
  if (!best_bulk) throw Error(ErrorCode::EmptySet, "no bulk probes");
  return MaxProbes{*best_active, *best_bulk};
}

Deltas delta_vectors(const CouplingRow& row, const StatePair& pair) {
  require_same_size(row.q_branch.size(), row.q_greedy.size(), "q pair");
  require_same_size(pair.y_branch.size(), pair.y_greedy.size(), "y pair");
  require_same_size(pair.y_branch.size(), row.q_branch.size(), "q vs y");
  return Deltas{row.q_branch - row.q_greedy, pair.y_branch - pair.y_greedy};
}

PieceSpectrum piece_spectrum(std::span<const Vector> delta_q_rows, std::span<const Probe> probes) {
  if (delta_q_rows.empty()) throw Error(ErrorCode::EmptySet, "piece spectrum of no rows");
  std::array<double, kSideCount * kPieceCount> sums{};
  std::array<std::size_t, kSideCount * kPieceCount> counts{};
  PieceSpectrum out;
  for (const auto& dq : delta_q_rows) {
    if (dq.norm() == 0.0) {
      ++out.skipped_rows;
      continue;
    }
    for (const auto& p : probes) {
      const int g = static_cast<int>(p.parsed().side) * kPieceCount + static_cast<int>(p.parsed().piece);
      sums[g] += coupling(dq, p.w());
      ++counts[g];
    }
  }
  for (int g = 0; g < kSideCount * kPieceCount; ++g) {
    out.groups[g] = PieceGroup{
        static_cast<Side>(g / kPieceCount), static_cast<Piece>(g % kPieceCount),
        counts[g] ? sums[g] / static_cast<double>(counts[g]) : std::numeric_limits<double>::quiet_NaN(),
        counts[g]};
  }
  return out;
}

SpearmanResult piece_value_correlation(const PieceSpectrum& spectrum, Side side) {
  std::vector<double> c;
  std::vector<double> v;
  for (int p = 0; p < kPieceCount; ++p) {
    const auto value = piece_value(static_cast<Piece>(p));
    const auto& g = spectrum.at(side, static_cast<Piece>(p));
    if (!value || g.samples == 0) continue;
    c.push_back(g.mean_coupling);
    v.push_back(*value);
  }
  return spearman(c, v);
}

std::array<FileRate, kFileCount> file_distribution(std::span<const ProbeId> max_probe_ids,
                                                   std::span<const Probe> probes, double mass) {
  std::array<std::size_t, kFileCount> counts{};
  for (ProbeId id : max_probe_ids) {
    if (id >= probes.size()) throw Error(ErrorCode::RangeError, "probe id out of range");
    ++counts[probes[id].parsed().file];
  }
  const std::size_t n = max_probe_ids.size();
  std::array<FileRate, kFileCount> out{};
  for (int f = 0; f < kFileCount; ++f) out[f] = FileRate{counts[f], n, beta_posterior(counts[f], n, mass)};
  return out;
}

CentipawnSummary centipawn_summary(std::span<const std::optional<Evaluation>> evals) {
  std::vector<double> logs;
  std::size_t zero = 0, missing = 0;
  for (const auto& e : evals) {
    if (!e || !std::isfinite(e->cp_greedy) || !std::isfinite(e->cp_branch)) {
      ++missing;
      continue;
    }
    const double change = std::abs(e->cp_branch - e->cp_greedy);
    if (change == 0.0) {
      ++zero;
      continue;
    }
    logs.push_back(std::abs(std::log(change)));
  }
  if (logs.empty()) throw Error(ErrorCode::NoEvalData, "no records carry a centipawn change");
  double mean = 0.0;
  for (double l : logs) mean += l;
  mean /= static_cast<double>(logs.size());
  double var = 0.0;
  for (double l : logs) var += (l - mean) * (l - mean);
  var /= static_cast<double>(logs.size());
  return CentipawnSummary{mean, std::sqrt(var), logs.size(), zero, missing};
}

}  // namespace blurgeom

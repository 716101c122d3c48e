#pragma once

// Seeded synthetic BHG1 datasets, optionally with planted PCA structure:
// branch-state "ears" along two fixed directions and two parallel lines of
// q vectors separated by continuation.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blurgeom/dataset.hpp"

namespace blurgeom {

/// p1 ~ U[p1_lo, p1_hi], p2 = min(p1, (1 - p1) r) with r ~ U[ratio_lo, ratio_hi].
struct BlurProfile {
  double p1_lo = 0.45;
  double p1_hi = 0.75;
  double ratio_lo = 0.6;
  double ratio_hi = 1.0;

  /// Charge near 1: p1 = 0.5, r in [0.8, 1].
  static BlurProfile uncertain();
  /// Charge below 4e-5: p1 = 0.999, r in [0.001, 0.01].
  static BlurProfile confident();
  /// p2 = 0.
  static BlurProfile chargeless();
  /// "default", "uncertain", "confident" or "chargeless".
  static BlurProfile named(std::string_view name);
};

/// Sizes are multiples of the median |q| of the unplanted states.
struct PlantedStructure {
  /// Records whose branch q lands in an ear (alternating left and right).
  double ear_fraction = 0.08;
  /// Records whose greedy (first half) or branch (second half) q lies on a line.
  double line_fraction = 0.16;
  double ear_radius = 2.0;
  double line_extent = 1.2;
  double line_offset = 0.3;
  /// Weight of the ear direction inside the world vectors of probes on
  /// files c (left ear) and f (right ear).
  double probe_alignment = 0.5;
};

struct SynthConfig {
  std::uint64_t seed = 1;
  std::uint32_t n = 64;
  std::uint32_t record_count = 100;
  std::uint32_t probe_count = 737;
  BlurProfile blur;
  std::optional<PlantedStructure> planted;
  /// v_i . z ~ U[lo, hi] before the norm jitter.
  double z_cosine_lo = 0.1;
  double z_cosine_hi = 0.5;
  /// Scale of the support-subspace component of y relative to its off-support part.
  double support_weight = 0.5;
  std::uint32_t active_min = 16;
  std::uint32_t active_max = 32;
  bool with_eval = true;
  double log_cp_mean = 3.0;
  double log_cp_std = 1.0;
  double eval_missing_fraction = 0.05;
  /// Nonzero adds a random unembedding and picks tokens as the top two of softmax(Vz).
  std::uint32_t vocab_size = 0;
  /// Holonomy step used to aim the planted states.
  double epsilon = 1e-3;

  /// Throws InvalidArgument.
  void validate() const;
};

/// Record indices of planted members.
struct PlantedMembers {
  std::vector<std::size_t> left_ear;
  std::vector<std::size_t> right_ear;
  std::vector<std::size_t> greedy_line;
  std::vector<std::size_t> branch_line;
  /// Global unit directions of the ears and of the lines.
  Vector left_direction, right_direction, line_direction;
  double q_scale = 0.0;
};

struct SynthResult {
  Dataset dataset;
  PlantedMembers planted;
};

SynthResult synthesize(const SynthConfig& config);

struct DatasetSummary {
  std::filesystem::path path;
  std::string sha256;
  std::size_t bytes = 0;
  std::uint32_t n = 0;
  std::uint32_t record_count = 0;
  std::uint32_t probe_count = 0;
  double mean_charge = 0.0;
  PlantedMembers planted;
};

DatasetSummary synth(const SynthConfig& config, const std::filesystem::path& out);

std::string sha256_hex(std::span<const std::uint8_t> bytes);

}  // namespace blurgeom

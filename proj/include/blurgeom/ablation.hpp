#pragma once

// Control operators that replace the holonomy of a record.

#include <cstdint>
#include <optional>
#include <string_view>

#include "blurgeom/connection.hpp"

namespace blurgeom {

enum class AblationMode { RandomSoN, RotateOntoV1, RotateOntoV2 };

struct AblationSpec {
  AblationMode mode;
  std::optional<std::uint64_t> seed;

  /// Throws InvalidArgument unless the seed is present exactly for RandomSoN.
  void validate() const;
};

/// "random-so-n", "rotate-v1", "rotate-v2"; throws InvalidArgument.
AblationMode parse_ablation_mode(std::string_view s);
std::string_view to_string(AblationMode m);

/// exp(tau S) for a seeded Gaussian skew S, with tau chosen so that
/// ||exp(tau S) - I||_F = ||H - I||_F. Matching R - I rather than R, since
/// every rotation has Frobenius norm sqrt(n). Identity in, identity out.
RotationOperator random_matched_rotation(const RotationOperator& reference, std::uint64_t seed);

/// Rotation in span{z, target} taking z to target / |target|, identity on
/// the orthogonal complement. Throws ZeroVector or AntipodalTarget.
RotationOperator rotate_onto(const UnitVector& z, const Vector& target);

/// Seed for one record of a random ablation run.
std::uint64_t record_seed(std::uint64_t seed, std::uint64_t record_id);

/// Operator standing in for H on record `record_id`.
RotationOperator ablation_operator(const AblationSpec& spec, const BranchGeometry& g,
                                   const RotationOperator& h, std::uint64_t record_id);

}  // namespace blurgeom

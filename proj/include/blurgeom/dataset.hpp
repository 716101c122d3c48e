#pragma once

// BHG1 branch-point dataset: a little-endian binary file holding probes, an
// optional unembedding matrix and one record per branch point.
//
//   header (24 bytes)
//     magic "BHG1" | version u16 | n u32 | probe_count u32 | record_count u32
//     | flags u16 (bit 0 unembed, bit 1 evaluations) | vocab_size u32
//   probes, probe_count times
//     label_len u16 | label bytes | w n x f32 | b f32 | accuracy f32 | f1 f32
//   unembedding (flag bit 0): vocab_size x n f32, row-major
//   records, record_count times
//     record_id u64 | token1 u32 | token2 u32 | p1 f32 | p2 f32
//     | z, v1, v2, y_greedy, y_branch (n x f32 each)
//     | active_count u32 | active ids u32[active_count]
//     | cp_greedy f32, cp_branch f32 (flag bit 1; NaN marks a missing value)
//
// Values are 32-bit on disk and widened to 64-bit on load, so f32 rounding is
// the precision floor when comparing implementations.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blurgeom/connection.hpp"
#include "blurgeom/coupling.hpp"
#include "blurgeom/probe.hpp"

namespace blurgeom {

inline constexpr char kMagic[4] = {'B', 'H', 'G', '1'};
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::uint16_t kFlagUnembed = 1u << 0;
inline constexpr std::uint16_t kFlagEval = 1u << 1;
inline constexpr std::size_t kHeaderBytes = 24;
inline constexpr std::uint32_t kMinDim = 4;
/// Allowed | |z| - 1 | on load.
inline constexpr double kZNormTolerance = 1e-2;

struct DatasetHeader {
  std::uint16_t version = kFormatVersion;
  std::uint32_t n = 0;
  std::uint32_t probe_count = 0;
  std::uint32_t record_count = 0;
  std::uint16_t flags = 0;
  std::uint32_t vocab_size = 0;

  bool has_unembed() const { return flags & kFlagUnembed; }
  bool has_eval() const { return flags & kFlagEval; }
};

struct ProbeOnDisk {
  std::string label;
  std::vector<float> w;
  float b = 0.0f;
  float accuracy = 0.0f;
  float f1 = 0.0f;
};

struct RecordOnDisk {
  std::uint64_t record_id = 0;
  std::uint32_t token1 = 0;
  std::uint32_t token2 = 0;
  float p1 = 0.0f;
  float p2 = 0.0f;
  std::vector<float> z, v1, v2, y_greedy, y_branch;
  std::vector<std::uint32_t> active;
  float cp_greedy = 0.0f;
  float cp_branch = 0.0f;
};

struct Dataset {
  DatasetHeader header;
  std::vector<ProbeOnDisk> probes;
  /// vocab_size x n, row-major; empty unless the unembedding flag is set.
  std::vector<float> unembed;
  std::vector<RecordOnDisk> records;
};

/// Bytes of `d`. Throws InvalidArgument when header counts, flags or vector
/// lengths disagree with the content.
std::vector<std::uint8_t> serialize(const Dataset& d);

/// Structural decoding only. Throws MalformedHeader, UnsupportedVersion,
/// Truncated or TrailingBytes.
Dataset parse(std::span<const std::uint8_t> bytes);

struct CheckResult {
  std::string name;
  ErrorCode code;
  bool passed = true;
  std::size_t failures = 0;
  /// Record id (record checks) or probe index (probe checks) of the first failure.
  std::optional<std::uint64_t> first_offender;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool ok() const;
  const CheckResult* first_failure() const;
  const CheckResult& check(const std::string& name) const;
};

/// Semantic checks on a decoded dataset.
ValidationReport check_dataset(const Dataset& d);

/// Reads and checks a file. I/O errors, bad headers and unknown versions
/// throw; truncation, trailing bytes and semantic problems are reported.
ValidationReport validate(const std::filesystem::path& path);

/// Reads, decodes and checks; throws the error code of the first failed check.
Dataset read_dataset(const std::filesystem::path& path);

/// Atomic write through a temporary file in the same directory.
void write_dataset(const Dataset& d, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

Vector to_vector(std::span<const float> v);
std::vector<float> to_floats(const Vector& v);

std::vector<Probe> load_probes(const Dataset& d);
std::shared_ptr<const Matrix> unembed_matrix(const Dataset& d);
BranchGeometry to_geometry(const RecordOnDisk& r, std::shared_ptr<const Matrix> unembed = nullptr);
StatePair to_state_pair(const RecordOnDisk& r);
/// Present when the dataset carries evaluations and both values are finite.
std::optional<Evaluation> evaluation(const Dataset& d, const RecordOnDisk& r);

}  // namespace blurgeom

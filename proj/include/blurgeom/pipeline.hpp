#pragma once

// End-to-end analysis of a branch-point dataset: per-record holonomy, q
// vectors, probe couplings, PCA structure, file and piece aggregates, and
// the CSV/SVG report bundle.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "blurgeom/ablation.hpp"
#include "blurgeom/coupling.hpp"
#include "blurgeom/dataset.hpp"
#include "blurgeom/holonomy.hpp"
#include "blurgeom/pca.hpp"

namespace blurgeom {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Stage { Holonomy, Couple, Pca, Full };
enum class CouplingAverage { AllProbes, MaxProbes };

struct PipelineConfig {
  HolonomyOptions holonomy;
  ClusterConfig clusters;
  /// Replaces H by a control operator when set.
  std::optional<AblationSpec> ablation;
  CouplingAverage average = CouplingAverage::AllProbes;
  double file_interval_mass = 0.68;
  unsigned threads = 1;
  Stage stage = Stage::Full;
  bool write_svg = true;
};

struct RecordRow {
  std::uint64_t record_id = 0;
  double p1 = 0.0, p2 = 0.0, charge = 0.0;
  double h_norm = 0.0;
  /// ||H - I||_F of the operator actually applied (the ablation when set).
  double operator_distance = 0.0;
  double clover_gap = 0.0;
  double exp_gap = 0.0;
  double orthogonality_defect = 0.0;
  double determinant = 1.0;
  Vector q_greedy, q_branch;
  std::vector<double> c_greedy, c_branch;
  MaxProbes max_greedy{}, max_branch{};
  ProbeMax top_greedy{}, top_branch{};
  double avg_greedy = 0.0, avg_branch = 0.0;
  Vector delta_q;
  double delta_y_norm = 0.0;
  std::optional<Evaluation> eval;
};

struct Reject {
  std::uint64_t record_id;
  std::string stage;
  ErrorCode code;
  std::string message;
};

struct Analysis {
  std::vector<RecordRow> rows;
  std::vector<Reject> rejects;
  std::size_t zero_q = 0;
  std::size_t record_count = 0;
  std::vector<Probe> probes;

  std::optional<PcaResult> pca;
  std::optional<ClusterSelection> clusters;
  /// For PCA point i: index into rows and the continuation it came from.
  std::vector<std::size_t> point_row;
  std::vector<Continuation> point_label;

  std::optional<std::array<FileRate, kFileCount>> left_ear_files, right_ear_files;
  std::optional<PieceSpectrum> spectrum;
  std::array<std::optional<SpearmanResult>, kSideCount> spearman;
  std::optional<CentipawnSummary> centipawn;
  double mean_coupling_greedy = 0.0;
  double mean_coupling_branch = 0.0;

  std::vector<std::pair<std::string, double>> timings;
};

/// Deterministic in the worker count. Per-record failures are quarantined
/// into `rejects`; records whose q vanishes are counted in `zero_q`.
Analysis analyze(const Dataset& d, const PipelineConfig& config);

struct ReportBundle {
  std::filesystem::path out_dir;
  std::vector<std::filesystem::path> files;
  Analysis analysis;
};

/// Writes the CSV tables, SVG plots and manifest.json into `out_dir`.
std::vector<std::filesystem::path> write_report(const Analysis& a, const PipelineConfig& config,
                                                const std::filesystem::path& out_dir,
                                                const std::string& dataset_label,
                                                const std::string& dataset_sha256);

/// Reads and validates the dataset, analyzes it and writes the report.
ReportBundle run_pipeline(const std::filesystem::path& dataset, const PipelineConfig& config,
                          const std::filesystem::path& out_dir);

std::string_view to_string(Stage s);
std::string_view to_string(ChargeMode m);
ChargeMode parse_charge_mode(std::string_view s);

}  // namespace blurgeom

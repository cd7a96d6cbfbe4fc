#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "elc/bias_optimizer.hpp"
#include "elc/dmd_optimizer.hpp"
#include "elc/optics.hpp"
#include "elc/sensitivity.hpp"

namespace elc {

/// Grid of stage-2 runs launched for every stage-1 survivor.
struct Stage2Grid {
  std::vector<Color> colors{Color::Blue, Color::Red};
  std::vector<int> heights{1, 12};
  std::vector<int> counts{2};
  int superpixel_width = 1;
  int index_span = 24;
  double power_min = 0.0;
  double power_max = 1.0;
  bool symmetric = true;
  std::size_t budget = 500;
  std::size_t initial_samples = 0;
  double refine_window = 0.005;   // 0 disables the power re-tuning step
  bool sign_variants = true;
  std::size_t max_survivors = 0;  // 0 keeps every survivor

  void validate() const;
};

struct PipelineConfig {
  LatticeConfig lattice;
  HubbardParams params = HubbardParams::nominal();
  TransferProblem problem;
  OpticsConfig blue = OpticsConfig::blue();
  OpticsConfig red = OpticsConfig::red();
  BiasOptimConfig stage1;
  Stage2Grid stage2;
  Thresholds thresholds;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::size_t trace_steps = kDefaultTraceSteps;

  /// Seconds per normalized time unit at the configured depth.
  [[nodiscard]] double seconds_per_unit() const;
  /// Normalized time corresponding to thresholds.max_time_ms.
  [[nodiscard]] double time_limit() const;
  [[nodiscard]] const OpticsConfig& optics(Color c) const { return c == Color::Red ? red : blue; }

  void validate() const;
};

struct ControllerRecord {
  std::string id;
  Color color = Color::Blue;
  std::size_t survivor = 0;      // index into ControllerDatabase::survivors
  unsigned sign_variant = 0;     // bit j flips the sign of free bias j
  int height = 1;
  int count = 2;
  std::uint64_t seed = 0;
  DMDSolution solution;
  std::optional<SensitivityRecord> sensitivity;
  bool accepted = false;
};

struct RunProvenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string started_utc;
  std::string finished_utc;
  std::string version;
};

struct ControllerDatabase {
  RunProvenance provenance;
  PipelineConfig config;
  std::size_t stage1_restarts = 0;
  std::size_t stage2_runs = 0;
  std::size_t duplicates = 0;
  std::vector<CandidateController> survivors;
  std::vector<ControllerRecord> records;
  std::vector<std::string> diagnostics;

  [[nodiscard]] std::size_t accepted_count() const;
};

/// FNV-1a 64-bit hash of the canonical JSON form, as 16 hex digits.
std::string config_hash(const PipelineConfig& config);

/// Stage-1 candidates meeting both thresholds (physical time via time_unit).
std::vector<CandidateController> stage1_survivors(const std::vector<CandidateController>& candidates,
                                                  const Thresholds& thresholds, double seconds_per_unit);

/// All sign patterns of a mirror-symmetric stage-1 vector rewritten in the
/// antisymmetric form a symmetric projection produces. Index = variant bitmask.
std::vector<BiasVector> sign_variants(const BiasVector& symmetric_biases);

/// Deterministic per-run seed derived from the pipeline seed and run index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

using ProgressFn = std::function<void(const std::string&)>;

/// Stage 1 -> survivors -> stage-2 grid -> validation -> sensitivity.
ControllerDatabase run_pipeline(const PipelineConfig& config, const ProgressFn& progress = {});

/// Stage-2 + validation for explicit targets; records come back in input order.
std::vector<ControllerRecord> run_stage2(const PipelineConfig& config,
                                         const std::vector<CandidateController>& survivors,
                                         const ProgressFn& progress = {});

/// Fills `sensitivity` for every accepted record.
void compute_sensitivities(ControllerDatabase& db, std::size_t threads);

/// Records with e < max_error and t < max_time_ms.
ControllerDatabase filter_controllers(const ControllerDatabase& db, const Thresholds& thresholds);

/// Rows: min_gap, T, e. Columns: r and rho against |s_x|, then against |s_p|.
struct CorrelationTable {
  static constexpr std::array<const char*, 3> kRows{"min_gap", "T", "e"};
  static constexpr std::array<const char*, 4> kColumns{"r_x", "rho_x", "r_p", "rho_p"};
  std::array<std::array<std::optional<double>, 4>, 3> values{};
  std::size_t samples = 0;
  std::vector<std::string> warnings;
};

struct ScatterPoint {
  std::string id;
  Color color = Color::Blue;
  double min_gap = 0.0;
  double error = 0.0;
  double time_ms = 0.0;
  double abs_s_x = 0.0;
  double abs_s_p = 0.0;
  double x_terms = 0.0;  // sum_j |xi_j dDelta_j/dx|; |s_x| far below it means exact cancellation
};

std::vector<ScatterPoint> scatter_points(const ControllerDatabase& db);
CorrelationTable correlation_table(const std::vector<ScatterPoint>& points);

struct ReportResult {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

/// Writes traces/, scatter_{x,p}.{csv,svg}, table1.csv and summary.json.
ReportResult emit_report(const ControllerDatabase& db, const std::filesystem::path& outdir);

std::string utc_timestamp();

}  // namespace elc

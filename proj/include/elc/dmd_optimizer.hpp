#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "elc/optics.hpp"
#include "elc/physical_model.hpp"
#include "elc/spin_dynamics.hpp"

namespace elc {

/// Stage-2 settings: find a superpixel pattern and power whose projected
/// potential reproduces a target bias vector.
struct DMDOptimConfig {
  BiasVector target;
  Color color = Color::Blue;
  int superpixel_width = 1;
  int height_min = 1;
  int height_max = 25;
  std::vector<int> counts{2, 4, 6};
  int index_span = 24;   // candidate centers lie in [-index_span/2, index_span/2]
  double power_min = 0.0;
  double power_max = 1.0;
  bool symmetric = true;
  std::size_t budget = 2000;          // true-objective evaluations per count, before the power polish
  std::size_t initial_samples = 0;    // 0 selects max(2 * dim + 2, budget / 10)
  std::uint64_t seed = 1;

  void validate() const;
};

/// Acceptance thresholds shared by both synthesis stages.
struct Thresholds {
  double max_error = 1e-2;
  double max_time_ms = 130.0;
};

struct DMDSolution {
  DMDPattern pattern;
  double power = 0.0;
  Color color = Color::Blue;
  BiasVector target;
  BiasVector achieved;
  double objective = 0.0;
  std::size_t evaluations = 0;
  // Filled by validate_solution().
  double e_min = 1.0;
  double t_min = 0.0;      // normalized time of the error minimum
  double t_min_ms = 0.0;
  bool accepted = false;
  bool singular = false;
};

/// One true-objective evaluation recorded by the surrogate search.
struct Evaluation {
  DMDPattern pattern;
  double power;
  double objective;
};

struct PatternSearchResult {
  DMDSolution solution;
  std::vector<Evaluation> audit;      // every true evaluation, in order
  std::size_t seed_samples = 0;       // leading entries of `audit` from the design
};

/// Objective value assigned when the wells cannot be located.
double extraction_penalty(const BiasVector& target);

/// ||Delta(pattern, power) - target||_2, or extraction_penalty() on failure.
double dmd_objective(const DMDPattern& pattern, double power, const BiasVector& target,
                     const BiasExtractor& extractor);
double dmd_objective(const DMDPattern& pattern, double power, const BiasVector& target,
                     const OpticsConfig& optics, const LatticeConfig& lattice, double depth,
                     std::size_t n_sites);

/// All mirror-symmetric (or unconstrained) index sets of `count` superpixels.
std::vector<std::vector<int>> enumerate_index_sets(int count, int index_span, int width,
                                                   bool symmetric);

/// Surrogate-assisted search for a single superpixel count.
PatternSearchResult search_pattern(const DMDOptimConfig& config, int count,
                                   const BiasExtractor& extractor);

/// Best-of over config.counts.
DMDSolution optimize_pattern(const DMDOptimConfig& config, const BiasExtractor& extractor);

/// Runs the fidelity trace of the achieved biases over [0, max_time] and
/// fills e_min / t_min / accepted / singular on a copy of `solution`.
DMDSolution validate_solution(const DMDSolution& solution, const TransferProblem& problem,
                              const HubbardParams& params, const Thresholds& thresholds,
                              double seconds_per_unit);

/// Validates the solution; if it is rejected, moves the power to the nearest
/// accepted value within +-window (steps of window/200, closest first). The
/// pattern is kept and `objective` is recomputed at the returned power.
DMDSolution refine_power(const DMDSolution& solution, const BiasExtractor& extractor,
                         const TransferProblem& problem, const HubbardParams& params,
                         const Thresholds& thresholds, double seconds_per_unit, double window,
                         double power_min = 0.0, double power_max = 1.0);

}  // namespace elc

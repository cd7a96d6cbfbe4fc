#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "elc/physical_model.hpp"
#include "elc/spin_dynamics.hpp"

namespace elc {

/// Stage-1 synthesis settings. Times are normalized (see time_unit()).
struct BiasOptimConfig {
  double t_max = 700.0;
  double delta_bound = 0.999;
  bool symmetric = true;
  std::size_t restarts = 100;
  std::uint64_t seed = 1;
  double gradient_tolerance = 1e-9;
  double step_tolerance = 1e-12;
  std::size_t max_iterations = 500;
  std::size_t threads = 1;

  void validate() const;
};

struct CandidateController {
  BiasVector biases;
  double transfer_time = 0.0;
  double error = 1.0;
  std::size_t restart = 0;
  std::size_t iterations = 0;
  bool converged = false;
  double projected_gradient = 0.0;
};

/// Projected-gradient norm below which a restart counts as converged.
inline constexpr double kConvergedGradient = 1e-6;

/// Number of free parameters of a mirror-symmetric bias vector on n sites.
std::size_t symmetric_parameter_count(std::size_t n_sites);

/// Mirror-symmetric bias vector Delta_j = Delta_{N-j} from its first half.
BiasVector symmetrize(std::span<const double> free, std::size_t n_sites);

/// First-half parameters of a bias vector (inverse of symmetrize on symmetric input).
std::vector<double> free_parameters(const BiasVector& biases);

/// Multi-start box-projected BFGS over (biases, T) minimizing the fidelity
/// error. Returns one candidate per restart, sorted by error, then T, then
/// max |Delta_j|, then restart id.
std::vector<CandidateController> optimize_biases(const BiasOptimConfig& config,
                                                 const TransferProblem& problem,
                                                 const HubbardParams& params);

/// Single restart from an explicit starting point (free biases, T).
CandidateController optimize_from(const BiasOptimConfig& config, const TransferProblem& problem,
                                  const HubbardParams& params, std::span<const double> free0,
                                  double t0, std::size_t restart_id = 0);

}  // namespace elc

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <cstddef>
#include <vector>

#include "elc/physical_model.hpp"

namespace elc {

using Complex = std::complex<double>;

/// S_j = I/2 + (E_{j,j+1} + E_{j+1,j}) - (E_{jj} + E_{j+1,j+1}).
/// `bond` is zero-based: bond j couples sites j and j+1, 0 <= j <= n - 2.
Eigen::MatrixXd structure_matrix(std::size_t bond, std::size_t n);

/// Single-excitation Heisenberg chain H = sum_j J_eff(Delta_j) S_j. The
/// eigendecomposition is computed once at construction; instances are
/// immutable and can be shared between threads.
class EffectiveHamiltonian {
 public:
  EffectiveHamiltonian(const BiasVector& biases, const HubbardParams& params);

  /// Assemble directly from couplings (used by oracles and tests).
  static EffectiveHamiltonian from_couplings(std::vector<double> couplings);

  [[nodiscard]] std::size_t dimension() const { return static_cast<std::size_t>(matrix_.rows()); }
  [[nodiscard]] const Eigen::MatrixXd& matrix() const { return matrix_; }
  [[nodiscard]] const std::vector<double>& couplings() const { return couplings_; }
  [[nodiscard]] const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  [[nodiscard]] const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  [[nodiscard]] double spectral_radius() const;

  /// U(T) = exp(-i T H), hbar = 1.
  [[nodiscard]] Eigen::MatrixXcd propagator(double t) const;

  /// <to| exp(-i T H) |from> without forming the full propagator.
  [[nodiscard]] Complex amplitude(std::size_t to, std::size_t from, double t) const;

 private:
  explicit EffectiveHamiltonian(std::vector<double> couplings);

  std::vector<double> couplings_;
  Eigen::MatrixXd matrix_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

/// Transfer of a single excitation between chain sites (zero-based).
struct TransferProblem {
  std::size_t chain_length = 5;
  std::size_t initial_site = 0;
  std::size_t target_site = 4;

  static TransferProblem end_to_end(std::size_t n) { return {n, 0, n - 1}; }
  void validate() const;
};

EffectiveHamiltonian hamiltonian(const BiasVector& biases, const HubbardParams& params);

Eigen::MatrixXcd propagate(const EffectiveHamiltonian& h, double t);

/// e = 1 - |<target| U(T) |initial>|^2, clamped to [0, 1].
double fidelity_error(const EffectiveHamiltonian& h, double t, const TransferProblem& problem);
double fidelity_error(const BiasVector& biases, double t, const TransferProblem& problem,
                      const HubbardParams& params);

struct FidelityTrace {
  std::vector<double> times;
  std::vector<double> errors;
  std::size_t grid_argmin = 0;
  double t_min = 0.0;  // refined location of the error minimum
  double e_min = 1.0;
};

inline constexpr std::size_t kDefaultTraceSteps = 2000;
inline constexpr double kGoldenTolerance = 1e-10;

/// Error sampled on n_steps uniform intervals of [0, t_max]; the grid
/// minimum is refined by golden-section search on its bracketing interval.
FidelityTrace fidelity_trace(const BiasVector& biases, const TransferProblem& problem,
                             const HubbardParams& params, double t_max,
                             std::size_t n_steps = kDefaultTraceSteps);
FidelityTrace fidelity_trace(const EffectiveHamiltonian& h, const TransferProblem& problem,
                             double t_max, std::size_t n_steps = kDefaultTraceSteps);

/// Golden-section minimization of f on [lo, hi]; returns {argmin, min}. The
/// tolerance is floored at a few ulps of the bracket.
template <typename F>
std::pair<double, double> golden_section(F&& f, double lo, double hi, double tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  // Never ask for an interval narrower than the floating-point spacing.
  const double floor = 8.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi));
  tol = std::max(tol, floor);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace elc

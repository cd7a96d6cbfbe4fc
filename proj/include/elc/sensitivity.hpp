#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "elc/dmd_optimizer.hpp"
#include "elc/spin_dynamics.hpp"

namespace elc {

/// A bias vector together with the transfer time it is evaluated at.
struct OperatingPoint {
  BiasVector biases;
  double time = 0.0;  // normalized units
};

/// K(S) = int_0^1 exp(-iTH(1-s)) S exp(-iTHs) ds, evaluated in H's eigenbasis
/// with divided differences of exp(-iT lambda).
Eigen::MatrixXcd frechet_derivative(const EffectiveHamiltonian& h, const Eigen::MatrixXd& s, double t);

/// xi_j = d e / d Delta_j at the operating point.
double bias_sensitivity(const OperatingPoint& point, std::size_t bond, const TransferProblem& problem,
                        const HubbardParams& params);
std::vector<double> bias_sensitivities(const OperatingPoint& point, const TransferProblem& problem,
                                       const HubbardParams& params);

/// Shape-preserving piecewise-cubic Hermite interpolant (Fritsch-Carlson
/// slopes, non-centered three-point end conditions).
class PchipInterpolant {
 public:
  PchipInterpolant(std::vector<double> x, std::vector<double> y);

  [[nodiscard]] double operator()(double x) const;
  [[nodiscard]] double derivative(double x) const;
  [[nodiscard]] const std::vector<double>& slopes() const { return d_; }

 private:
  [[nodiscard]] std::size_t interval(double x) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> d_;
};

/// Centered difference of f at x with steps delta and delta/2, combined by
/// Richardson extrapolation.
template <typename F>
double richardson_derivative(F&& f, double x, double delta) {
  const double d1 = (f(x + delta) - f(x - delta)) / (2.0 * delta);
  const double d2 = (f(x + 0.5 * delta) - f(x - 0.5 * delta)) / delta;
  return (4.0 * d2 - d1) / 3.0;
}

/// dDelta_j/dx for a rigid displacement x of the lattice relative to the
/// projection, per lattice spacing. Derived from the gradient of the
/// projected potential at the well bottoms.
std::vector<double> bias_drift_x(const DMDSolution& solution, const BiasExtractor& extractor);

/// dDelta_j/dp in 1/E_R from an interpolant of Delta over 21 powers
/// spanning p0 +- 0.1 (clipped to [0, 1]).
std::vector<double> bias_drift_power(const DMDSolution& solution, const BiasExtractor& extractor);

/// de/d(delta) = sum_j xi_j dDelta_j/d(delta).
double physical_sensitivity(std::span<const double> xi, std::span<const double> drift);

struct Correlation {
  double pearson = 0.0;
  double spearman = 0.0;
};

/// Ranks starting at 1; ties get the average of the ranks they span.
std::vector<double> fractional_ranks(std::span<const double> values);
double pearson(std::span<const double> xs, std::span<const double> ys);
Correlation correlations(std::span<const double> xs, std::span<const double> ys);

struct SensitivityRecord {
  std::vector<double> xi;
  std::vector<double> drift_x;   // 1/a
  std::vector<double> drift_p;   // 1/E_R
  double s_x = 0.0;              // 1/a
  double s_p = 0.0;              // 1/E_R
  double min_gap = 0.0;          // min_j ||Delta_j| - 1|
  double error = 0.0;
  double time = 0.0;             // normalized
};

/// Full robustness record of a validated stage-2 solution, evaluated at its
/// achieved biases and error-minimizing time.
SensitivityRecord analyze_solution(const DMDSolution& solution, const BiasExtractor& extractor,
                                   const TransferProblem& problem, const HubbardParams& params);

}  // namespace elc

#include "elc/spin_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "elc/errors.hpp"

namespace elc {

Eigen::MatrixXd structure_matrix(std::size_t bond, std::size_t n) {
  if (n < 2 || bond + 1 >= n) {
    throw DomainError("structure matrix bond " + std::to_string(bond) +
                      " out of range for chain length " + std::to_string(n));
  }
  Eigen::MatrixXd s = 0.5 * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                      static_cast<Eigen::Index>(n));
  const auto j = static_cast<Eigen::Index>(bond);
  s(j, j + 1) += 1.0;
  s(j + 1, j) += 1.0;
  s(j, j) -= 1.0;
  s(j + 1, j + 1) -= 1.0;
  return s;
}

EffectiveHamiltonian::EffectiveHamiltonian(const BiasVector& biases, const HubbardParams& params)
    : EffectiveHamiltonian([&] {
        std::vector<double> c;
        c.reserve(biases.size());
        for (double d : biases.values()) c.push_back(effective_coupling(params, d));
        return c;
      }()) {}

EffectiveHamiltonian EffectiveHamiltonian::from_couplings(std::vector<double> couplings) {
  return EffectiveHamiltonian(std::move(couplings));
}

EffectiveHamiltonian::EffectiveHamiltonian(std::vector<double> couplings)
    : couplings_(std::move(couplings)) {
  if (couplings_.empty()) throw DomainError("a chain needs at least one bond");
  const std::size_t n = couplings_.size() + 1;
  matrix_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < couplings_.size(); ++j) {
    matrix_ += couplings_[j] * structure_matrix(j, n);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix_);
  eigenvalues_ = solver.eigenvalues();
  eigenvectors_ = solver.eigenvectors();
}

double EffectiveHamiltonian::spectral_radius() const {
  return eigenvalues_.cwiseAbs().maxCoeff();
}

Eigen::MatrixXcd EffectiveHamiltonian::propagator(double t) const {
  const Eigen::Index n = eigenvalues_.size();
  Eigen::VectorXcd phases(n);
  for (Eigen::Index k = 0; k < n; ++k) phases(k) = std::polar(1.0, -eigenvalues_(k) * t);
  const Eigen::MatrixXcd v = eigenvectors_.cast<Complex>();
  return v * phases.asDiagonal() * v.transpose();
}

Complex EffectiveHamiltonian::amplitude(std::size_t to, std::size_t from, double t) const {
  Complex sum{0.0, 0.0};
  const auto a = static_cast<Eigen::Index>(to);
  const auto b = static_cast<Eigen::Index>(from);
  for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k) {
    sum += eigenvectors_(a, k) * eigenvectors_(b, k) * std::polar(1.0, -eigenvalues_(k) * t);
  }
  return sum;
}

void TransferProblem::validate() const {
  if (chain_length < 2) throw ValidationError("chain length must be at least 2");
  if (initial_site >= chain_length || target_site >= chain_length) {
    throw ValidationError("transfer endpoints must lie on the chain");
  }
  if (initial_site == target_site) throw ValidationError("initial and target sites coincide");
}

EffectiveHamiltonian hamiltonian(const BiasVector& biases, const HubbardParams& params) {
  return EffectiveHamiltonian(biases, params);
}

Eigen::MatrixXcd propagate(const EffectiveHamiltonian& h, double t) {
  if (t < 0.0) throw DomainError("propagation time must be non-negative");
  return h.propagator(t);
}

double fidelity_error(const EffectiveHamiltonian& h, double t, const TransferProblem& problem) {
  const double f = std::norm(h.amplitude(problem.target_site, problem.initial_site, t));
  return std::clamp(1.0 - f, 0.0, 1.0);
}

double fidelity_error(const BiasVector& biases, double t, const TransferProblem& problem,
                      const HubbardParams& params) {
  if (biases.chain_length() != problem.chain_length) {
    throw ValidationError("bias vector length does not match the chain");
  }
  return fidelity_error(EffectiveHamiltonian(biases, params), t, problem);
}

FidelityTrace fidelity_trace(const BiasVector& biases, const TransferProblem& problem,
                             const HubbardParams& params, double t_max, std::size_t n_steps) {
  if (biases.chain_length() != problem.chain_length) {
    throw ValidationError("bias vector length does not match the chain");
  }
  return fidelity_trace(EffectiveHamiltonian(biases, params), problem, t_max, n_steps);
}

FidelityTrace fidelity_trace(const EffectiveHamiltonian& h, const TransferProblem& problem,
                             double t_max, std::size_t n_steps) {
  if (n_steps < 2) throw DomainError("fidelity trace needs at least two steps");
  if (!(t_max > 0.0)) throw DomainError("fidelity trace needs t_max > 0");

  FidelityTrace trace;
  trace.times.resize(n_steps + 1);
  trace.errors.resize(n_steps + 1);
  const double dt = t_max / static_cast<double>(n_steps);
  for (std::size_t i = 0; i <= n_steps; ++i) {
    const double t = i == n_steps ? t_max : dt * static_cast<double>(i);
    trace.times[i] = t;
    trace.errors[i] = fidelity_error(h, t, problem);
  }
  const auto it = std::min_element(trace.errors.begin(), trace.errors.end());
  trace.grid_argmin = static_cast<std::size_t>(it - trace.errors.begin());
  trace.t_min = trace.times[trace.grid_argmin];
  trace.e_min = *it;

  const double lo = trace.times[trace.grid_argmin == 0 ? 0 : trace.grid_argmin - 1];
  const double hi = trace.times[std::min(trace.grid_argmin + 1, n_steps)];
  const auto [t_ref, e_ref] = golden_section(
      [&](double t) { return fidelity_error(h, t, problem); }, lo, hi, kGoldenTolerance);
  if (e_ref < trace.e_min) {
    trace.t_min = t_ref;
    trace.e_min = e_ref;
  }
  return trace;
}

}  // namespace elc

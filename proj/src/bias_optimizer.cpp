#include "elc/bias_optimizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "elc/errors.hpp"
#include "elc/parallel.hpp"

namespace elc {

namespace {

// Variables: free biases followed by T / t_max.
struct Problem {
  const BiasOptimConfig& config;
  const TransferProblem& transfer;
  const HubbardParams& params;
  std::size_t n_free;

  [[nodiscard]] BiasVector biases(const Eigen::VectorXd& z) const {
    std::span<const double> free(z.data(), n_free);
    if (config.symmetric) return symmetrize(free, transfer.chain_length);
    return BiasVector(std::vector<double>(free.begin(), free.end()));
  }

  [[nodiscard]] double value(const Eigen::VectorXd& z) const {
    return fidelity_error(biases(z), z(static_cast<Eigen::Index>(n_free)) * config.t_max, transfer,
                          params);
  }

  // Centered differences with step max(1e-7, 1e-7 |x|) in the unscaled variable.
  [[nodiscard]] Eigen::VectorXd gradient(const Eigen::VectorXd& z) const {
    Eigen::VectorXd g(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const bool is_time = i == static_cast<Eigen::Index>(n_free);
      const double scale = is_time ? config.t_max : 1.0;
      const double x = z(i) * scale;
      const double h = std::max(1e-7, 1e-7 * std::abs(x)) / scale;
      Eigen::VectorXd zp = z;
      Eigen::VectorXd zm = z;
      zp(i) += h;
      zm(i) -= h;
      g(i) = (value(zp) - value(zm)) / (zp(i) - zm(i));
    }
    return g;
  }
};

Eigen::VectorXd project(const Eigen::VectorXd& z, const Eigen::VectorXd& lo,
                        const Eigen::VectorXd& hi) {
  return z.cwiseMax(lo).cwiseMin(hi);
}

Eigen::VectorXd projected_gradient(const Eigen::VectorXd& z, const Eigen::VectorXd& g,
                                   const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if ((z(i) <= lo(i) && g(i) > 0.0) || (z(i) >= hi(i) && g(i) < 0.0)) pg(i) = 0.0;
  }
  return pg;
}

}  // namespace

void BiasOptimConfig::validate() const {
  if (!(delta_bound > 0.0 && delta_bound < 1.0)) throw ValidationError("delta_bound must lie in (0, 1)");
  if (!(t_max > 0.0)) throw ValidationError("t_max must be positive");
  if (restarts < 1) throw ValidationError("at least one restart is required");
  if (max_iterations < 1) throw ValidationError("max_iterations must be positive");
}

std::size_t symmetric_parameter_count(std::size_t n_sites) {
  if (n_sites < 2) throw ValidationError("chain needs at least two sites");
  return n_sites / 2;  // ceil((N - 1) / 2)
}

BiasVector symmetrize(std::span<const double> free, std::size_t n_sites) {
  if (free.size() != symmetric_parameter_count(n_sites)) {
    throw ValidationError("symmetrize: expected " + std::to_string(symmetric_parameter_count(n_sites)) +
                          " free parameters, got " + std::to_string(free.size()));
  }
  const std::size_t m = n_sites - 1;
  std::vector<double> out(m);
  for (std::size_t j = 0; j < m; ++j) out[j] = free[std::min(j, m - 1 - j)];
  return BiasVector(std::move(out));
}

std::vector<double> free_parameters(const BiasVector& biases) {
  const auto& v = biases.values();
  return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(symmetric_parameter_count(v.size() + 1))};
}

CandidateController optimize_from(const BiasOptimConfig& config, const TransferProblem& problem,
                                  const HubbardParams& params, std::span<const double> free0,
                                  double t0, std::size_t restart_id) {
  const std::size_t n_free =
      config.symmetric ? symmetric_parameter_count(problem.chain_length) : problem.chain_length - 1;
  if (free0.size() != n_free) throw ValidationError("starting point has the wrong dimension");
  const Problem prob{config, problem, params, n_free};
  const auto dim = static_cast<Eigen::Index>(n_free + 1);

  Eigen::VectorXd lo = Eigen::VectorXd::Constant(dim, -config.delta_bound);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(dim, config.delta_bound);
  lo(dim - 1) = 0.0;
  hi(dim - 1) = 1.0;

  Eigen::VectorXd z(dim);
  for (std::size_t i = 0; i < n_free; ++i) z(static_cast<Eigen::Index>(i)) = free0[i];
  z(dim - 1) = t0 / config.t_max;
  z = project(z, lo, hi);

  double f = prob.value(z);
  Eigen::VectorXd g = prob.gradient(z);
  Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(dim, dim);
  bool fresh = true;
  std::size_t iter = 0;
  Eigen::VectorXd pg = projected_gradient(z, g, lo, hi);

  for (; iter < config.max_iterations; ++iter) {
    if (pg.norm() <= config.gradient_tolerance) break;

    // Quasi-Newton step restricted to variables not pinned at a bound.
    Eigen::VectorXd direction = Eigen::VectorXd::Zero(dim);
    std::vector<Eigen::Index> free_idx;
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (pg(i) != 0.0 || (z(i) > lo(i) && z(i) < hi(i))) free_idx.push_back(i);
    }
    for (Eigen::Index a : free_idx) {
      for (Eigen::Index b : free_idx) direction(a) -= inv_hessian(a, b) * g(b);
    }
    if (direction.dot(g) >= 0.0) {
      inv_hessian.setIdentity();
      direction = -pg;
      fresh = true;
    }
    double alpha = fresh ? std::min(1.0, 0.05 / direction.cwiseAbs().maxCoeff()) : 1.0;

    Eigen::VectorXd z_new = z;
    double f_new = f;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      z_new = project(z + alpha * direction, lo, hi);
      f_new = prob.value(z_new);
      if (f_new <= f + 1e-4 * g.dot(z_new - z)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    const Eigen::VectorXd s = z_new - z;
    if (!accepted || s.norm() < config.step_tolerance) {
      if (!fresh) {
        // Retry once along the projected steepest descent before giving up.
        inv_hessian.setIdentity();
        fresh = true;
        continue;
      }
      break;
    }

    const Eigen::VectorXd g_new = prob.gradient(z_new);
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      if (fresh) inv_hessian *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim, dim);
      inv_hessian = (eye - rho * s * y.transpose()) * inv_hessian * (eye - rho * y * s.transpose()) +
                    rho * s * s.transpose();
      fresh = false;
    }
    z = z_new;
    f = f_new;
    g = g_new;
    pg = projected_gradient(z, g, lo, hi);
  }

  CandidateController c;
  c.biases = prob.biases(z);
  c.transfer_time = z(dim - 1) * config.t_max;
  c.error = fidelity_error(c.biases, c.transfer_time, problem, params);
  c.restart = restart_id;
  c.iterations = iter;
  // Gradient in unscaled variables for the convergence test.
  Eigen::VectorXd pg_unscaled = pg;
  pg_unscaled(dim - 1) /= config.t_max;
  c.projected_gradient = pg_unscaled.norm();
  c.converged = c.projected_gradient <= kConvergedGradient;
  return c;
}

std::vector<CandidateController> optimize_biases(const BiasOptimConfig& config,
                                                 const TransferProblem& problem,
                                                 const HubbardParams& params) {
  config.validate();
  problem.validate();
  const std::size_t n_free =
      config.symmetric ? symmetric_parameter_count(problem.chain_length) : problem.chain_length - 1;
  const double max_enhancement = 1.0 / (1.0 - config.delta_bound * config.delta_bound);

  std::vector<CandidateController> out(config.restarts);
  parallel_for(config.restarts, config.threads, [&](std::size_t r) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffU),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    // Start uniformly in coupling enhancement 1/(1 - Delta^2), random sign.
    std::uniform_real_distribution<double> enhancement(1.0, max_enhancement);
    std::bernoulli_distribution sign(0.5);
    std::uniform_real_distribution<double> time(0.2 * config.t_max, config.t_max);
    std::vector<double> free0(n_free);
    for (auto& v : free0) {
      const double mag = std::min(std::sqrt(1.0 - 1.0 / enhancement(rng)), config.delta_bound);
      v = sign(rng) ? mag : -mag;
    }
    const double t0 = time(rng);
    out[r] = optimize_from(config, problem, params, free0, t0, r);
  });

  std::sort(out.begin(), out.end(), [](const CandidateController& a, const CandidateController& b) {
    if (a.error != b.error) return a.error < b.error;
    if (a.transfer_time != b.transfer_time) return a.transfer_time < b.transfer_time;
    if (a.biases.max_abs() != b.biases.max_abs()) return a.biases.max_abs() < b.biases.max_abs();
    return a.restart < b.restart;
  });
  return out;
}

}  // namespace elc

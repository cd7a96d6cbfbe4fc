#include "elc/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "elc/errors.hpp"

namespace elc {

namespace {

// sin(x)/x with a series near zero.
double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// MATLAB-style one-sided three-point end slope.
double end_slope(double h0, double h1, double del0, double del1) {
  double d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
  if (std::signbit(d) != std::signbit(del0) || d == 0.0) {
    d = 0.0;
  } else if (std::signbit(del0) != std::signbit(del1) && std::abs(d) > std::abs(3.0 * del0)) {
    d = 3.0 * del0;
  }
  return d;
}

constexpr double kFineSampling = 16.0;

}  // namespace

Eigen::MatrixXcd frechet_derivative(const EffectiveHamiltonian& h, const Eigen::MatrixXd& s, double t) {
  const auto n = static_cast<Eigen::Index>(h.dimension());
  if (s.rows() != n || s.cols() != n) throw ValidationError("structure matrix dimension mismatch");
  const Eigen::MatrixXd& v = h.eigenvectors();
  const Eigen::VectorXd& lam = h.eigenvalues();
  const double scale = std::max(1.0, h.spectral_radius());
  const Eigen::MatrixXd st = v.transpose() * s * v;
  Eigen::MatrixXcd k(n, n);
  for (Eigen::Index m = 0; m < n; ++m) {
    for (Eigen::Index q = 0; q < n; ++q) {
      const double diff = lam(m) - lam(q);
      const double mean = 0.5 * (lam(m) + lam(q));
      const Complex phase = std::exp(Complex(0.0, -mean * t));
      const double weight = std::abs(diff) < 1e-12 * scale ? 1.0 : sinc(0.5 * diff * t);
      k(m, q) = st(m, q) * weight * phase;
    }
  }
  return v.cast<Complex>() * k * v.transpose().cast<Complex>();
}

double bias_sensitivity(const OperatingPoint& point, std::size_t bond, const TransferProblem& problem,
                        const HubbardParams& params) {
  problem.validate();
  if (point.biases.chain_length() != problem.chain_length) {
    throw ValidationError("bias vector does not match the chain length");
  }
  if (bond >= point.biases.size()) throw ValidationError("bond index out of range");
  const double dj = effective_coupling_derivative(params, point.biases[bond]);
  if (dj == 0.0) return 0.0;
  const EffectiveHamiltonian h(point.biases, params);
  const Eigen::MatrixXcd k = frechet_derivative(h, structure_matrix(bond, problem.chain_length), point.time);
  const auto f = static_cast<Eigen::Index>(problem.target_site);
  const auto i = static_cast<Eigen::Index>(problem.initial_site);
  const Complex amp = h.amplitude(problem.target_site, problem.initial_site, point.time);
  return -2.0 * point.time * dj * std::imag(k(f, i) * std::conj(amp));
}

std::vector<double> bias_sensitivities(const OperatingPoint& point, const TransferProblem& problem,
                                       const HubbardParams& params) {
  problem.validate();
  if (point.biases.chain_length() != problem.chain_length) {
    throw ValidationError("bias vector does not match the chain length");
  }
  const EffectiveHamiltonian h(point.biases, params);
  const Complex amp = h.amplitude(problem.target_site, problem.initial_site, point.time);
  const auto f = static_cast<Eigen::Index>(problem.target_site);
  const auto i = static_cast<Eigen::Index>(problem.initial_site);
  std::vector<double> xi(point.biases.size());
  for (std::size_t j = 0; j < xi.size(); ++j) {
    const double dj = effective_coupling_derivative(params, point.biases[j]);
    if (dj == 0.0) continue;
    const Eigen::MatrixXcd k = frechet_derivative(h, structure_matrix(j, problem.chain_length), point.time);
    xi[j] = -2.0 * point.time * dj * std::imag(k(f, i) * std::conj(amp));
  }
  return xi;
}

PchipInterpolant::PchipInterpolant(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw ValidationError("pchip needs at least two matching samples");
  for (std::size_t k = 1; k < n; ++k) {
    if (!(x_[k] > x_[k - 1])) throw ValidationError("pchip abscissae must be strictly increasing");
  }
  std::vector<double> h(n - 1);
  std::vector<double> del(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x_[k + 1] - x_[k];
    del[k] = (y_[k + 1] - y_[k]) / h[k];
  }
  d_.assign(n, 0.0);
  if (n == 2) {
    d_[0] = d_[1] = del[0];
    return;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (del[k - 1] * del[k] > 0.0) {
      const double w1 = 2.0 * h[k] + h[k - 1];
      const double w2 = h[k] + 2.0 * h[k - 1];
      d_[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
    }
  }
  d_[0] = end_slope(h[0], h[1], del[0], del[1]);
  d_[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
}

std::size_t PchipInterpolant::interval(double x) const {
  const auto it = std::upper_bound(x_.begin() + 1, x_.end() - 1, x);
  return static_cast<std::size_t>(it - x_.begin()) - 1;
}

double PchipInterpolant::operator()(double x) const {
  const std::size_t k = interval(x);
  const double h = x_[k + 1] - x_[k];
  const double t = (x - x_[k]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[k] + (t3 - 2 * t2 + t) * h * d_[k] + (-2 * t3 + 3 * t2) * y_[k + 1] +
         (t3 - t2) * h * d_[k + 1];
}

double PchipInterpolant::derivative(double x) const {
  const std::size_t k = interval(x);
  const double h = x_[k + 1] - x_[k];
  const double t = (x - x_[k]) / h;
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * y_[k] + (-6 * t2 + 6 * t) * y_[k + 1]) / h + (3 * t2 - 4 * t + 1) * d_[k] +
         (3 * t2 - 2 * t) * d_[k + 1];
}

std::vector<double> bias_drift_x(const DMDSolution& solution, const BiasExtractor& extractor) {
  const auto ex = extractor.extract(solution.pattern, solution.power);
  // The projected profile is resampled on a local stencil around each well
  // bottom; the grid-step interpolant alone is only good to ~1e-3.
  constexpr int kHalfStencil = 8;
  const double fine = extractor.step() / kFineSampling;
  std::vector<double> grad(ex.minima.size());
  for (std::size_t j = 0; j < grad.size(); ++j) {
    std::vector<double> xs;
    std::vector<double> vs;
    for (int k = -kHalfStencil; k <= kHalfStencil; ++k) {
      xs.push_back(ex.minima[j] + k * fine);
      vs.push_back(extractor.model().potential_at(solution.pattern, solution.power, xs.back()));
    }
    const PchipInterpolant v(std::move(xs), std::move(vs));
    grad[j] = richardson_derivative([&](double x) { return v(x); }, ex.minima[j], 0.5 * fine);
  }
  // Moving the lattice by +x samples the projection at x_j + x.
  const double scale = extractor.lattice().spacing() / extractor.bare().U;
  std::vector<double> out(grad.size() - 1);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = (grad[j + 1] - grad[j]) * scale;
  return out;
}

std::vector<double> bias_drift_power(const DMDSolution& solution, const BiasExtractor& extractor) {
  constexpr int kSamples = 21;
  const double p0 = solution.power;
  double half = 0.1;
  for (int attempt = 0; attempt < 2; ++attempt, half *= 0.5) {
    const double lo = std::max(0.0, p0 - half);
    const double hi = std::min(1.0, p0 + half);
    std::vector<double> ps(kSamples);
    std::vector<std::vector<double>> deltas;
    try {
      for (int i = 0; i < kSamples; ++i) {
        ps[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (kSamples - 1);
        deltas.push_back(extractor.extract(solution.pattern, ps[static_cast<std::size_t>(i)]).biases.values());
      }
    } catch (const ExtractionError&) {
      if (attempt == 1) throw;
      continue;
    }
    std::vector<double> out(deltas.front().size());
    for (std::size_t j = 0; j < out.size(); ++j) {
      std::vector<double> ys(kSamples);
      for (int i = 0; i < kSamples; ++i) ys[static_cast<std::size_t>(i)] = deltas[static_cast<std::size_t>(i)][j];
      out[j] = PchipInterpolant(ps, ys).derivative(p0);
    }
    return out;
  }
  throw ExtractionError("power sweep failed");
}

double physical_sensitivity(std::span<const double> xi, std::span<const double> drift) {
  if (xi.size() != drift.size()) throw ValidationError("sensitivity and drift lengths differ");
  return std::inner_product(xi.begin(), xi.end(), drift.begin(), 0.0);
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ValidationError("correlation inputs differ in length");
  if (xs.size() < 3) throw ValidationError("correlation needs at least three samples");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("correlation undefined for zero variance");
  return sxy / std::sqrt(sxx * syy);
}

Correlation correlations(std::span<const double> xs, std::span<const double> ys) {
  const double r = pearson(xs, ys);
  const auto rx = fractional_ranks(xs);
  const auto ry = fractional_ranks(ys);
  return {r, pearson(rx, ry)};
}

SensitivityRecord analyze_solution(const DMDSolution& solution, const BiasExtractor& extractor,
                                   const TransferProblem& problem, const HubbardParams& params) {
  if (!solution.achieved.is_valid()) throw SingularityError("solution biases are singular");
  SensitivityRecord rec;
  rec.xi = bias_sensitivities({solution.achieved, solution.t_min}, problem, params);
  rec.drift_x = bias_drift_x(solution, extractor);
  rec.drift_p = bias_drift_power(solution, extractor);
  rec.s_x = physical_sensitivity(rec.xi, rec.drift_x);
  rec.s_p = physical_sensitivity(rec.xi, rec.drift_p);
  rec.min_gap = solution.achieved.singularity_gap();
  rec.error = solution.e_min;
  rec.time = solution.t_min;
  return rec;
}

}  // namespace elc

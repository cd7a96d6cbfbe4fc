#include "elc/physical_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "elc/errors.hpp"

namespace elc {

namespace {

constexpr double kNominalAlpha = 0.01;

void require_positive_depth(double depth) {
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw DomainError("lattice depth must be positive, got " + std::to_string(depth));
  }
}

}  // namespace

double LatticeConfig::wavenumber() const { return 2.0 * constants::pi / wavelength; }

double LatticeConfig::recoil_energy() const {
  const double k = wavenumber();
  return constants::hbar * constants::hbar * k * k / (2.0 * atom_mass);
}

double LatticeConfig::spacing() const { return wavelength / 2.0; }

void LatticeConfig::validate() const {
  if (!(wavelength > 0.0)) throw ValidationError("lattice wavelength must be positive");
  if (!(depth > 0.0)) throw ValidationError("lattice depth must be positive");
  if (!(atom_mass > 0.0)) throw ValidationError("atom mass must be positive");
  if (!(scattering_length > 0.0)) throw ValidationError("scattering length must be positive");
  if (!std::isfinite(phase)) throw ValidationError("lattice phase must be finite");
}

BiasVector::BiasVector(std::vector<double> values) : values_(std::move(values)) {}

bool BiasVector::is_valid() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double d) { return std::isfinite(d) && std::abs(d) < 1.0; });
}

double BiasVector::singularity_gap() const {
  double gap = std::numeric_limits<double>::infinity();
  for (double d : values_) gap = std::min(gap, std::abs(std::abs(d) - 1.0));
  return gap;
}

double BiasVector::max_abs() const {
  double m = 0.0;
  for (double d : values_) m = std::max(m, std::abs(d));
  return m;
}

HubbardParams bare_couplings(double depth, const LatticeConfig& lattice) {
  require_positive_depth(depth);
  const double pref = std::pow(depth, 0.75) / std::sqrt(constants::pi);
  const double J = 4.0 * pref * std::exp(-2.0 * std::sqrt(depth));
  const double U = 2.0 * std::sqrt(2.0) * pref * lattice.wavenumber() * lattice.scattering_length;
  return {J, U};
}

double effective_coupling(const HubbardParams& params, double delta) {
  const double denom = 1.0 - delta * delta;
  if (!(std::abs(delta) < 1.0)) {
    throw SingularityError("superexchange coupling singular at |delta| = " +
                           std::to_string(std::abs(delta)));
  }
  return 2.0 * params.J * params.J / params.U / denom;
}

double effective_coupling_derivative(const HubbardParams& params, double delta) {
  if (!(std::abs(delta) < 1.0)) {
    throw SingularityError("superexchange coupling singular at |delta| = " +
                           std::to_string(std::abs(delta)));
  }
  const double denom = 1.0 - delta * delta;
  return 4.0 * params.J * params.J / params.U * delta / (denom * denom);
}

double time_unit(double depth, const LatticeConfig& lattice) {
  const HubbardParams bare = bare_couplings(depth, lattice);
  const double alpha = bare.alpha();
  const double u_joules = bare.U * lattice.recoil_energy();
  return constants::hbar * kNominalAlpha * kNominalAlpha / (u_joules * alpha * alpha);
}

double double_well_gap_ratio(double J, double U, double delta) {
  if (!(U > 0.0) || !(J > 0.0)) throw DomainError("double well needs J > 0 and U > 0");
  if (J / U > 0.02) throw DomainError("double well oracle requires J/U <= 0.02");
  if (!(std::abs(delta) < U)) throw DomainError("double well oracle requires |delta| < U");

  // Ground pair at 0 (common offset U dropped), doubly occupied states at U -/+ delta.
  auto splitting = [J, U](double bias) {
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    h(2, 2) = U - bias;
    h(3, 3) = U + bias;
    for (int g : {0, 1}) {
      for (int e : {2, 3}) {
        h(g, e) = -J;
        h(e, g) = -J;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(h, Eigen::EigenvaluesOnly);
    const auto& w = solver.eigenvalues();
    return w(1) - w(0);
  };
  return splitting(delta) / splitting(0.0);
}

}  // namespace elc

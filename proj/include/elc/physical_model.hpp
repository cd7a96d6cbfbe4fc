#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace elc {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double bohr_radius = 5.29e-11;      // m
inline constexpr double rb87_mass = 1.4432e-25;      // kg
inline constexpr double pi = 3.14159265358979323846;
}  // namespace constants

/// Retro-reflected 1-D lattice V(x) = depth * E_R * cos(2 k x + phase).
struct LatticeConfig {
  double wavelength = 1064e-9;                          // m
  double depth = 18.0;                                  // zeta, units of E_R
  double phase = constants::pi;                         // rad; pi puts a minimum at x = 0
  double atom_mass = constants::rb87_mass;              // kg
  double scattering_length = 95.0 * constants::bohr_radius;  // m

  [[nodiscard]] double wavenumber() const;      // k = 2 pi / lambda
  [[nodiscard]] double recoil_energy() const;   // J
  [[nodiscard]] double spacing() const;         // d = lambda / 2

  /// Throws ValidationError on non-physical fields.
  void validate() const;
};

/// Bare Hubbard parameters. Energies are in whatever unit the producer
/// states; bare_couplings() returns units of E_R, while the dynamics use the
/// normalized nominal values J = 0.01, U = 1.
struct HubbardParams {
  double J = 0.01;
  double U = 1.0;

  [[nodiscard]] double alpha() const { return J / U; }

  /// Normalized parameters used by the dynamics (time unit from time_unit()).
  static HubbardParams nominal() { return {0.01, 1.0}; }
};

/// Normalized site-to-site biases Delta_j = (eps_{j+1} - eps_j) / U.
class BiasVector {
 public:
  BiasVector() = default;
  explicit BiasVector(std::vector<double> values);

  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] std::size_t chain_length() const { return values_.size() + 1; }
  [[nodiscard]] double operator[](std::size_t j) const { return values_[j]; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  [[nodiscard]] std::span<const double> view() const { return values_; }

  /// True when every |Delta_j| < 1.
  [[nodiscard]] bool is_valid() const;
  /// min_j | |Delta_j| - 1 |, the distance to the coupling singularity.
  [[nodiscard]] double singularity_gap() const;
  [[nodiscard]] double max_abs() const;

  bool operator==(const BiasVector&) const = default;

 private:
  std::vector<double> values_;
};

/// Harmonic-approximation tunneling J and on-site U, in units of E_R.
HubbardParams bare_couplings(double depth, const LatticeConfig& lattice);

/// Superexchange coupling J_eff = (2 J^2 / U) / (1 - delta^2), delta in units of U.
double effective_coupling(const HubbardParams& params, double delta);

/// d J_eff / d delta = (2 J^2 / U) * 2 delta / (1 - delta^2)^2.
double effective_coupling_derivative(const HubbardParams& params, double delta);

/// Seconds per normalized time unit, tau = hbar alpha0^2 / (U alpha^2) with
/// alpha0 = 0.01 and U converted to joules.
double time_unit(double depth, const LatticeConfig& lattice);

/// Exact splitting ratio gap(delta) / gap(0) of the biased two-atom double
/// well in the basis {|alpha>, |beta>, |gamma_L>, |gamma_R>}. J, U and delta
/// share one energy unit; requires J/U <= 0.02 and |delta| < U.
double double_well_gap_ratio(double J, double U, double delta);

}  // namespace elc

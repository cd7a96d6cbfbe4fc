#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "elc/physical_model.hpp"

namespace elc {

enum class Color { Red, Blue };

std::string to_string(Color c);
Color color_from_string(const std::string& s);

/// DMD -> objective -> atom-plane projection system.
struct OpticsConfig {
  double numerical_aperture = 0.68;
  double wavelength = 460e-9;       // projection light, m
  double color_sign = +1.0;         // +1 repulsive (blue), -1 attractive (red)
  double pixel_pitch = 80e-9;       // effective DMD pixel size at the atom plane, m
  double grid_step = 0.0;           // m; 0 selects lattice spacing / 64
  double focal_length = 0.02;       // m
  double fresnel_number = 100.0;
  double power = 0.0;               // peak potential of one isolated superpixel, units of E_R

  static OpticsConfig red();
  static OpticsConfig blue();
  static OpticsConfig for_color(Color c);

  [[nodiscard]] Color color() const { return color_sign < 0.0 ? Color::Red : Color::Blue; }
  /// Radius of the first dark ring of the Airy pattern, 3.8317 lambda / (2 pi NA).
  [[nodiscard]] double first_zero_radius() const;
  [[nodiscard]] double resolved_grid_step(const LatticeConfig& lattice) const;

  void validate() const;
};

/// Zero of J1 used for the Airy first dark ring.
inline constexpr double kBesselJ1FirstZero = 3.8317059702075123;

/// Coherent PSF field 2 E0 exp(i phi(nu)) J1(nu)/nu, nu = 2 pi r NA / lambda.
std::complex<double> psf_field(const OpticsConfig& optics, double r, double e0 = 1.0);
/// |psf_field|^2 = I0 [2 J1(nu)/nu]^2.
double psf_intensity(const OpticsConfig& optics, double r, double i0 = 1.0);

/// Peak-intensity reduction under defocus z: [sin(xi/4)/(xi/4)]^2, xi = pi z NA^2 / (2 lambda).
double defocus_factor(double z, const OpticsConfig& optics);

/// Binary DMD pattern made of identical superpixels placed along the chain axis.
/// Indices are superpixel-center x positions in units of the atom-plane pixel
/// pitch, measured from the array center.
struct DMDPattern {
  int width = 1;
  int height = 1;
  std::vector<int> indices;
  bool symmetric = true;

  [[nodiscard]] std::size_t count() const { return indices.size(); }
  /// Throws ValidationError on bad sizes, duplicates, overlaps, out-of-range
  /// indices, or a broken mirror symmetry.
  void validate(int max_abs_index = 1 << 16) const;

  bool operator==(const DMDPattern&) const = default;
};

struct PixelCoordinate {
  double x;
  double y;
};

/// Atom-plane coordinates (m) of every "on" pixel.
std::vector<PixelCoordinate> expand_pattern(const DMDPattern& pattern, const OpticsConfig& optics);

enum class Provenance { LatticeOnly, ProjectionOnly, Total };

struct PotentialProfile {
  std::vector<double> x;       // m, uniform step
  std::vector<double> values;  // units of E_R
  double step = 0.0;
  Provenance provenance = Provenance::Total;

  [[nodiscard]] std::size_t size() const { return x.size(); }
};

/// Grid points k * step covering the chain's N lattice periods plus `margin` on both sides.
std::vector<double> chain_grid(const LatticeConfig& lattice, std::size_t n_sites, double step,
                               double margin);

/// Nominal lattice minima of the N sites nearest the DMD-array center.
std::vector<double> chain_sites(const LatticeConfig& lattice, std::size_t n_sites);

/// Coherent projection model for one optics configuration on a fixed grid.
/// Superpixel fields are cached; the cache is internally synchronized, so a
/// model can be shared across threads.
class ProjectionModel {
 public:
  ProjectionModel(OpticsConfig optics, std::vector<double> x_grid, double shift = 0.0);

  [[nodiscard]] const OpticsConfig& optics() const { return optics_; }
  [[nodiscard]] const std::vector<double>& grid() const { return grid_; }
  [[nodiscard]] double shift() const { return shift_; }

  /// Potential at the grid for `pattern` at `power` (color sign applied).
  [[nodiscard]] PotentialProfile project(const DMDPattern& pattern, double power) const;

  /// Projected potential at arbitrary points (same normalization, no cache).
  [[nodiscard]] double potential_at(const DMDPattern& pattern, double power, double x) const;

  /// Peak intensity of an isolated superpixel of the given size.
  [[nodiscard]] double single_superpixel_peak(int width, int height) const;

 private:
  using Key = std::tuple<int, int, int>;  // index, width, height
  const std::vector<std::complex<double>>& superpixel_field(int index, int width, int height) const;
  [[nodiscard]] std::complex<double> superpixel_field_at(int index, int width, int height,
                                                         double x) const;

  struct Cache {
    std::mutex mutex;
    std::map<Key, std::unique_ptr<std::vector<std::complex<double>>>> fields;
    std::map<std::pair<int, int>, double> peaks;
  };

  OpticsConfig optics_;
  std::vector<double> grid_;
  double shift_;
  std::shared_ptr<Cache> cache_;
};

/// I = |E_PSF (*) M_DMD|^2 along the chain line, scaled to optics.power and signed.
/// Throws ValidationError if the grid lacks a 3-PSF-radius margin around the chain.
PotentialProfile project_intensity(const DMDPattern& pattern, const OpticsConfig& optics,
                                   const std::vector<double>& x_grid,
                                   const LatticeConfig& lattice, std::size_t n_sites);

/// Lattice depth * cos(2 k x + phase) plus the projection, units of E_R.
PotentialProfile total_potential(const LatticeConfig& lattice, double depth,
                                 const PotentialProfile& projection);

struct BiasExtraction {
  BiasVector biases;
  std::vector<double> minima;    // refined positions, m
  std::vector<double> energies;  // refined well bottoms, E_R
  bool valid = false;            // every |Delta_j| < 1
};

/// Locates the well bottom in each of the chain's N lattice periods (grid
/// minimum + three-point parabolic refinement) and returns
/// Delta_j = (eps_{j+1} - eps_j) / U. Throws ExtractionError if a well is gone.
BiasExtraction extract_biases(const PotentialProfile& total, const LatticeConfig& lattice,
                              double depth, std::size_t n_sites, const HubbardParams& bare);

/// Lattice + optics + chain bundled for repeated pattern evaluation.
class BiasExtractor {
 public:
  BiasExtractor(LatticeConfig lattice, OpticsConfig optics, std::size_t n_sites,
                double shift = 0.0);

  [[nodiscard]] const LatticeConfig& lattice() const { return lattice_; }
  [[nodiscard]] const OpticsConfig& optics() const { return model_.optics(); }
  [[nodiscard]] std::size_t n_sites() const { return n_sites_; }
  [[nodiscard]] const HubbardParams& bare() const { return bare_; }
  [[nodiscard]] const std::vector<double>& grid() const { return model_.grid(); }
  [[nodiscard]] const ProjectionModel& model() const { return model_; }
  [[nodiscard]] double step() const { return step_; }

  [[nodiscard]] PotentialProfile projected(const DMDPattern& pattern, double power) const;
  [[nodiscard]] PotentialProfile total(const DMDPattern& pattern, double power) const;
  [[nodiscard]] BiasExtraction extract(const DMDPattern& pattern, double power) const;

  /// Same setup with the projection displaced rigidly by `dx` (m).
  [[nodiscard]] BiasExtractor shifted(double dx) const;

 private:
  LatticeConfig lattice_;
  std::size_t n_sites_;
  HubbardParams bare_;
  double step_;
  ProjectionModel model_;
};

}  // namespace elc

#include "elc/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "elc/errors.hpp"

namespace elc {

namespace {

constexpr double kPi = constants::pi;
constexpr double kMarginRadii = 3.0;

// J1(nu)/nu with its nu -> 0 limit.
double bessel_ratio(double nu) {
  if (nu < 1e-8) return 0.5 - nu * nu / 16.0;
  return std::cyl_bessel_j(1.0, nu) / nu;
}

}  // namespace

std::string to_string(Color c) { return c == Color::Red ? "red" : "blue"; }

Color color_from_string(const std::string& s) {
  if (s == "red") return Color::Red;
  if (s == "blue") return Color::Blue;
  throw ValidationError("unknown projection color '" + s + "'");
}

OpticsConfig OpticsConfig::red() {
  OpticsConfig o;
  o.wavelength = 940e-9;
  o.color_sign = -1.0;
  return o;
}

OpticsConfig OpticsConfig::blue() {
  OpticsConfig o;
  o.wavelength = 460e-9;
  o.color_sign = +1.0;
  return o;
}

OpticsConfig OpticsConfig::for_color(Color c) { return c == Color::Red ? red() : blue(); }

double OpticsConfig::first_zero_radius() const {
  return kBesselJ1FirstZero * wavelength / (2.0 * kPi * numerical_aperture);
}

double OpticsConfig::resolved_grid_step(const LatticeConfig& lattice) const {
  return grid_step > 0.0 ? grid_step : lattice.spacing() / 64.0;
}

void OpticsConfig::validate() const {
  if (!(numerical_aperture > 0.0 && numerical_aperture < 0.7)) {
    throw ValidationError("PSF model requires 0 < NA < 0.7");
  }
  if (!(wavelength > 0.0)) throw ValidationError("projection wavelength must be positive");
  if (color_sign != 1.0 && color_sign != -1.0) throw ValidationError("color sign must be +1 or -1");
  if (!(pixel_pitch > 0.0)) throw ValidationError("pixel pitch must be positive");
  if (!(pixel_pitch < 0.61 * wavelength / numerical_aperture)) {
    throw ValidationError("pixel pitch must be below the diffraction-limited spot radius");
  }
  if (grid_step < 0.0) throw ValidationError("grid step must be non-negative");
  if (!(focal_length > 0.0) || !(fresnel_number > 0.0)) {
    throw ValidationError("focal length and Fresnel number must be positive");
  }
  if (!(power >= 0.0) || !std::isfinite(power)) throw ValidationError("power must be >= 0");
}

std::complex<double> psf_field(const OpticsConfig& optics, double r, double e0) {
  if (r < 0.0) throw DomainError("PSF radius must be non-negative");
  const double nu = 2.0 * kPi * r * optics.numerical_aperture / optics.wavelength;
  const double k = 2.0 * kPi / optics.wavelength;
  const double phase = -k * optics.focal_length + nu * nu / (4.0 * optics.fresnel_number) + kPi / 2.0;
  return std::polar(2.0 * e0 * bessel_ratio(nu), phase);
}

double psf_intensity(const OpticsConfig& optics, double r, double i0) {
  return std::norm(psf_field(optics, r, std::sqrt(i0)));
}

double defocus_factor(double z, const OpticsConfig& optics) {
  const double xi = kPi * z * optics.numerical_aperture * optics.numerical_aperture /
                    (2.0 * optics.wavelength);
  const double a = xi / 4.0;
  if (std::abs(a) < 1e-8) return 1.0 - a * a / 3.0;
  const double s = std::sin(a) / a;
  return s * s;
}

void DMDPattern::validate(int max_abs_index) const {
  if (width < 1 || height < 1) throw ValidationError("superpixel size must be positive");
  std::vector<int> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (std::abs(sorted[i]) > max_abs_index) {
      throw ValidationError("superpixel index " + std::to_string(sorted[i]) + " outside the DMD");
    }
    if (i > 0 && sorted[i] == sorted[i - 1]) throw ValidationError("duplicate superpixel index");
    if (i > 0 && sorted[i] - sorted[i - 1] < width) throw ValidationError("superpixels overlap");
  }
  if (symmetric) {
    std::vector<int> mirrored(sorted.size());
    std::transform(sorted.rbegin(), sorted.rend(), mirrored.begin(), [](int v) { return -v; });
    if (mirrored != sorted) throw ValidationError("pattern is not mirror symmetric");
  }
}

std::vector<PixelCoordinate> expand_pattern(const DMDPattern& pattern, const OpticsConfig& optics) {
  pattern.validate();
  std::vector<PixelCoordinate> out;
  out.reserve(pattern.count() * static_cast<std::size_t>(pattern.width * pattern.height));
  const double x0 = 0.5 * (pattern.width - 1);
  const double y0 = 0.5 * (pattern.height - 1);
  for (int idx : pattern.indices) {
    for (int tx = 0; tx < pattern.width; ++tx) {
      for (int ty = 0; ty < pattern.height; ++ty) {
        out.push_back({(idx + tx - x0) * optics.pixel_pitch, (ty - y0) * optics.pixel_pitch});
      }
    }
  }
  return out;
}

std::vector<double> chain_sites(const LatticeConfig& lattice, std::size_t n_sites) {
  const double d = lattice.spacing();
  // cos(2 k x + phase) = -1  <=>  x = (pi - phase) / (2 k) + m d
  const double x0 = (kPi - lattice.phase) / (2.0 * lattice.wavenumber());
  const double half = 0.5 * static_cast<double>(n_sites - 1);
  const double m0 = std::round(-x0 / d - half);
  std::vector<double> sites(n_sites);
  for (std::size_t j = 0; j < n_sites; ++j) sites[j] = x0 + (m0 + static_cast<double>(j)) * d;
  return sites;
}

std::vector<double> chain_grid(const LatticeConfig& lattice, std::size_t n_sites, double step,
                               double margin) {
  if (!(step > 0.0)) throw ValidationError("grid step must be positive");
  const auto sites = chain_sites(lattice, n_sites);
  const double d = lattice.spacing();
  const double lo = sites.front() - 0.5 * d - margin;
  const double hi = sites.back() + 0.5 * d + margin;
  const auto k_lo = static_cast<long>(std::floor(lo / step));
  const auto k_hi = static_cast<long>(std::ceil(hi / step));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(k_hi - k_lo + 1));
  for (long k = k_lo; k <= k_hi; ++k) grid.push_back(static_cast<double>(k) * step);
  return grid;
}

ProjectionModel::ProjectionModel(OpticsConfig optics, std::vector<double> x_grid, double shift)
    : optics_(std::move(optics)),
      grid_(std::move(x_grid)),
      shift_(shift),
      cache_(std::make_shared<Cache>()) {}

std::complex<double> ProjectionModel::superpixel_field_at(int index, int width, int height,
                                                          double x) const {
  const double pitch = optics_.pixel_pitch;
  const double x0 = 0.5 * (width - 1);
  const double y0 = 0.5 * (height - 1);
  const double xs = x - shift_;
  std::complex<double> field{0.0, 0.0};
  for (int tx = 0; tx < width; ++tx) {
    const double px = (index + tx - x0) * pitch;
    for (int ty = 0; ty < height; ++ty) {
      const double py = (ty - y0) * pitch;
      field += psf_field(optics_, std::hypot(xs - px, py));
    }
  }
  return field;
}

const std::vector<std::complex<double>>& ProjectionModel::superpixel_field(int index, int width,
                                                                           int height) const {
  const Key key{index, width, height};
  {
    std::lock_guard lock(cache_->mutex);
    if (auto it = cache_->fields.find(key); it != cache_->fields.end()) return *it->second;
  }
  auto values = std::make_unique<std::vector<std::complex<double>>>(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    (*values)[i] = superpixel_field_at(index, width, height, grid_[i]);
  }
  std::lock_guard lock(cache_->mutex);
  auto [it, inserted] = cache_->fields.try_emplace(key, std::move(values));
  return *it->second;
}

double ProjectionModel::single_superpixel_peak(int width, int height) const {
  const std::pair<int, int> key{width, height};
  {
    std::lock_guard lock(cache_->mutex);
    if (auto it = cache_->peaks.find(key); it != cache_->peaks.end()) return it->second;
  }
  // Isolated superpixel at the origin, unshifted; its peak sits at x = 0.
  ProjectionModel reference(optics_, {}, 0.0);
  const double peak = std::norm(reference.superpixel_field_at(0, width, height, 0.0));
  std::lock_guard lock(cache_->mutex);
  cache_->peaks.emplace(key, peak);
  return peak;
}

PotentialProfile ProjectionModel::project(const DMDPattern& pattern, double power) const {
  PotentialProfile profile;
  profile.x = grid_;
  profile.step = grid_.size() > 1 ? grid_[1] - grid_[0] : 0.0;
  profile.provenance = Provenance::ProjectionOnly;
  profile.values.assign(grid_.size(), 0.0);
  if (pattern.indices.empty() || power == 0.0) return profile;

  std::vector<std::complex<double>> field(grid_.size(), {0.0, 0.0});
  for (int idx : pattern.indices) {
    const auto& f = superpixel_field(idx, pattern.width, pattern.height);
    for (std::size_t i = 0; i < field.size(); ++i) field[i] += f[i];
  }
  const double scale =
      optics_.color_sign * power / single_superpixel_peak(pattern.width, pattern.height);
  for (std::size_t i = 0; i < field.size(); ++i) profile.values[i] = scale * std::norm(field[i]);
  return profile;
}

double ProjectionModel::potential_at(const DMDPattern& pattern, double power, double x) const {
  if (pattern.indices.empty() || power == 0.0) return 0.0;
  std::complex<double> field{0.0, 0.0};
  for (int idx : pattern.indices) field += superpixel_field_at(idx, pattern.width, pattern.height, x);
  return optics_.color_sign * power / single_superpixel_peak(pattern.width, pattern.height) *
         std::norm(field);
}

PotentialProfile project_intensity(const DMDPattern& pattern, const OpticsConfig& optics,
                                   const std::vector<double>& x_grid,
                                   const LatticeConfig& lattice, std::size_t n_sites) {
  optics.validate();
  pattern.validate();
  if (x_grid.size() < 3) throw ValidationError("projection grid too small");
  const auto sites = chain_sites(lattice, n_sites);
  const double need = 0.5 * lattice.spacing() + kMarginRadii * optics.first_zero_radius();
  const double tol = 1e-9 * lattice.spacing();
  if (x_grid.front() > sites.front() - need + tol || x_grid.back() < sites.back() + need - tol) {
    throw ValidationError("projection grid lacks a 3 PSF-radius margin around the chain");
  }
  return ProjectionModel(optics, x_grid).project(pattern, optics.power);
}

PotentialProfile total_potential(const LatticeConfig& lattice, double depth,
                                 const PotentialProfile& projection) {
  if (projection.values.size() != projection.x.size()) {
    throw ValidationError("projection profile grid mismatch");
  }
  PotentialProfile total = projection;
  total.provenance = Provenance::Total;
  const double k2 = 2.0 * lattice.wavenumber();
  for (std::size_t i = 0; i < total.x.size(); ++i) {
    total.values[i] = depth * std::cos(k2 * total.x[i] + lattice.phase) + projection.values[i];
  }
  return total;
}

BiasExtraction extract_biases(const PotentialProfile& total, const LatticeConfig& lattice,
                              double depth, std::size_t n_sites, const HubbardParams& bare) {
  (void)depth;
  if (total.x.size() != total.values.size() || total.x.size() < 3) {
    throw ValidationError("potential profile grid mismatch");
  }
  const double d = lattice.spacing();
  const auto sites = chain_sites(lattice, n_sites);
  const double step = total.step > 0.0 ? total.step : total.x[1] - total.x[0];
  if (total.x.front() > sites.front() - 0.5 * d || total.x.back() < sites.back() + 0.5 * d) {
    throw ExtractionError("potential profile does not cover the chain");
  }

  BiasExtraction out;
  out.minima.resize(n_sites);
  out.energies.resize(n_sites);
  const double x_first = total.x.front();
  for (std::size_t j = 0; j < n_sites; ++j) {
    const auto lo = static_cast<std::size_t>(std::ceil((sites[j] - 0.5 * d - x_first) / step));
    const auto hi = std::min(total.x.size() - 1,
                             static_cast<std::size_t>(std::floor((sites[j] + 0.5 * d - x_first) / step)));
    std::size_t best = lo;
    for (std::size_t i = lo; i <= hi; ++i) {
      if (total.values[i] < total.values[best]) best = i;
    }
    if (best == lo || best == hi) {
      throw ExtractionError("well " + std::to_string(j) + " has no interior minimum");
    }
    const double vm = total.values[best - 1];
    const double v0 = total.values[best];
    const double vp = total.values[best + 1];
    const double curv = vp - 2.0 * v0 + vm;
    double x_star = total.x[best];
    double e_star = v0;
    if (curv > 0.0) {
      x_star -= 0.5 * step * (vp - vm) / curv;
      e_star -= (vp - vm) * (vp - vm) / (8.0 * curv);
    }
    out.minima[j] = x_star;
    out.energies[j] = e_star;
  }
  std::vector<double> deltas(n_sites - 1);
  for (std::size_t j = 0; j + 1 < n_sites; ++j) {
    deltas[j] = (out.energies[j + 1] - out.energies[j]) / bare.U;
  }
  out.biases = BiasVector(std::move(deltas));
  out.valid = out.biases.is_valid();
  return out;
}

BiasExtractor::BiasExtractor(LatticeConfig lattice, OpticsConfig optics, std::size_t n_sites,
                             double shift)
    : lattice_(lattice),
      n_sites_(n_sites),
      bare_(bare_couplings(lattice.depth, lattice)),
      step_(optics.resolved_grid_step(lattice)),
      model_(optics,
             chain_grid(lattice, n_sites, optics.resolved_grid_step(lattice),
                        kMarginRadii * optics.first_zero_radius()),
             shift) {
  lattice_.validate();
  optics.validate();
  if (n_sites < 2) throw ValidationError("chain needs at least two sites");
}

PotentialProfile BiasExtractor::projected(const DMDPattern& pattern, double power) const {
  return model_.project(pattern, power);
}

PotentialProfile BiasExtractor::total(const DMDPattern& pattern, double power) const {
  return total_potential(lattice_, lattice_.depth, projected(pattern, power));
}

BiasExtraction BiasExtractor::extract(const DMDPattern& pattern, double power) const {
  return extract_biases(total(pattern, power), lattice_, lattice_.depth, n_sites_, bare_);
}

BiasExtractor BiasExtractor::shifted(double dx) const {
  return BiasExtractor(lattice_, model_.optics(), n_sites_, model_.shift() + dx);
}

}  // namespace elc

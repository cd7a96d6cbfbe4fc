#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "elc/errors.hpp"
#include "elc/physical_model.hpp"

using namespace elc;
using doctest::Approx;

TEST_CASE("recoil energy and lattice spacing of Rb-87 at 1064 nm") {
  const LatticeConfig lat;
  CHECK(lat.recoil_energy() == Approx(1.3436070890e-30).epsilon(1e-9));
  CHECK(lat.spacing() == Approx(532e-9).epsilon(1e-15));
}

TEST_CASE("harmonic-approximation couplings match frozen reference values") {
  const LatticeConfig lat;
  const auto c18 = bare_couplings(18.0, lat);
  CHECK(c18.J == Approx(4.0721949e-3).epsilon(1e-7));
  CHECK(c18.U == Approx(0.41384904).epsilon(1e-7));
  const auto c20 = bare_couplings(20.0, lat);
  CHECK(c20.J == Approx(2.784900073e-3).epsilon(1e-8));
  CHECK(c20.U == Approx(0.447878352).epsilon(1e-8));
  CHECK(c20.alpha() < c18.alpha());
}

TEST_CASE("time unit") {
  const LatticeConfig lat;
  CHECK(time_unit(18.0, lat) * 1e3 == Approx(0.195879378).epsilon(1e-7));
  CHECK(time_unit(20.0, lat) * 1e3 == Approx(0.45325720).epsilon(1e-7));
  CHECK_THROWS_AS(time_unit(0.0, lat), DomainError);
}

TEST_CASE("effective coupling and its derivative") {
  const auto p = HubbardParams::nominal();
  CHECK(effective_coupling(p, 0.0) == Approx(2e-4).epsilon(1e-14));
  CHECK(effective_coupling(p, 0.5) == Approx(2e-4 / 0.75).epsilon(1e-14));
  CHECK(effective_coupling(p, -0.5) == effective_coupling(p, 0.5));
  for (double d : {-0.9, -0.3, 0.0, 0.4, 0.95}) {
    const double h = 1e-6;
    const double fd = (effective_coupling(p, d + h) - effective_coupling(p, d - h)) / (2 * h);
    CHECK(effective_coupling_derivative(p, d) == Approx(fd).epsilon(1e-7));
  }
  CHECK_THROWS_AS(effective_coupling(p, 1.0), SingularityError);
  CHECK_THROWS_AS(effective_coupling(p, -1.2), SingularityError);
}

TEST_CASE("double-well gap ratio against exact diagonalization") {
  // 4x4 diagonalization at J = 0.01, U = 1, computed independently.
  const double ref[] = {1.0665776753, 1.3326830234, 2.2792124473, 5.1637899360};
  const double deltas[] = {0.25, 0.5, 0.75, 0.9};
  for (int i = 0; i < 4; ++i) {
    CAPTURE(deltas[i]);
    CHECK(double_well_gap_ratio(0.01, 1.0, deltas[i]) == Approx(ref[i]).epsilon(1e-9));
  }
  CHECK(double_well_gap_ratio(0.01, 1.0, 0.0) == Approx(1.0).epsilon(1e-14));
  CHECK(double_well_gap_ratio(0.01, 1.0, 0.3) == Approx(double_well_gap_ratio(0.01, 1.0, -0.3)).epsilon(1e-12));
}

TEST_CASE("superexchange law deviation shrinks as J is lowered") {
  for (double d : {0.25, 0.5, 0.75, 0.9}) {
    const double law = 1.0 / (1.0 - d * d);
    const double dev1 = std::abs(double_well_gap_ratio(0.01, 1.0, d) / law - 1.0);
    const double dev2 = std::abs(double_well_gap_ratio(0.005, 1.0, d) / law - 1.0);
    CAPTURE(d);
    CHECK(dev1 / dev2 == Approx(4.0).epsilon(0.1));
  }
}

TEST_CASE("bias vector helpers") {
  const BiasVector b({0.5, -0.9, 0.2});
  CHECK(b.chain_length() == 4);
  CHECK(b.is_valid());
  CHECK(b.singularity_gap() == Approx(0.1).epsilon(1e-14));
  CHECK(b.max_abs() == 0.9);
  CHECK_FALSE(BiasVector({1.0, 0.0}).is_valid());
}

TEST_CASE("lattice validation") {
  LatticeConfig lat;
  lat.depth = -1.0;
  CHECK_THROWS_AS(lat.validate(), ValidationError);
  lat = LatticeConfig{};
  lat.wavelength = 0.0;
  CHECK_THROWS_AS(lat.validate(), ValidationError);
  CHECK_THROWS_AS(double_well_gap_ratio(0.01, 1.0, 1.0), std::exception);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "elc/errors.hpp"
#include "elc/spin_dynamics.hpp"
#include "oracles.hpp"

using namespace elc;
using doctest::Approx;

TEST_CASE("structure matrix layout") {
  const auto s = structure_matrix(1, 4);
  Eigen::MatrixXd expected = 0.5 * Eigen::MatrixXd::Identity(4, 4);
  expected(1, 2) = expected(2, 1) = 1.0;
  expected(1, 1) = expected(2, 2) = -0.5;
  CHECK((s - expected).norm() == 0.0);
  CHECK_THROWS_AS(structure_matrix(3, 4), DomainError);
}

TEST_CASE("hamiltonian is the coupling-weighted sum of structure matrices") {
  const BiasVector b({0.3, -0.6, 0.6, -0.3});
  const auto p = HubbardParams::nominal();
  const auto h = hamiltonian(b, p);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(5, 5);
  for (std::size_t j = 0; j < 4; ++j) sum += effective_coupling(p, b[j]) * structure_matrix(j, 5);
  CHECK((h.matrix() - sum).norm() < 1e-18);
  CHECK_THROWS_AS(hamiltonian(BiasVector({0.2, 1.0, 0.0, 0.1}), p), SingularityError);
}

TEST_CASE("spectral propagator matches scaling-and-squaring Taylor exponential") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.95, 0.95);
  const auto p = HubbardParams::nominal();
  for (int trial = 0; trial < 10; ++trial) {
    const BiasVector b({u(rng), u(rng), u(rng), u(rng), u(rng)});
    const auto h = hamiltonian(b, p);
    const double t = 50.0 + 100.0 * trial;
    const Eigen::MatrixXcd ref = oracle::expm(Complex(0, -t) * h.matrix().cast<Complex>());
    const Eigen::MatrixXcd got = propagate(h, t);
    CHECK((got - ref).cwiseAbs().maxCoeff() < 1e-11);
    CHECK(std::abs(h.amplitude(5, 0, t) - ref(5, 0)) < 1e-11);
    CHECK((got.adjoint() * got - Eigen::MatrixXcd::Identity(6, 6)).norm() < 1e-12);
  }
}

TEST_CASE("two-site transfer is perfect at pi / (2 J_eff)") {
  const auto p = HubbardParams::nominal();
  for (double d : {0.0, 0.4, -0.8}) {
    const BiasVector b({d});
    const double t = constants::pi / (2.0 * effective_coupling(p, d));
    const TransferProblem pr = TransferProblem::end_to_end(2);
    CHECK(fidelity_error(b, t, pr, p) < 1e-14);
    CHECK(fidelity_error(b, 0.5 * t, pr, p) == Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("fidelity trace locates the two-site minimum") {
  const auto p = HubbardParams::nominal();
  const BiasVector b({0.5});
  const double t_star = constants::pi / (2.0 * effective_coupling(p, 0.5));
  const auto tr = fidelity_trace(b, TransferProblem::end_to_end(2), p, 1.5 * t_star, 300);
  REQUIRE(tr.times.size() == 301);
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.errors.front() == Approx(1.0));
  CHECK(tr.t_min == Approx(t_star).epsilon(1e-8));
  CHECK(tr.e_min < 1e-14);
  CHECK(tr.errors[tr.grid_argmin] >= tr.e_min);
}

TEST_CASE("golden section on a parabola") {
  const auto [x, f] = golden_section([](double t) { return (t - 1.3) * (t - 1.3) + 2.0; }, 0.0, 4.0, 1e-10);
  CHECK(x == Approx(1.3).epsilon(1e-8));
  CHECK(f == Approx(2.0).epsilon(1e-14));
}

TEST_CASE("transfer problem validation") {
  CHECK_THROWS_AS((TransferProblem{5, 0, 5}.validate()), ValidationError);
  CHECK_THROWS_AS((TransferProblem{1, 0, 0}.validate()), ValidationError);
  CHECK_THROWS_AS(fidelity_error(BiasVector({0.1, 0.1}), 10.0, TransferProblem{5, 0, 4}, HubbardParams::nominal()),
                  ValidationError);
}

TEST_CASE("golden section terminates on brackets far from the origin") {
  const auto [x, f] = golden_section([](double t) { return std::abs(t - 3.3e6); }, 3e6, 4e6, 1e-10);
  CHECK(x == Approx(3.3e6).epsilon(1e-12));
  const auto tr = fidelity_trace(BiasVector({0.3, 0.5, -0.5, -0.3}), TransferProblem{}, HubbardParams::nominal(), 5e6, 200);
  CHECK(tr.e_min <= *std::min_element(tr.errors.begin(), tr.errors.end()));
}

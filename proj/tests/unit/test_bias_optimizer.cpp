#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "elc/bias_optimizer.hpp"
#include "elc/errors.hpp"

using namespace elc;
using doctest::Approx;

TEST_CASE("symmetric parametrization") {
  CHECK(symmetric_parameter_count(5) == 2);
  CHECK(symmetric_parameter_count(6) == 3);
  const std::vector<double> f{0.2, -0.7};
  const auto b = symmetrize(f, 5);
  CHECK(b.values() == std::vector<double>{0.2, -0.7, -0.7, 0.2});
  CHECK(free_parameters(b) == f);
  const auto odd = symmetrize(std::vector<double>{0.1, 0.3, 0.5}, 6);
  CHECK(odd.values() == std::vector<double>{0.1, 0.3, 0.5, 0.3, 0.1});
}

TEST_CASE("two-site chain converges to the closed-form transfer time") {
  BiasOptimConfig cfg;
  cfg.restarts = 4;
  cfg.t_max = 20000.0;
  cfg.symmetric = false;
  const auto p = HubbardParams::nominal();
  const auto out = optimize_biases(cfg, TransferProblem::end_to_end(2), p);
  REQUIRE(out.size() == 4);
  const auto& best = out.front();
  const double t_star = constants::pi / (2.0 * effective_coupling(p, best.biases[0]));
  CHECK(best.error < 1e-10);
  // T is only fixed modulo the transfer period; the first revival is the reference.
  const double periods = best.transfer_time / t_star;
  CHECK(std::abs(periods - std::round(periods)) < 1e-6);
  CHECK(std::llround(periods) % 2 == 1);
}

TEST_CASE("results are sorted and reproducible across thread counts") {
  BiasOptimConfig cfg;
  cfg.restarts = 6;
  cfg.max_iterations = 60;
  cfg.seed = 11;
  const TransferProblem pr = TransferProblem::end_to_end(5);
  const auto p = HubbardParams::nominal();
  const auto a = optimize_biases(cfg, pr, p);
  cfg.threads = 3;
  const auto b = optimize_biases(cfg, pr, p);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].biases == b[i].biases);
    CHECK(a[i].transfer_time == b[i].transfer_time);
    CHECK(a[i].restart == b[i].restart);
    if (i > 0) CHECK(a[i - 1].error <= a[i].error);
    CHECK(a[i].biases.max_abs() <= cfg.delta_bound);
    CHECK(a[i].transfer_time <= cfg.t_max);
    CHECK(a[i].biases[0] == a[i].biases[3]);
  }
}

TEST_CASE("a single restart never increases the error of its start") {
  BiasOptimConfig cfg;
  const TransferProblem pr = TransferProblem::end_to_end(5);
  const auto p = HubbardParams::nominal();
  const std::vector<double> free0{0.5, 0.8};
  const double e0 = fidelity_error(symmetrize(free0, 5), 300.0, pr, p);
  const auto c = optimize_from(cfg, pr, p, free0, 300.0);
  CHECK(c.error <= e0);
  CHECK(c.biases.is_valid());
}

TEST_CASE("configuration validation") {
  BiasOptimConfig cfg;
  cfg.delta_bound = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = BiasOptimConfig{};
  cfg.restarts = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = BiasOptimConfig{};
  cfg.t_max = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

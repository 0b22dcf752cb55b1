#include <doctest.h>

#include <cmath>

#include "tsmcmc/error.hpp"
#include "tsmcmc/theory.hpp"

using namespace tsmcmc;
using namespace tsmcmc::theory;

TEST_CASE("two-state hand kernel") {
  Vector pi(2);
  pi << 0.25, 0.75;
  Matrix Q(2, 2);
  Q << 0.5, 0.5, 0.5, 0.5;
  const DiscreteChain c = build_mh_kernel(pi, Q);
  // P01 = Q01 min(1, pi1/pi0) = .5, P10 = Q10 pi0/pi1 = 1/6
  CHECK(c.P(0, 1) == doctest::Approx(0.5));
  CHECK(c.P(1, 0) == doctest::Approx(1.0 / 6.0));
  CHECK(c.P(1, 1) == doctest::Approx(5.0 / 6.0));
  CHECK(check_detailed_balance(c) < 1e-15);
  CHECK(check_stationarity(c) < 1e-15);
}

TEST_CASE("random chains satisfy detailed balance and stationarity") {
  RandomStream rng(1);
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 2 + rng.uniform_index(19);
    const DiscreteChain c = build_mh_kernel(random_distribution(n, rng), random_symmetric_stochastic(n, rng));
    c.validate();
    REQUIRE(check_detailed_balance(c) <= 1e-12);
    REQUIRE(check_stationarity(c) <= 1e-10);
    REQUIRE(flow_asymmetry(c) <= 1e-12);
    const StationaryResult s = stationary_distribution(c.P);
    REQUIRE((s.pi - c.pi).cwiseAbs().sum() < 1e-8);
  }
}

TEST_CASE("cycle is stationary without detailed balance") {
  const DiscreteChain c{Vector::Constant(3, 1.0 / 3.0), cycle_matrix(3)};
  CHECK(check_stationarity(c) < 1e-15);
  CHECK(check_detailed_balance(c) > 0.3);
  CHECK(flow_matrix(c)(0, 1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("periodic chains still converge with the lazy iteration") {
  const StationaryResult s = stationary_distribution(cycle_matrix(4));
  CHECK((s.pi - Vector::Constant(4, 0.25)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("shift bound worked case") {
  ConditionalModel m;
  m.p_cond = Matrix(2, 2);
  m.p_cond << 0.8, 0.2, 0.2, 0.8;
  m.p_x = Vector::Constant(2, 0.5);
  m.q_x = Vector(2);
  m.q_x << 0.9, 0.1;
  const ShiftBound b = cgan_shift_bound(m, {1});
  CHECK(b.bound == doctest::Approx(0.24).epsilon(1e-12));
  CHECK(b.tv == doctest::Approx(0.24).epsilon(1e-12));
  CHECK(b.q_theta(0) == doctest::Approx(0.74));
}

TEST_CASE("shift bound holds on random models") {
  RandomStream rng(5);
  for (int i = 0; i < 200; ++i) {
    const std::size_t nx = 2 + rng.uniform_index(6), ny = 2 + rng.uniform_index(6);
    ConditionalModel m{random_stochastic(nx, ny, rng), random_distribution(nx, rng), random_distribution(nx, rng)};
    std::vector<std::size_t> subset;
    for (std::size_t y = 0; y < ny; ++y)
      if (rng.uniform() < 0.5) subset.push_back(y);
    if (subset.empty()) subset.push_back(0);
    const ShiftBound b = cgan_shift_bound(m, subset);
    REQUIRE(b.tv >= b.bound - 1e-12);
  }
  CHECK_THROWS_AS(cgan_shift_bound({Matrix::Constant(2, 2, 0.5), Vector::Constant(2, 0.5), Vector::Constant(2, 0.5)}, {}),
                  Error);
}

TEST_CASE("modified kernel equals standard MH for symmetric proposals") {
  RandomStream rng(8);
  for (int i = 0; i < 20; ++i) {
    const std::size_t n = 3 + rng.uniform_index(8);
    CHECK(measure_modified_mh_bias(random_distribution(n, rng), random_symmetric_stochastic(n, rng), 0.0) <= 1e-9);
  }
  Matrix Q(2, 2);
  Q << 0.1, 0.9, 0.5, 0.5;
  Vector pi(2);
  pi << 0.5, 0.5;
  CHECK(measure_modified_mh_bias(pi, Q, 0.0) > 1e-3);
}

TEST_CASE("input validation") {
  Vector pi(2);
  pi << 0.6, 0.6;
  CHECK_THROWS_AS(build_mh_kernel(pi, Matrix::Constant(2, 2, 0.5)), Error);
  pi << 0.5, 0.5;
  CHECK_THROWS_AS(build_mh_kernel(pi, Matrix::Constant(2, 2, 0.6)), Error);
  CHECK_THROWS_AS(build_modified_kernel(pi, Matrix::Constant(2, 2, 0.5), -1.0), Error);
}

TEST_CASE("full verification passes") {
  const auto report = run_verification(0);
  CHECK(report["passed"] == true);
  CHECK(report["checks"].size() >= 8);
}

#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tsmcmc/error.hpp"
#include "tsmcmc/generators.hpp"

using namespace tsmcmc;

namespace {
TimeSeries var1_series(std::size_t n, std::uint64_t seed) {
  // x_t = 0.5 x_{t-1} + 0.2 y_{t-1} + e, y_t = -0.3 y_{t-1} + e, using the standard library RNG.
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Matrix m(static_cast<Eigen::Index>(n), 2);
  double x = 0, y = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double nx = 0.5 * x + 0.2 * y + 1.0 + nd(gen);
    const double ny = -0.3 * y + 0.5 * nd(gen);
    x = nx;
    y = ny;
    m.row(static_cast<Eigen::Index>(t)) << x, y;
  }
  return TimeSeries(m);
}
}  // namespace

TEST_CASE("var recovers known coefficients") {
  const VarModel m = fit_var(var1_series(100000, 1), 1);
  CHECK(std::abs(m.coefficients[0](0, 0) - 0.5) < 0.01);
  CHECK(std::abs(m.coefficients[0](0, 1) - 0.2) < 0.03);
  CHECK(std::abs(m.coefficients[0](1, 1) + 0.3) < 0.01);
  CHECK(std::abs(m.coefficients[0](1, 0)) < 0.01);  // y does not load on x
  CHECK(std::abs(m.intercept(0) - 1.0) < 0.02);
  CHECK(m.residual_variance(0) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(m.residual_variance(1) == doctest::Approx(0.25).epsilon(0.02));
  CHECK(m.warnings.empty());
}

TEST_CASE("var fitting error paths") {
  const TimeSeries s = var1_series(200, 2);
  CHECK_THROWS_AS(fit_var(s, 0), Error);
  try {
    fit_var(var1_series(30, 2), 2);
    FAIL("expected InsufficientData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientData);
  }
  Matrix m = s.values();
  m.col(1).setConstant(3.0);
  try {
    fit_var(TimeSeries(m), 1);
    FAIL("expected SingularDesign");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularDesign);
  }
}

TEST_CASE("collinear columns fall back to ridge with a warning") {
  TimeSeries s = var1_series(500, 4);
  Matrix m(500, 3);
  m << s.values(), s.values().col(0) * 2.0;
  const VarModel v = fit_var(TimeSeries(m), 1);
  CHECK_FALSE(v.warnings.empty());
  CHECK(v.intercept.allFinite());
}

TEST_CASE("var source proposal mean and context checks") {
  const VarModel m = fit_var(var1_series(5000, 3), 2);
  VarSource src(m, 4);
  CHECK(src.context_len() == 4);
  Matrix ctx(4, 2);
  ctx << 1, 2, 3, 4, 5, 6, 7, 8;
  Vector expect = m.intercept + m.coefficients[0] * ctx.row(3).transpose() + m.coefficients[1] * ctx.row(2).transpose();
  CHECK((src.conditional_mean(ctx) - expect).norm() < 1e-12);

  RandomStream a(5), b(5);
  const Vector q = src.propose(ctx, a);
  CHECK((q - (expect + m.residual_variance.cwiseSqrt().cwiseProduct(b.normal_vector(2)))).norm() < 1e-12);
  CHECK_THROWS_AS(src.propose(Matrix::Zero(1, 2), a), Error);
  CHECK_THROWS_AS(src.propose(Matrix::Zero(4, 3), a), Error);
  CHECK_THROWS_AS(VarSource(m, 1), Error);
}

TEST_CASE("bootstrap proposals are last row plus an observed difference") {
  const TimeSeries s = var1_series(100, 6);
  auto src = make_bootstrap_source(s, 3);
  const auto diffs = first_differences(s);
  RandomStream rng(8);
  Matrix ctx = s.values().topRows(3);
  for (int i = 0; i < 200; ++i) {
    const Vector d = src->propose(ctx, rng) - ctx.row(2).transpose();
    bool found = false;
    for (const auto& x : diffs) found = found || (x - d).norm() < 1e-12;
    REQUIRE(found);
  }
}

TEST_CASE("biased source adds drift and scales innovations") {
  const VarModel m = fit_var(var1_series(2000, 7), 1);
  Matrix ctx(1, 2);
  ctx << 0.4, -0.1;
  Vector drift(2);
  drift << 0.3, -0.2;

  RandomStream a(1), b(1);
  BiasedSource identity(std::make_unique<VarSource>(m), Vector::Zero(2), 1.0);
  VarSource plain(m);
  CHECK((identity.propose(ctx, a) - plain.propose(ctx, b)).norm() == 0.0);

  RandomStream c(2), e(2);
  BiasedSource biased(std::make_unique<VarSource>(m), drift, 2.0);
  CHECK(biased.scales_innovation());
  const Vector z = e.normal_vector(2);
  const Vector expect = plain.conditional_mean(ctx) + drift + 2.0 * plain.innovation_std().cwiseProduct(z);
  CHECK((biased.propose(ctx, c) - expect).norm() < 1e-12);

  // Drifts compose additively for any inner source.
  const TimeSeries s = var1_series(50, 9);
  RandomStream f(3), g(3);
  BiasedSource nested(std::make_unique<BiasedSource>(make_bootstrap_source(s), drift, 1.0), drift, 1.0);
  BiasedSource once(make_bootstrap_source(s), 2 * drift, 1.0);
  CHECK((nested.propose(ctx, f) - once.propose(ctx, g)).norm() < 1e-12);

  CHECK_THROWS_AS(BiasedSource(std::make_unique<VarSource>(m), drift, 0.5), Error);
  CHECK_THROWS_AS(BiasedSource(std::make_unique<VarSource>(m), Vector::Zero(3), 1.0), Error);
}

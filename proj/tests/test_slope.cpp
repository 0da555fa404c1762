#include <cmath>

#include "doctest.h"
#include "varcert/corpus.hpp"
#include "varcert/slope.hpp"

using namespace varcert;

namespace {

SpacePtr p3_space() {
  return std::make_shared<MetricSpace>(
      MetricSpace::finite({{0, 1, 2}, {1, 0, 1}, {2, 1, 0}}));
}

std::function<double(point_id)> p3_values() {
  std::vector<double> values = {1.0, 0.2, 0.0};
  return [values](point_id x) { return values[x]; };
}

PerturbationSeries geometric_at(SpacePtr space, point_id center,
                                std::size_t terms) {
  PerturbationSeries s;
  s.space = space;
  s.gauge = metric_as_gauge(space);
  s.centers.assign(terms, center);
  s.weights.resize(terms);
  for (std::size_t i = 0; i < terms; ++i) s.weights[i] = std::ldexp(1.0, -static_cast<int>(i));
  s.cap = terms;
  s.weight_tail_sum = std::ldexp(1.0, -static_cast<int>(terms) + 1);
  s.rho_diameter = rho_upper_bound(*space, s.gauge);
  return s;
}

}  // namespace

TEST_CASE("eval_g: geometric weights against the closed form") {
  auto space = p3_space();
  for (const std::size_t terms : {4u, 16u, 64u}) {
    const PerturbationSeries s = geometric_at(space, 2, terms);
    const GaugeSumValue g = eval_g(s, 0);
    // Full series: sum 2^-i * d(p0,p2) = 2 * 2 = 4.
    CHECK_FALSE(g.diverged);
    CHECK(g.tail_bound == s.weight_tail_sum * 2.0);
    CHECK(std::fabs(g.value - 4.0) <= g.tail_bound + 1e-15);
  }
  // At the common center the sum vanishes identically.
  const PerturbationSeries s = geometric_at(space, 2, 64);
  CHECK(eval_g(s, 2).value == 0.0);
}

TEST_CASE("eval_g: constant weights over separated centers overflow") {
  auto space = p3_space();
  PerturbationSeries s;
  s.space = space;
  s.gauge = metric_as_gauge(space);
  for (std::size_t i = 0; i < 4096; ++i) {
    s.centers.push_back(i % 2);  // alternate p0, p1
    s.weights.push_back(1.0);
  }
  s.cap = s.centers.size();
  s.rho_diameter = 2.0;
  s.overflow_threshold = 1e3;
  const GaugeSumValue g = eval_g(s, 2);
  CHECK(g.diverged);
  CHECK(g.value == kInf);
}

TEST_CASE("series validation catches malformed weights") {
  auto space = p3_space();
  PerturbationSeries s = geometric_at(space, 2, 4);
  s.weights[0] = 0.5;  // normalization requires a leading 1
  CHECK_THROWS_AS(eval_g(s, 0), InvalidInput);
  PerturbationSeries t = geometric_at(space, 2, 4);
  t.weights[2] = -0.1;
  CHECK_THROWS_AS(eval_g(t, 0), InvalidInput);
}

TEST_CASE("nonlocal slope: descent measured against the gauge series") {
  auto space = p3_space();
  const auto f = p3_values();

  // All centers at p2: f never descends from p2, slope 0.
  const PerturbationSeries at_min = geometric_at(space, 2, 32);
  CHECK(nonlocal_slope(f, at_min, 2).value == 0.0);

  // Constant objective: numerators vanish everywhere.
  const auto flat = [](point_id) { return 0.7; };
  for (point_id x = 0; x < 3; ++x)
    CHECK(nonlocal_slope(flat, at_min, x).value == 0.0);

  // Single center at p0: slope at p0 is max(0.8/1, 1.0/2) = 0.8.
  PerturbationSeries at_origin;
  at_origin.space = space;
  at_origin.gauge = metric_as_gauge(space);
  at_origin.centers = {0};
  at_origin.weights = {1.0};
  at_origin.cap = 1;
  at_origin.rho_diameter = 2.0;
  const SlopeValue s = nonlocal_slope(f, at_origin, 0);
  CHECK(s.value == doctest::Approx(0.8));
  CHECK(s.anomalies.empty());
}

TEST_CASE("nonlocal slope: descent with decreasing g is an anomaly") {
  auto space = p3_space();
  std::vector<double> values = {1.0, 0.0, 0.5};
  const auto f = [values](point_id x) { return values[x]; };
  PerturbationSeries s;
  s.space = space;
  s.gauge = metric_as_gauge(space);
  s.centers = {1};
  s.weights = {1.0};
  s.cap = 1;
  s.rho_diameter = 2.0;
  // At p0: g(p0)=1. u=p1 has g=0 < 1 while f descends 1 -> 0: anomalous,
  // counted by magnitude 1/1. u=p2 has g(p2)=1=g(p0): excluded.
  const SlopeValue sv = nonlocal_slope(f, s, 0);
  CHECK(sv.value == doctest::Approx(1.0));
  REQUIRE(sv.anomalies.size() == 1);
  CHECK(sv.anomalies[0] == 1);
}

TEST_CASE("nonlocal slope: infinite g at the base point is undefined") {
  auto space = p3_space();
  PerturbationSeries s = geometric_at(space, 2, 4);
  s.overflow_threshold = 0.5;  // even the first term overflows away from p2
  CHECK_THROWS_AS(nonlocal_slope(p3_values(), s, 0), InvalidInput);
}

TEST_CASE("local slope on the line grid approaches the calculus value") {
  const Fixture fx = corpus_fixture("LINE-ABS");
  auto space = fx.problem.space;
  PerturbationSeries s;
  s.space = space;
  s.gauge = power_norm_gauge(space, 2.0);
  s.centers = {2300};  // coordinate 0.3
  s.weights = {1.0};
  s.cap = 1;
  s.rho_diameter = rho_upper_bound(*space, s.gauge);

  const point_id x = 2500;  // coordinate 0.5
  const double radii[] = {0.1, 0.01};
  const auto estimates = local_slope(fx.problem.f, s, x, radii);
  REQUIRE(estimates.size() == 2);
  // Calculus oracle on the descent side: |f'|/g' = 1/0.4 = 2.5, approached
  // from above as the radius shrinks. At r = 0.1 the node nearest 0.4 lies
  // at distance 0.1 + 9e-17 and falls outside, so the supremum sits at
  // 0.401: 0.099 / (0.04 - 0.101^2).
  CHECK(estimates[0] == doctest::Approx(0.099 / 0.029799).epsilon(1e-6));
  CHECK(estimates[1] == doctest::Approx(100.0 / 39.0).epsilon(1e-6));
  CHECK(estimates[0] > estimates[1]);
  CHECK(estimates[1] > 2.5);

  // At the strict minimum of f the numerator vanishes nearby.
  const auto at_min = local_slope(fx.problem.f, s, 2000, radii);
  CHECK(at_min[0] == 0.0);
  CHECK(at_min[1] == 0.0);

  const double too_small[] = {1e-4};
  CHECK_THROWS_AS(local_slope(fx.problem.f, s, x, too_small), InvalidInput);
}

TEST_CASE("series from a finished run carries the normalized weights") {
  Fixture fx = corpus_fixture("P3");
  fx.problem.epsilon = 2.0;
  ScheduleSpec spec;
  spec.delta_head = {0.5};
  spec.n = 1;
  const Schedule sch = spec.build(2.0);
  const GaugeFunction g = metric_as_gauge(fx.problem.space);
  const RunResult r =
      run(fx.problem, g, sch, exhaustive_oracle(*fx.problem.space));
  REQUIRE(r.xbar == 2);

  const PerturbationSeries series =
      series_from_trace(r, fx.problem, g, sch, 4.0);
  REQUIRE(series.centers.size() == 1);
  CHECK(series.centers[0] == 2);  // the limit point carries the weight
  CHECK(series.weights[0] == 1.0);

  const SlopeValue slope = nonlocal_slope(fx.problem.f, series, r.xbar);
  CHECK(slope.value == 0.0);

  const CertificateEntry e = slope_bound_check(r, fx.problem, g, sch, 4.0);
  CHECK(e.holds);
  CHECK(e.margin == doctest::Approx(0.5));

  // The wrong lambda is not the normalized form.
  CHECK_THROWS_AS(series_from_trace(r, fx.problem, g, sch, 3.0),
                  InvalidInput);
}

TEST_CASE("slope is insensitive to constant objective shifts") {
  for (const std::uint64_t seed : {3ull, 11ull}) {
    Fixture fx = random_fixture(seed);
    const Schedule sch = fx.schedule.build(fx.problem.epsilon);
    const GaugeFunction g = metric_as_gauge(fx.problem.space);
    const RunResult r =
        run(fx.problem, g, sch, exhaustive_oracle(*fx.problem.space));
    const double lambda = fx.problem.epsilon / sch.delta(0);
    const PerturbationSeries series =
        series_from_trace(r, fx.problem, g, sch, lambda);
    const auto base = fx.problem.f;
    const auto shifted = [base](point_id x) { return base(x) + 3.75; };
    const SlopeValue a = nonlocal_slope(base, series, r.xbar);
    const SlopeValue b = nonlocal_slope(shifted, series, r.xbar);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-9));
  }
}

TEST_CASE("slope bound holds on seeded Ekeland-style runs") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Fixture fx = random_fixture(seed);
    const Schedule sch = fx.schedule.build(fx.problem.epsilon);
    const GaugeFunction g = metric_as_gauge(fx.problem.space);
    const RunResult r =
        run(fx.problem, g, sch, exhaustive_oracle(*fx.problem.space));
    const CertificateEntry e =
        slope_bound_check(r, fx.problem, g, sch, fx.lambda);
    CAPTURE(seed);
    CHECK(e.holds);
    CHECK(e.margin > 0.0);
  }
}

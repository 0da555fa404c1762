#include "varcert/corpus.hpp"

#include <algorithm>
#include <cmath>

namespace varcert {
namespace {

Problem finite_problem(std::vector<std::vector<double>> dist,
                       std::vector<double> values, point_id x0, double eps,
                       std::string name) {
  Problem p;
  p.space = std::make_shared<MetricSpace>(MetricSpace::finite(std::move(dist)));
  p.f = [values = std::move(values)](point_id x) { return values[x]; };
  p.x0 = x0;
  p.epsilon = eps;
  p.name = std::move(name);
  return p;
}

// Three points on a line: d(p0,p1) = d(p1,p2) = 1, d(p0,p2) = 2.
std::vector<std::vector<double>> p3_matrix() {
  return {{0, 1, 2}, {1, 0, 1}, {2, 1, 0}};
}

Fixture make_p3() {
  Fixture fx;
  fx.name = "P3";
  fx.problem = finite_problem(p3_matrix(), {1.0, 0.2, 0.0}, 0, 2.0, "P3");
  fx.schedule.delta_head = {0.5};
  fx.schedule.n = 1;
  fx.schedule.tol_cert = 1e-9;
  fx.lambda = 4.0;  // eps / delta0
  return fx;
}

Fixture make_equality_edge() {
  // f(x0) = inf f + eps exactly, forcing delta0 >= 1.
  Fixture fx;
  fx.name = "EQUALITY-EDGE";
  fx.problem =
      finite_problem(p3_matrix(), {1.0, 0.2, 0.0}, 0, 1.0, "EQUALITY-EDGE");
  fx.schedule.delta_head = {1.0};
  fx.schedule.n = 1;
  fx.lambda = 1.0;
  return fx;
}

Fixture make_line_abs() {
  Fixture fx;
  fx.name = "LINE-ABS";
  Problem p;
  p.space = std::make_shared<MetricSpace>(
      MetricSpace::box_grid({GridAxis{-2.0, 2.0, 1e-3}}));
  auto space = p.space;
  p.f = [space](point_id x) { return std::fabs(space->coordinate(x, 0)); };
  p.x0 = 2300;  // coordinate 0.3
  p.epsilon = 0.5;
  p.name = "LINE-ABS";
  fx.problem = std::move(p);
  // delta0 carries headroom over (f(x0)-inf)/eps = 0.6: the grid coordinate
  // of x0 is 0.3 only up to roundoff.
  fx.schedule.delta_head = {0.65};
  fx.schedule.n = 1;
  fx.schedule.tol_d = 1e-4;
  fx.schedule.tol_cert = 1e-6;
  fx.lambda = 0.5 / 0.65;
  return fx;
}

Fixture make_plateau() {
  // Constant objective; the initial sublevel set collapses to {x0}.
  Fixture fx;
  fx.name = "PLATEAU";
  std::vector<std::vector<double>> d(4, std::vector<double>(4, 1.0));
  for (std::size_t i = 0; i < 4; ++i) d[i][i] = 0.0;
  fx.problem =
      finite_problem(std::move(d), {0.7, 0.7, 0.7, 0.7}, 0, 0.5, "PLATEAU");
  fx.schedule.delta_head = {1.0};
  fx.schedule.n = 1;
  fx.lambda = 0.5;
  return fx;
}

Fixture make_inf_at_gap() {
  // Line metric on five points; the infimum sits four units from x0 and
  // enters the initial set exactly at the boundary.
  Fixture fx;
  fx.name = "INF-AT-GAP";
  std::vector<std::vector<double>> d(5, std::vector<double>(5, 0.0));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      d[i][j] = std::fabs(static_cast<double>(i) - static_cast<double>(j));
  fx.problem = finite_problem(std::move(d), {1.0, 0.9, 0.8, 0.5, 0.0}, 0, 4.0,
                              "INF-AT-GAP");
  fx.schedule.delta_head = {0.25};
  fx.schedule.n = 1;
  fx.lambda = 16.0;
  return fx;
}

}  // namespace

std::vector<Fixture> corpus() {
  std::vector<Fixture> out;
  out.push_back(make_p3());
  out.push_back(make_equality_edge());
  out.push_back(make_line_abs());
  out.push_back(make_plateau());
  out.push_back(make_inf_at_gap());
  return out;
}

Fixture corpus_fixture(const std::string& name) {
  for (Fixture& fx : corpus())
    if (fx.name == name) return fx;
  throw InvalidInput("unknown corpus fixture '" + name + "'");
}

MetricSpace random_metric_space(std::uint64_t seed, std::size_t max_points) {
  DetRng rng(seed * 0x9e3779b97f4a7c15ull + 1);
  const std::size_t n = 5 + rng.index(std::min<std::size_t>(max_points, 200) - 4);
  std::vector<std::vector<double>> d(n, std::vector<double>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  auto add_edge = [&](std::size_t a, std::size_t b, double w) {
    if (a == b) return;
    d[a][b] = std::min(d[a][b], w);
    d[b][a] = d[a][b];
  };
  // Random spanning tree keeps the graph connected. Short edges keep the
  // initial sublevel sets populated at unit-scale objective spreads.
  for (std::size_t v = 1; v < n; ++v)
    add_edge(v, rng.index(v), rng.uniform(0.1, 0.6));
  const std::size_t extra = rng.index(n + 1);
  for (std::size_t t = 0; t < extra; ++t)
    add_edge(rng.index(n), rng.index(n), rng.uniform(0.1, 0.6));
  // Shortest-path completion; the result is a metric by construction.
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return MetricSpace::finite(std::move(d));
}

Fixture random_fixture(std::uint64_t seed) {
  auto space =
      std::make_shared<MetricSpace>(random_metric_space(seed));
  DetRng rng(seed * 0x2545f4914f6cdd1dull + 7);
  const std::size_t n = space->size();
  std::vector<double> values(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) values[i] = rng.uniform(0.0, 1.0);
  // Bias the start point away from the minimum (best of three draws) so
  // runs have somewhere to descend to.
  point_id x0 = rng.index(n);
  for (int draw = 0; draw < 2; ++draw) {
    const point_id other = rng.index(n);
    if (values[other] > values[x0]) x0 = other;
  }
  const double gap = values[x0] - *std::min_element(values.begin(), values.end());
  // eps well above the gap and delta0 modestly above its ies2 floor: the
  // initial set then keeps several candidates instead of collapsing.
  const double eps = gap > 0.05 ? gap * (1.0 + rng.uniform(0.4, 2.0))
                                : gap + rng.uniform(0.1, 0.5);
  const double delta0 =
      std::max(gap / eps, 0.1) * (1.0 + rng.uniform(0.02, 0.25));

  Fixture fx;
  fx.name = "RANDOM-" + std::to_string(seed);
  fx.problem.space = space;
  fx.problem.f = [values = std::move(values)](point_id x) { return values[x]; };
  fx.problem.x0 = x0;
  fx.problem.epsilon = eps;
  fx.problem.name = fx.name;
  fx.schedule.delta_head = {delta0};
  fx.schedule.n = 1;
  fx.lambda = eps / delta0;
  return fx;
}

}  // namespace varcert

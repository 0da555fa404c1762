#include "varcert/slope.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace varcert {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void validate_series(const PerturbationSeries& series) {
  if (!series.space) throw InvalidInput("series: missing space");
  if (series.centers.size() != series.weights.size())
    throw InvalidInput("series: centers and weights differ in length");
  if (series.centers.empty()) throw InvalidInput("series: empty");
  if (std::fabs(series.weights.front() - 1.0) > 1e-9)
    throw InvalidInput("series: leading weight must be 1, got " +
                       fmt(series.weights.front()));
  for (double w : series.weights)
    if (!(w >= 0.0)) throw InvalidInput("series: negative weight");
}

// Shared ratio rule: descent of f per unit change of g. Pairs where g
// decreases while f descends are anomalous; their magnitude still enters
// the supremum.
struct RatioOutcome {
  double value = 0.0;
  bool counted = false;
  bool anomaly = false;
};

RatioOutcome descent_ratio(double fx, double fu, double gx, double gu) {
  RatioOutcome out;
  if (gu == gx) return out;
  const double numerator = std::max(fx - fu, 0.0);
  const double denom = gu - gx;
  if (denom > 0.0) {
    out.value = numerator / denom;
    out.counted = true;
    return out;
  }
  if (numerator == 0.0) return out;  // contributes nothing
  out.value = numerator / -denom;
  out.counted = true;
  out.anomaly = true;
  return out;
}

}  // namespace

GaugeSumValue eval_g(const PerturbationSeries& series, point_id u) {
  validate_series(series);
  GaugeSumValue out;
  out.tail_bound = series.weight_tail_sum == 0.0
                       ? 0.0
                       : series.weight_tail_sum * series.rho_diameter;
  const std::size_t count = std::min(series.cap, series.centers.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    sum += series.weights[i] * series.gauge.eval(u, series.centers[i]);
    if (!(sum < series.overflow_threshold)) {
      out.value = kInf;
      out.diverged = true;
      return out;
    }
  }
  out.value = sum;
  return out;
}

SlopeValue nonlocal_slope(const std::function<double(point_id)>& f,
                          const PerturbationSeries& series, point_id x) {
  if (!series.space->is_finite_matrix())
    throw InvalidInput("nonlocal slope: finite spaces only");
  const GaugeSumValue gx = eval_g(series, x);
  if (gx.diverged || gx.value == kInf)
    throw InvalidInput("slope undefined: g is infinite at the base point");
  const double fx = f(x);
  SlopeValue out;
  for (point_id u = 0; u < series.space->size(); ++u) {
    if (u == x) continue;
    const double gu = eval_g(series, u).value;
    const RatioOutcome r = descent_ratio(fx, f(u), gx.value, gu);
    if (r.anomaly) out.anomalies.push_back(u);
    if (r.counted) out.value = std::max(out.value, r.value);
  }
  return out;
}

std::vector<double> local_slope(const std::function<double(point_id)>& f,
                                const PerturbationSeries& series, point_id x,
                                std::span<const double> radii) {
  const MetricSpace& space = *series.space;
  if (space.kind() != MetricSpace::Kind::box_grid)
    throw InvalidInput("local slope: box grids only");
  const GaugeSumValue gx = eval_g(series, x);
  if (gx.diverged || gx.value == kInf)
    throw InvalidInput("slope undefined: g is infinite at the base point");
  const double fx = f(x);
  const double step = space.min_positive_distance();
  std::vector<double> estimates;
  estimates.reserve(radii.size());
  for (const double r : radii) {
    if (r < step)
      throw InvalidInput("local slope: radius " + fmt(r) +
                         " has no grid neighbours (step " + fmt(step) + ")");
    double sup = 0.0;
    for (point_id u = 0; u < space.size(); ++u) {
      if (u == x) continue;
      const double d = space.distance(u, x);
      if (d > r) continue;
      const double gu = eval_g(series, u).value;
      const RatioOutcome ratio = descent_ratio(fx, f(u), gx.value, gu);
      if (ratio.counted) sup = std::max(sup, ratio.value);
    }
    estimates.push_back(sup);
  }
  return estimates;
}

PerturbationSeries series_from_trace(const RunResult& result,
                                     const Problem& problem,
                                     const GaugeFunction& gauge,
                                     const Schedule& schedule, double lambda) {
  if (!(lambda > 0.0)) throw InvalidInput("series: lambda must be positive");
  const double rate = problem.epsilon / lambda;
  const double scale = lambda / problem.epsilon;
  if (std::fabs(schedule.delta(0) * scale - 1.0) > 1e-9)
    throw InvalidInput(
        "series: run is not in the lambda-normalized form (delta0 != "
        "eps/lambda, rate " +
        fmt(rate) + ")");

  const Trace& trace = result.trace;
  const std::size_t last = trace.last_index();
  PerturbationSeries series;
  series.space = problem.space;
  series.gauge = gauge;
  series.rho_diameter = rho_upper_bound(*problem.space, gauge);

  if (schedule.n) {
    // Finite cutoff: head centers, then the limit point carrying the final
    // positive weight.
    const std::size_t n_cut = *schedule.n;
    for (std::size_t i = 0; i + 1 < n_cut; ++i) {
      series.centers.push_back(i <= last ? trace.iterates[i].x : result.xbar);
      series.weights.push_back(schedule.delta(i) * scale);
    }
    series.centers.push_back(result.xbar);
    series.weights.push_back(schedule.delta(n_cut - 1) * scale);
    series.weight_tail_sum = 0.0;
  } else {
    for (std::size_t i = 0; i <= last; ++i) {
      series.centers.push_back(trace.iterates[i].x);
      series.weights.push_back(schedule.delta(i) * scale);
    }
    series.weight_tail_sum = schedule.delta_tail(last) * scale;
  }
  series.cap = series.centers.size();
  return series;
}

CertificateEntry slope_bound_check(const RunResult& result,
                                   const Problem& problem,
                                   const GaugeFunction& gauge,
                                   const Schedule& schedule, double lambda) {
  if (!problem.space->is_finite_matrix())
    throw InvalidInput("slope bound: finite spaces only");
  const PerturbationSeries series =
      series_from_trace(result, problem, gauge, schedule, lambda);
  const SlopeValue slope = nonlocal_slope(problem.f, series, result.xbar);
  CertificateEntry e;
  e.name = "slope-bound";
  e.margin = problem.epsilon / lambda - slope.value;
  e.holds = e.margin >= -schedule.tol_cert;
  e.note = "slope " + fmt(slope.value) + " vs bound " +
           fmt(problem.epsilon / lambda) + "; " +
           std::to_string(slope.anomalies.size()) + " anomalous pair(s)";
  if (!slope.anomalies.empty()) {
    // Descent with decreasing g cannot happen at a certified minimizer.
    e.holds = false;
    for (point_id u : slope.anomalies) {
      if (e.witnesses.size() >= 4) break;
      e.witnesses.push_back(u);
    }
  }
  return e;
}

}  // namespace varcert

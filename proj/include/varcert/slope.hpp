#pragma once

#include <span>

#include "varcert/certify.hpp"

namespace varcert {

// Weighted gauge series g(u) = sum_i weights[i] * rho(u, centers[i]),
// normalized so weights[0] = 1. Evaluation truncates at `cap` terms;
// weight_tail_sum carries the mass beyond that, rho_diameter an upper
// bound for rho, and their product is the reported truncation error.
struct PerturbationSeries {
  SpacePtr space;
  GaugeFunction gauge;
  std::vector<point_id> centers;
  std::vector<double> weights;
  std::size_t cap = 0;
  double weight_tail_sum = 0.0;
  double rho_diameter = 0.0;
  double overflow_threshold = 1e12;
};

struct GaugeSumValue {
  double value = 0.0;       // +inf once partial sums pass the threshold
  double tail_bound = 0.0;  // weight_tail_sum * rho_diameter
  bool diverged = false;
};

GaugeSumValue eval_g(const PerturbationSeries& series, point_id u);

// Maximal descent rate of f at x measured against g: the supremum over
// points with g(u) != g(x) of [f(x)-f(u)]_+ / |g(u)-g(x)|. Pairs where f
// descends while g decreases are impossible at a certified minimizer; they
// are counted by magnitude and reported as anomalies. Finite spaces only;
// throws InvalidInput when g(x) is infinite.
struct SlopeValue {
  double value = 0.0;
  std::vector<point_id> anomalies;
};

SlopeValue nonlocal_slope(const std::function<double(point_id)>& f,
                          const PerturbationSeries& series, point_id x);

// Neighborhood-restricted variant for grids: one estimate per radius, the
// supremum over grid points with 0 < d(u,x) <= r. The estimates approach
// the local limsup from above as the radius shrinks. Throws InvalidInput
// when a radius falls below the grid step.
std::vector<double> local_slope(const std::function<double(point_id)>& f,
                                const PerturbationSeries& series, point_id x,
                                std::span<const double> radii);

// Series read off a finished run, rescaled so the leading weight is 1
// (requires delta0 = eps/lambda, the lambda-normalized form). Finite
// cutoffs center the final weight on xbar.
PerturbationSeries series_from_trace(const RunResult& result,
                                     const Problem& problem,
                                     const GaugeFunction& gauge,
                                     const Schedule& schedule, double lambda);

// Certificate entry: the descent rate of f at xbar against the trace
// series stays below eps/lambda.
CertificateEntry slope_bound_check(const RunResult& result,
                                   const Problem& problem,
                                   const GaugeFunction& gauge,
                                   const Schedule& schedule, double lambda);

}  // namespace varcert

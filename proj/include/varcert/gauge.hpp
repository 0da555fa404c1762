#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "varcert/metric_space.hpp"

namespace varcert {

// A gauge-type perturbation kernel rho: X x X -> [0, +inf].
// Required behaviour:
//   * rho(x,x) = 0;
//   * rho(y,z) <= modulus(eps) implies d(y,z) < eps, for every eps > 0.
// `modulus` is the implementer's explicit witness for the second property;
// it must return a strictly positive value for every positive argument.
// `has_triangle` marks kernels satisfying rho(a,c) <= rho(a,b) + rho(b,c);
// several certificate entries are only available when it is set.
struct GaugeFunction {
  std::function<double(point_id, point_id)> eval;
  std::function<double(double)> modulus;
  bool has_triangle = false;
  std::string description;
};

// rho = d. Modulus eps/2, triangle flag set.
GaugeFunction metric_as_gauge(SpacePtr space);

// rho = d^p for p > 0. Modulus eps^p / 2; the triangle flag is set only for
// p <= 1 (concave powers of a metric keep subadditivity, larger powers do
// not). Throws InvalidInput for p <= 0.
GaugeFunction power_norm_gauge(SpacePtr space, double p);

struct AxiomCheck {
  std::string name;
  bool pass = true;
  std::string witness;  // first counterexample, empty when passing
};

struct AxiomReport {
  std::vector<AxiomCheck> checks;
  bool exhaustive = false;
  bool all_pass() const;
  const AxiomCheck* find(const std::string& name) const;
};

// Samples the gauge axioms on the given space:
//   identity      rho(x,x) = 0
//   nonnegative   rho never evaluates negative (a negative value is a
//                 malformed gauge, reported as a failed check)
//   modulus       rho(y,z) <= modulus(eps) implies d(y,z) < eps on a fixed
//                 ladder of eps values scaled by the space diameter
//   triangle      only when has_triangle is set, slack 1e-12
//   continuity    box grids only: one-step rho jumps must not exceed
//                 coarse-stride jumps (sampled proxy for continuity)
// Exhaustive on finite spaces with at most 200 points, otherwise sampled
// within `sample_budget` point tuples per check.
AxiomReport check_gauge_axioms(const MetricSpace& space,
                               const GaugeFunction& gauge,
                               std::size_t sample_budget,
                               std::uint64_t seed = 1);

// Upper bound for rho over the space: exact pair maximum on small finite
// spaces, the opposite-corner value on grids. Used for truncation bounds.
double rho_upper_bound(const MetricSpace& space, const GaugeFunction& gauge);

}  // namespace varcert

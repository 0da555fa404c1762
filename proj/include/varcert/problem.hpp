#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "varcert/gauge.hpp"
#include "varcert/metric_space.hpp"

namespace varcert {

// Minimization instance: a bounded-below objective f on a complete metric
// space, a reference point x0 and the slack eps with which x0 is expected
// to be near-minimal: f(x0) <= inf f + eps. Values f = +inf are allowed;
// f(x0) must be finite.
struct Problem {
  SpacePtr space;
  std::function<double(point_id)> f;
  point_id x0 = 0;
  double epsilon = 0.0;
  std::string name;
};

// Parameter sequences driving one run.
//   delta : perturbation weights; positive up to the cutoff n, zero after.
//   eps   : selection slacks, strictly positive and nonincreasing to 0
//           (defined for indices >= 1).
//   n     : cutoff index N; nullopt means every weight is positive.
//   cap   : iteration cap K for runs that would otherwise not terminate.
// tol_d is the target metric diameter at termination and tol_cert the slack
// allowed when certifying conclusions afterwards.
struct Schedule {
  std::function<double(std::size_t)> delta;
  std::function<double(std::size_t)> eps;
  std::optional<std::size_t> n;
  std::size_t cap = 40;
  double tol_d = 1e-6;
  double tol_cert = 1e-9;

  // Sum of delta over indices > i; +inf when no closed form is known.
  std::function<double(std::size_t)> delta_tail_sum;
  // Sum of eps over indices > i; +inf when no closed form is known.
  std::function<double(std::size_t)> eps_tail_sum;

  // Index of the last positive weight not exceeding i: min(i, N-1).
  std::size_t j_index(std::size_t i) const {
    if (!n) return i;
    return std::min(i, *n - 1);
  }
  bool finite_n() const { return n.has_value(); }
  double delta_tail(std::size_t i) const {
    return delta_tail_sum ? delta_tail_sum(i) : kInf;
  }
  double eps_tail(std::size_t i) const {
    return eps_tail_sum ? eps_tail_sum(i) : kInf;
  }
};

// Throws InvalidInput if the weight or slack sequence violates its contract
// on the first `cap` indices.
void check_schedule(const Schedule& schedule);

// eps_i = epsilon / (2^i * delta0) for i >= 1: the halving slack sequence.
std::function<double(std::size_t)> default_eps_schedule(double epsilon,
                                                        double delta0);

// Rule-tagged schedule description, as it appears in configs.
enum class DeltaRule { zero_tail, geometric, harmonic };
enum class EpsRule { paper_default, geometric };

struct ScheduleSpec {
  std::vector<double> delta_head = {1.0};
  DeltaRule delta_rule = DeltaRule::zero_tail;
  double delta_ratio = 0.5;
  std::optional<std::size_t> n;  // default: head size for zero_tail, inf else
  EpsRule eps_rule = EpsRule::paper_default;
  double eps_ratio = 0.5;
  std::size_t cap = 40;
  double tol_d = 1e-6;
  double tol_cert = 1e-9;

  Schedule build(double epsilon) const;
};

// Hypothesis check result. eps_min is the near-minimality of x0; the
// delta0 lower bound is the multiplier restriction it induces; the weak
// variant only constrains points whose perturbed value exceeds f(x0).
// Slack fields record by how much each inequality holds (negative =
// violated); computed_inf is the exact infimum found by enumeration.
struct HypothesisReport {
  double computed_inf = kInf;
  bool eps_min_ok = false;
  bool ies2_ok = false;
  bool weak_min_ok = false;
  double eps_min_slack = -kInf;
  double ies2_slack = -kInf;
  double weak_min_slack = -kInf;
};

// Validates a problem/schedule pair. The gauge enters only through the weak
// near-minimality check. Throws InvalidInput for structurally invalid
// problems (empty space, f(x0) = +inf, nonpositive eps).
HypothesisReport validate(const Problem& problem, const Schedule& schedule,
                          const GaugeFunction& gauge);

// Problem file: the finite-space block (n, then the distance matrix), one
// row of n objective values ("inf" accepted), the x0 index, then epsilon.
Problem read_problem(std::istream& in, const std::string& name = "file");
void write_problem(std::ostream& out, const Problem& problem);

}  // namespace varcert

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "varcert/problem.hpp"

namespace varcert {

// Raised when an inner-minimization oracle breaks its contract.
class OracleViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleResult {
  point_id x = 0;
  double slack_bound = 0.0;
};

// Inner minimization contract. The returned point must belong to `feasible`
// and its objective value may exceed the exact feasible minimum by at most
// `slack_bound`, which itself must not exceed `slack_budget`. Runs verify
// both conditions and raise OracleViolation otherwise.
struct Oracle {
  std::function<OracleResult(const std::function<double(point_id)>& objective,
                             std::span<const point_id> feasible,
                             double slack_budget)>
      minimize;
  std::string description;
};

// Full scan, zero slack, ties broken by lowest point index. Throws
// OracleViolation at construction if the space exceeds 1e7 points.
Oracle exhaustive_oracle(const MetricSpace& space);

// Test oracle that deliberately exploits the permitted slack: returns a
// seeded-random feasible point whose value is within fraction*budget of the
// minimum. fraction must lie in [0, 1].
Oracle slack_oracle(double fraction, std::uint64_t seed);

// One row of the construction trace. members holds the full point list of
// S_i (finite spaces and desk-scale grids are enumerated exactly).
struct IterateRecord {
  std::size_t i = 0;
  std::size_t j = 0;           // min(i, N-1)
  point_id x = 0;
  double f_x = 0.0;
  std::vector<point_id> members;
  double eps_i = 0.0;          // row 0 carries eps/delta0
  double delta_j = 0.0;
  double slack_used = 0.0;     // oracle-reported slack bound
  double rho_next = 0.0;       // rho(x_{i+1}, x_i); 0 on the final row
};

struct Trace {
  std::vector<IterateRecord> iterates;
  std::vector<double> rho_chain;     // rho(x_{i+1}, x_i), size = rows - 1
  std::vector<double> rho_to_limit;  // rho(xbar, x_i), one per row

  std::size_t last_index() const { return iterates.size() - 1; }
  std::vector<point_id> centers() const;
  bool ends_singleton() const {
    return !iterates.empty() && iterates.back().members.size() == 1;
  }
};

enum class RunStatus { converged, singleton_early, cap_reached };
std::string to_string(RunStatus status);

struct RunResult {
  point_id xbar = 0;
  Trace trace;
  RunStatus status = RunStatus::cap_reached;
  double final_diam_bound = 0.0;
};

// f(x) + sum_{k<j} delta_k rho(x, x_k): the step-i selection objective.
double selection_objective(const Problem& problem, const GaugeFunction& gauge,
                           const Schedule& schedule,
                           std::span<const point_id> centers, std::size_t j,
                           point_id x);

// Left side of the S_i membership test,
//   f(x) + delta_j rho(x, x_i) + sum_{k<j} delta_k (rho(x,x_k) - rho(x_i,x_k)),
// compared against f(x_i) with exact <= (certificates carry the tolerance).
double membership_lhs(const Problem& problem, const GaugeFunction& gauge,
                      const Schedule& schedule,
                      std::span<const point_id> centers, std::size_t j,
                      point_id x_i, point_id x);

// S_0 = { x : f(x) + delta0 rho(x, x0) <= f(x0) }. Always contains x0.
std::vector<point_id> build_s0(const Problem& problem,
                               const GaugeFunction& gauge, double delta0);

struct StepOutcome {
  point_id x = 0;
  std::vector<point_id> members;  // S_i
  double slack_used = 0.0;
};

// One induction step: select x_i in S_{i-1} within slack delta_j * eps_i of
// the selection objective's minimum, then cut S_i out of S_{i-1}.
StepOutcome step(std::size_t i, std::span<const point_id> prev_members,
                 std::span<const point_id> centers, const Problem& problem,
                 const GaugeFunction& gauge, const Schedule& schedule,
                 const Oracle& oracle);

// Runs the full construction. Stops when the gauge modulus certifies a
// metric diameter below tol_d, when S_i becomes a singleton, or at the cap.
// Requires the weak near-minimality hypothesis; throws InvalidInput if it
// fails.
RunResult run(const Problem& problem, const GaugeFunction& gauge,
              const Schedule& schedule, const Oracle& oracle);

// Trace file: header then one row per iteration,
// i,j,x,f_x,s_size,eps_i,delta_j,slack,rho_next. Deterministic formatting.
void write_trace(std::ostream& out, const RunResult& result);

struct TraceRow {
  std::size_t i = 0;
  std::size_t j = 0;
  point_id x = 0;
  double f_x = 0.0;
  std::size_t s_size = 0;
  double eps_i = 0.0;
  double delta_j = 0.0;
  double slack = 0.0;
  double rho_next = 0.0;
};

std::vector<TraceRow> read_trace(std::istream& in);

}  // namespace varcert

#include "varcert/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

#include "varcert/corpus.hpp"

namespace varcert {
namespace {

double exact_feasible_min(const std::function<double(point_id)>& objective,
                          std::span<const point_id> feasible) {
  double best = kInf;
  for (point_id p : feasible) best = std::min(best, objective(p));
  return best;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<point_id> Trace::centers() const {
  std::vector<point_id> out;
  out.reserve(iterates.size());
  for (const IterateRecord& r : iterates) out.push_back(r.x);
  return out;
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::converged: return "converged";
    case RunStatus::singleton_early: return "singleton-early";
    case RunStatus::cap_reached: return "cap-reached";
  }
  return "unknown";
}

Oracle exhaustive_oracle(const MetricSpace& space) {
  if (space.size() > 10'000'000)
    throw OracleViolation("exhaustive oracle: space exceeds the scan budget");
  Oracle o;
  o.description = "exhaustive";
  o.minimize = [](const std::function<double(point_id)>& objective,
                  std::span<const point_id> feasible,
                  double /*slack_budget*/) -> OracleResult {
    if (feasible.empty())
      throw OracleViolation("exhaustive oracle: empty feasible set");
    double best = kInf;
    point_id best_id = feasible.front();
    for (point_id p : feasible) {
      const double v = objective(p);
      if (v < best) {  // strict: keeps the lowest index on ties
        best = v;
        best_id = p;
      }
    }
    return {best_id, 0.0};
  };
  return o;
}

Oracle slack_oracle(double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw InvalidInput("slack oracle: fraction must lie in [0,1]");
  auto rng = std::make_shared<DetRng>(seed);
  Oracle o;
  o.description = "slack(" + std::to_string(fraction) + ")";
  o.minimize = [rng, fraction](const std::function<double(point_id)>& objective,
                               std::span<const point_id> feasible,
                               double slack_budget) -> OracleResult {
    if (feasible.empty())
      throw OracleViolation("slack oracle: empty feasible set");
    const double best = exact_feasible_min(objective, feasible);
    const double allowed = fraction * slack_budget;
    std::vector<point_id> candidates;
    for (point_id p : feasible)
      if (objective(p) <= best + allowed) candidates.push_back(p);
    const point_id choice = candidates[rng->index(candidates.size())];
    return {choice, allowed};
  };
  return o;
}

double selection_objective(const Problem& problem, const GaugeFunction& gauge,
                           const Schedule& schedule,
                           std::span<const point_id> centers, std::size_t j,
                           point_id x) {
  double value = problem.f(x);
  for (std::size_t k = 0; k < j; ++k)
    value += schedule.delta(k) * gauge.eval(x, centers[k]);
  return value;
}

double membership_lhs(const Problem& problem, const GaugeFunction& gauge,
                      const Schedule& schedule,
                      std::span<const point_id> centers, std::size_t j,
                      point_id x_i, point_id x) {
  double value = problem.f(x) + schedule.delta(j) * gauge.eval(x, x_i);
  for (std::size_t k = 0; k < j; ++k)
    value += schedule.delta(k) *
             (gauge.eval(x, centers[k]) - gauge.eval(x_i, centers[k]));
  return value;
}

std::vector<point_id> build_s0(const Problem& problem,
                               const GaugeFunction& gauge, double delta0) {
  const double f0 = problem.f(problem.x0);
  std::vector<point_id> members;
  const std::size_t n = problem.space->size();
  for (point_id x = 0; x < n; ++x) {
    if (problem.f(x) + delta0 * gauge.eval(x, problem.x0) <= f0)
      members.push_back(x);
  }
  if (std::find(members.begin(), members.end(), problem.x0) == members.end())
    throw std::logic_error("initial set lost x0; gauge identity broken?");
  return members;
}

StepOutcome step(std::size_t i, std::span<const point_id> prev_members,
                 std::span<const point_id> centers, const Problem& problem,
                 const GaugeFunction& gauge, const Schedule& schedule,
                 const Oracle& oracle) {
  if (i == 0) throw InvalidInput("step index starts at 1");
  if (prev_members.empty())
    throw std::logic_error("step: previous set is empty");
  const std::size_t j = schedule.j_index(i);
  const double budget = schedule.delta(j) * schedule.eps(i);
  auto objective = [&](point_id x) {
    return selection_objective(problem, gauge, schedule, centers, j, x);
  };
  const OracleResult picked =
      oracle.minimize(objective, prev_members, budget);

  if (std::find(prev_members.begin(), prev_members.end(), picked.x) ==
      prev_members.end())
    throw OracleViolation("oracle returned an infeasible point at step " +
                          std::to_string(i));
  if (!(picked.slack_bound >= 0.0) || picked.slack_bound > budget)
    throw OracleViolation("oracle slack bound " + fmt(picked.slack_bound) +
                          " outside [0, " + fmt(budget) + "] at step " +
                          std::to_string(i));
  const double best = exact_feasible_min(objective, prev_members);
  if (objective(picked.x) > best + picked.slack_bound)
    throw OracleViolation("oracle exceeded its reported slack at step " +
                          std::to_string(i));

  StepOutcome out;
  out.x = picked.x;
  out.slack_used = picked.slack_bound;
  for (point_id x : prev_members) {
    if (membership_lhs(problem, gauge, schedule, centers, j, picked.x, x) <=
        problem.f(picked.x))
      out.members.push_back(x);
  }
  return out;
}

RunResult run(const Problem& problem, const GaugeFunction& gauge,
              const Schedule& schedule, const Oracle& oracle) {
  check_schedule(schedule);
  const HypothesisReport hypothesis = validate(problem, schedule, gauge);
  if (!hypothesis.weak_min_ok)
    throw InvalidInput(
        "run: x0 is not weakly near-minimal; the construction has no "
        "distance guarantee");

  const double delta0 = schedule.delta(0);
  RunResult result;
  Trace& trace = result.trace;

  IterateRecord row0;
  row0.i = 0;
  row0.j = 0;
  row0.x = problem.x0;
  row0.f_x = problem.f(problem.x0);
  row0.members = build_s0(problem, gauge, delta0);
  row0.eps_i = problem.epsilon / delta0;
  row0.delta_j = delta0;
  trace.iterates.push_back(std::move(row0));

  // A set whose rho-radius is below modulus(tol_d / 2) has metric diameter
  // at most tol_d, and every later iterate stays inside it.
  auto stopped = [&](const IterateRecord& row) -> std::optional<RunStatus> {
    const double threshold = gauge.modulus(schedule.tol_d / 2.0);
    if (row.eps_i <= threshold) return RunStatus::converged;
    if (row.members.size() == 1) return RunStatus::singleton_early;
    if (row.i >= schedule.cap) return RunStatus::cap_reached;
    return std::nullopt;
  };

  std::optional<RunStatus> status = stopped(trace.iterates.front());
  std::vector<point_id> centers = {problem.x0};
  while (!status) {
    const std::size_t i = trace.iterates.back().i + 1;
    const StepOutcome outcome =
        step(i, trace.iterates.back().members, centers, problem, gauge,
             schedule, oracle);
    trace.rho_chain.push_back(gauge.eval(outcome.x, centers.back()));
    trace.iterates.back().rho_next = trace.rho_chain.back();

    IterateRecord row;
    row.i = i;
    row.j = schedule.j_index(i);
    row.x = outcome.x;
    row.f_x = problem.f(outcome.x);
    row.members = std::move(outcome.members);
    row.eps_i = schedule.eps(i);
    row.delta_j = schedule.delta(row.j);
    row.slack_used = outcome.slack_used;
    centers.push_back(outcome.x);
    trace.iterates.push_back(std::move(row));
    status = stopped(trace.iterates.back());
  }

  result.status = *status;
  result.xbar = trace.iterates.back().x;
  trace.rho_to_limit.reserve(trace.iterates.size());
  for (const IterateRecord& row : trace.iterates)
    trace.rho_to_limit.push_back(gauge.eval(result.xbar, row.x));

  // Certified error radius: twice the largest member distance to xbar.
  double radius = 0.0;
  for (point_id x : trace.iterates.back().members)
    radius = std::max(radius, problem.space->distance(x, result.xbar));
  result.final_diam_bound = 2.0 * radius;
  return result;
}

void write_trace(std::ostream& out, const RunResult& result) {
  out << "i,j,x,f_x,s_size,eps_i,delta_j,slack,rho_next\n";
  for (const IterateRecord& r : result.trace.iterates) {
    out << r.i << ',' << r.j << ',' << r.x << ',' << fmt(r.f_x) << ','
        << r.members.size() << ',' << fmt(r.eps_i) << ',' << fmt(r.delta_j)
        << ',' << fmt(r.slack_used) << ',' << fmt(r.rho_next) << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

std::size_t parse_index(const std::string& tok, const char* what) {
  std::size_t used = 0;
  std::size_t value = 0;
  try {
    value = std::stoull(tok, &used);
  } catch (const std::exception&) {
    throw InvalidInput(std::string("trace file: bad ") + what + " '" + tok +
                       "'");
  }
  if (used != tok.size())
    throw InvalidInput(std::string("trace file: bad ") + what + " '" + tok +
                       "'");
  return value;
}

double parse_real(const std::string& tok, const char* what) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw InvalidInput(std::string("trace file: bad ") + what + " '" + tok +
                       "'");
  }
  if (used != tok.size())
    throw InvalidInput(std::string("trace file: bad ") + what + " '" + tok +
                       "'");
  return value;
}

}  // namespace

std::vector<TraceRow> read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw InvalidInput("trace file: missing header");
  if (line != "i,j,x,f_x,s_size,eps_i,delta_j,slack,rho_next")
    throw InvalidInput("trace file: unexpected header '" + line + "'");
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 9)
      throw InvalidInput("trace file: expected 9 fields, got " +
                         std::to_string(fields.size()));
    TraceRow r;
    r.i = parse_index(fields[0], "iteration index");
    r.j = parse_index(fields[1], "weight index");
    r.x = parse_index(fields[2], "point id");
    r.f_x = parse_real(fields[3], "objective value");
    r.s_size = parse_index(fields[4], "set size");
    r.eps_i = parse_real(fields[5], "eps value");
    r.delta_j = parse_real(fields[6], "delta value");
    r.slack = parse_real(fields[7], "slack value");
    r.rho_next = parse_real(fields[8], "chain value");
    rows.push_back(r);
  }
  if (rows.empty()) throw InvalidInput("trace file: no rows");
  return rows;
}

}  // namespace varcert

#include "varcert/problem.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

namespace varcert {

void check_schedule(const Schedule& schedule) {
  if (schedule.cap == 0) throw InvalidInput("schedule: cap must be >= 1");
  if (schedule.n && *schedule.n == 0)
    throw InvalidInput("schedule: cutoff N must be >= 1");
  if (!(schedule.tol_d > 0.0))
    throw InvalidInput("schedule: tol_d must be positive");
  if (!(schedule.tol_cert >= 0.0))
    throw InvalidInput("schedule: tol_cert must be nonnegative");
  for (std::size_t i = 0; i <= schedule.cap; ++i) {
    const double d = schedule.delta(i);
    const bool positive_region = !schedule.n || i < *schedule.n;
    if (positive_region && !(d > 0.0))
      throw InvalidInput("schedule: delta_" + std::to_string(i) +
                         " must be positive, got " + std::to_string(d));
    if (!positive_region && d != 0.0)
      throw InvalidInput("schedule: delta_" + std::to_string(i) +
                         " must be zero past the cutoff");
  }
  double prev = kInf;
  for (std::size_t i = 1; i <= schedule.cap; ++i) {
    const double e = schedule.eps(i);
    if (!(e > 0.0))
      throw InvalidInput("schedule: eps_" + std::to_string(i) +
                         " must be positive");
    if (e > prev)
      throw InvalidInput("schedule: eps sequence increases at index " +
                         std::to_string(i));
    prev = e;
  }
  if (schedule.cap >= 2 && !(schedule.eps(schedule.cap) < schedule.eps(1)))
    throw InvalidInput("schedule: eps sequence does not decrease over the cap");
}

std::function<double(std::size_t)> default_eps_schedule(double epsilon,
                                                        double delta0) {
  if (!(epsilon > 0.0) || !(delta0 > 0.0))
    throw InvalidInput("eps schedule: epsilon and delta0 must be positive");
  return [epsilon, delta0](std::size_t i) {
    return epsilon / (std::ldexp(1.0, static_cast<int>(i)) * delta0);
  };
}

Schedule ScheduleSpec::build(double epsilon) const {
  if (delta_head.empty())
    throw InvalidInput("schedule spec: need at least delta0");
  for (double d : delta_head)
    if (!(d > 0.0))
      throw InvalidInput("schedule spec: listed weights must be positive");
  if (delta_rule != DeltaRule::zero_tail && !(delta_ratio > 0.0))
    throw InvalidInput("schedule spec: tail ratio must be positive");
  if (delta_rule == DeltaRule::geometric && !(delta_ratio < 1.0))
    throw InvalidInput("schedule spec: geometric tail needs ratio < 1");

  std::optional<std::size_t> cutoff = n;
  if (!cutoff && delta_rule == DeltaRule::zero_tail)
    cutoff = delta_head.size();
  if (cutoff && delta_rule == DeltaRule::zero_tail &&
      *cutoff > delta_head.size())
    throw InvalidInput(
        "schedule spec: zero-tail rule cannot reach the requested cutoff");
  if (cutoff && *cutoff == 0)
    throw InvalidInput("schedule spec: cutoff must be >= 1");

  const std::vector<double> head = delta_head;
  const DeltaRule rule = delta_rule;
  const double ratio = delta_ratio;

  Schedule s;
  s.n = cutoff;
  s.cap = cap;
  s.tol_d = tol_d;
  s.tol_cert = tol_cert;
  s.delta = [head, rule, ratio, cutoff](std::size_t i) -> double {
    if (cutoff && i >= *cutoff) return 0.0;
    if (i < head.size()) return head[i];
    const double last = head.back();
    const std::size_t beyond = i - head.size() + 1;
    switch (rule) {
      case DeltaRule::zero_tail:
        return 0.0;  // unreachable when cutoff == head.size()
      case DeltaRule::geometric:
        return last * std::pow(ratio, static_cast<double>(beyond));
      case DeltaRule::harmonic:
        // Continuous continuation of the head: value last at i = size-1.
        return last * static_cast<double>(head.size()) /
               static_cast<double>(i + 1);
    }
    return 0.0;
  };
  auto delta_fn = s.delta;
  s.delta_tail_sum = [head, rule, ratio, cutoff,
                      delta_fn](std::size_t i) -> double {
    if (cutoff) {
      // Finitely many positive weights: sum the remaining ones directly.
      double sum = 0.0;
      for (std::size_t k = i + 1; k < *cutoff; ++k) sum += delta_fn(k);
      return sum;
    }
    switch (rule) {
      case DeltaRule::zero_tail:
        return 0.0;
      case DeltaRule::geometric: {
        double sum = 0.0;
        std::size_t k = i + 1;
        for (; k < head.size(); ++k) sum += head[k];
        // Geometric tail from max(k, head size): delta_k * ratio/(1-ratio)
        // plus the first tail value.
        const double first = delta_fn(std::max(k, head.size()));
        return sum + first / (1.0 - ratio);
      }
      case DeltaRule::harmonic:
        return kInf;
    }
    return kInf;
  };

  const EpsRule erule = eps_rule;
  const double eratio = eps_ratio;
  const double delta0 = delta_head.front();
  if (erule == EpsRule::geometric && !(eratio > 0.0 && eratio < 1.0))
    throw InvalidInput("schedule spec: eps ratio must lie in (0,1)");
  if (erule == EpsRule::paper_default) {
    s.eps = default_eps_schedule(epsilon, delta0);
    s.eps_tail_sum = [epsilon, delta0](std::size_t i) {
      // Halving sequence: the tail past i sums to eps_i itself.
      return epsilon / (std::ldexp(1.0, static_cast<int>(i)) * delta0);
    };
  } else {
    s.eps = [epsilon, eratio](std::size_t i) {
      return epsilon * std::pow(eratio, static_cast<double>(i));
    };
    s.eps_tail_sum = [epsilon, eratio](std::size_t i) {
      return epsilon * std::pow(eratio, static_cast<double>(i + 1)) /
             (1.0 - eratio);
    };
  }
  return s;
}

HypothesisReport validate(const Problem& problem, const Schedule& schedule,
                          const GaugeFunction& gauge) {
  if (!problem.space || problem.space->size() == 0)
    throw InvalidInput("validate: empty space");
  if (problem.x0 >= problem.space->size())
    throw InvalidInput("validate: x0 out of range");
  if (!(problem.epsilon > 0.0))
    throw InvalidInput("validate: epsilon must be positive");
  const double f0 = problem.f(problem.x0);
  if (!std::isfinite(f0))
    throw InvalidInput("validate: f(x0) must be finite");

  const std::size_t count = problem.space->size();
  HypothesisReport rep;
  rep.computed_inf = kInf;
  for (point_id x = 0; x < count; ++x) {
    const double v = problem.f(x);
    if (v < rep.computed_inf) rep.computed_inf = v;
    if (v == -kInf || std::isnan(v))
      throw InvalidInput("validate: objective must be bounded below");
  }

  rep.eps_min_slack = rep.computed_inf + problem.epsilon - f0;
  rep.eps_min_ok = f0 <= rep.computed_inf + problem.epsilon;

  const double delta0 = schedule.delta(0);
  rep.ies2_slack = delta0 - (f0 - rep.computed_inf) / problem.epsilon;
  rep.ies2_ok = rep.ies2_slack >= 0.0;

  // Weak near-minimality: points whose perturbed value already exceeds
  // f(x0) must not undercut f(x0) - eps. Compared as f(x) + eps >= f(x0)
  // so that the strong form implies the weak one even under roundoff.
  rep.weak_min_slack = kInf;
  rep.weak_min_ok = true;
  for (point_id x = 0; x < count; ++x) {
    const double v = problem.f(x);
    if (v + delta0 * gauge.eval(x, problem.x0) > f0) {
      rep.weak_min_slack = std::min(rep.weak_min_slack, v + problem.epsilon - f0);
      if (!(v + problem.epsilon >= f0)) rep.weak_min_ok = false;
    }
  }
  return rep;
}

Problem read_problem(std::istream& in, const std::string& name) {
  auto space = std::make_shared<MetricSpace>(MetricSpace::read_finite(in));
  const std::size_t n = space->size();
  std::vector<double> values(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::string tok;
    if (!(in >> tok)) throw InvalidInput("problem file: truncated f row");
    if (tok == "inf" || tok == "+inf") {
      values[i] = kInf;
    } else {
      try {
        std::size_t used = 0;
        values[i] = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw InvalidInput("problem file: bad f value '" + tok + "'");
      }
      if (!std::isfinite(values[i]))
        throw InvalidInput("problem file: f values must be finite or 'inf'");
    }
  }
  std::size_t x0 = 0;
  double eps = 0.0;
  if (!(in >> x0)) throw InvalidInput("problem file: missing x0 index");
  if (x0 >= n) throw InvalidInput("problem file: x0 index out of range");
  if (!(in >> eps) || !(eps > 0.0))
    throw InvalidInput("problem file: epsilon must be positive");
  if (!std::isfinite(values[x0]))
    throw InvalidInput("problem file: f(x0) must be finite");

  Problem p;
  p.space = space;
  p.f = [values](point_id x) { return values[x]; };
  p.x0 = x0;
  p.epsilon = eps;
  p.name = name;
  return p;
}

void write_problem(std::ostream& out, const Problem& problem) {
  const MetricSpace& space = *problem.space;
  if (!space.is_finite_matrix())
    throw InvalidInput("problem files support finite spaces only");
  const std::size_t n = space.size();
  char buf[64];
  out << n << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", space.distance(i, j));
      out << (j ? " " : "") << buf;
    }
    out << "\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double v = problem.f(i);
    if (v == kInf) {
      out << (i ? " inf" : "inf");
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << (i ? " " : "") << buf;
    }
  }
  out << "\n" << problem.x0 << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", problem.epsilon);
  out << buf << "\n";
}

}  // namespace varcert

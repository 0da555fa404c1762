#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "varcert/solver.hpp"

namespace varcert {

// One certified conclusion. margin is the smallest slack by which the
// inequality holds (negative = violation, +inf = vacuous); witnesses carry
// the points or iterate indices realizing the worst margin or the first
// violation. Entries marked skipped did not apply and do not count against
// the overall verdict.
struct CertificateEntry {
  std::string name;
  bool holds = true;
  bool skipped = false;
  double margin = kInf;
  std::vector<std::size_t> witnesses;
  std::string note;
};

struct Certificate {
  std::vector<CertificateEntry> entries;
  bool overall() const;
  const CertificateEntry* find(std::string_view name) const;
  void append(CertificateEntry entry) { entries.push_back(std::move(entry)); }
  void append(std::vector<CertificateEntry> more);
};

std::string certificate_to_json(const Certificate& cert, double tol_cert);

// Parameters of a run executed through the normed-space rescaling: the
// trace was produced with epsilon' = base_epsilon * base_delta(0),
// eps_i' = base_eps_seq(i)^p and delta_i' = (base_epsilon/lambda^p) *
// base_delta(i), with gauge rho = d^p. Checks raise InvalidInput when the
// run parameters do not match this substitution.
struct T4Params {
  double lambda = 1.0;
  double p = 2.0;
  double base_epsilon = 1.0;
  std::function<double(std::size_t)> base_delta;
  std::function<double(std::size_t)> base_eps_seq;
};

struct CertifyOptions {
  // Distance budget lambda = epsilon/delta0; enables the Ekeland-form checks
  // on N = 1 runs with the plain metric gauge.
  std::optional<double> lambda;
  std::optional<T4Params> t4;
};

// --- individual conclusion checks (exposed for tests) ---

// rho(xbar,x0) <= eps/delta0 and rho(xbar,x_i) <= eps_i for recorded i >= 1.
std::vector<CertificateEntry> check_distance_bounds(
    const Problem& problem, const GaugeFunction& gauge,
    const Schedule& schedule, const RunResult& result);

// The perturbed-value inequality f(xbar) + <perturbation at xbar> <= f(x0),
// in the series form (no cutoff) or the tail-chain form (finite cutoff).
CertificateEntry check_value_bound(const Problem& problem,
                                   const GaugeFunction& gauge,
                                   const Schedule& schedule,
                                   const RunResult& result);

// Strict minimality of xbar for the perturbed objective, quantified over
// every point of the space.
CertificateEntry check_strict_minimality(const Problem& problem,
                                         const GaugeFunction& gauge,
                                         const Schedule& schedule,
                                         const RunResult& result);

// Finite-cutoff consequences: the two value bounds, the two pointwise
// domination families with their per-point threshold index, the nonstrict
// bound at the limit point, and the early-dropout alternative bound.
std::vector<CertificateEntry> check_finite_cutoff(const Problem& problem,
                                                  const GaugeFunction& gauge,
                                                  const Schedule& schedule,
                                                  const RunResult& result);

// Consequences available when the gauge satisfies the triangle inequality:
// the chain comparison, the implication pattern between domination forms,
// and strict minimality of the limit-centered perturbation. Entries come
// back skipped when the flag is missing.
std::vector<CertificateEntry> check_triangle_consequences(
    const Problem& problem, const GaugeFunction& gauge,
    const Schedule& schedule, const RunResult& result);

// Ekeland-form conclusions for N = 1 runs with rho = d and delta0 = eps/lambda.
std::vector<CertificateEntry> check_ekeland(const Problem& problem,
                                            const GaugeFunction& gauge,
                                            const Schedule& schedule,
                                            const RunResult& result,
                                            double lambda);

// Normed-space conclusions for rescaled runs on grids with rho = d^p,
// including the finite-difference smoothness check for p > 1.
std::vector<CertificateEntry> check_banach_scaling(const Problem& problem,
                                                   const GaugeFunction& gauge,
                                                   const Schedule& schedule,
                                                   const RunResult& result,
                                                   const T4Params& params);

// Telescoped value inequalities between recorded iterates; these hold by
// construction and pin the trace to the recurrence that produced it.
CertificateEntry check_telescoping(const Problem& problem,
                                   const GaugeFunction& gauge,
                                   const Schedule& schedule,
                                   const RunResult& result);

// Full certificate for one run (everything applicable except the slope
// bound, which lives in the slope module).
Certificate certify_run(const Problem& problem, const GaugeFunction& gauge,
                        const Schedule& schedule, const RunResult& result,
                        const CertifyOptions& options = {});

// --- artifact path ---

struct Reconstruction {
  RunResult result;
  CertificateEntry consistency;  // name "trace-consistency"
};

// Rebuilds the run from exported rows by replaying the recurrence, checking
// every recorded field against its recomputation: point memberships, set
// sizes, objective values, eps/delta columns, selection slack, the rho
// chain, the per-set radius bound and the value monotonicity.
Reconstruction reconstruct_run(const std::vector<TraceRow>& rows,
                               const Problem& problem,
                               const GaugeFunction& gauge,
                               const Schedule& schedule);

}  // namespace varcert

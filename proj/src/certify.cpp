#include "varcert/certify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"

namespace varcert {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Precomputed view of one run. Indices k <= last address recorded iterates;
// when the final set is the singleton {xbar} the construction provably
// continues with x_k = xbar forever, so such runs expose one virtual index
// past the end with rho(xbar, x_k) = 0 and zero chain terms.
struct TraceView {
  const Problem& pb;
  const GaugeFunction& gauge;
  const Schedule& sch;
  const RunResult& rr;
  double tol;
  std::size_t last;
  std::vector<point_id> centers;
  std::vector<double> deltas;        // delta_0 .. delta_last
  std::vector<double> chain_prefix;  // [n] = sum_{k<n} rho(x_{k+1},x_k)
  std::vector<double> tail_best;     // [m] = max_{n in [m,last]} (chain_prefix[n] + rho_lim[n])
  bool singleton_end;
  double f0, fbar, eps, delta0;
  std::optional<std::size_t> N;

  TraceView(const Problem& p, const GaugeFunction& g, const Schedule& s,
            const RunResult& r)
      : pb(p), gauge(g), sch(s), rr(r), tol(s.tol_cert) {
    const Trace& tr = r.trace;
    last = tr.last_index();
    centers = tr.centers();
    deltas.resize(last + 1);
    for (std::size_t k = 0; k <= last; ++k) deltas[k] = s.delta(k);
    chain_prefix.assign(last + 1, 0.0);
    for (std::size_t k = 0; k < last; ++k)
      chain_prefix[k + 1] = chain_prefix[k] + tr.rho_chain[k];
    tail_best.assign(last + 1, -kInf);
    for (std::size_t m = last + 1; m-- > 0;) {
      tail_best[m] = chain_prefix[m] + tr.rho_to_limit[m];
      if (m < last) tail_best[m] = std::max(tail_best[m], tail_best[m + 1]);
    }
    singleton_end = tr.ends_singleton();
    f0 = tr.iterates.front().f_x;
    fbar = p.f(r.xbar);
    eps = p.epsilon;
    delta0 = s.delta(0);
    N = s.n;
  }

  double rho_lim(std::size_t k) const {
    return k <= last ? rr.trace.rho_to_limit[k] : 0.0;
  }
  point_id center(std::size_t k) const {
    return k <= last ? centers[k] : rr.xbar;
  }
  // sup_{n >= m} (sum_{k=m}^{n-1} rho(x_{k+1},x_k) + rho(xbar,x_n)).
  double sup_tail_from(std::size_t m) const {
    if (m > last) return 0.0;
    return tail_best[m] - chain_prefix[m];
  }
  // Index range usable as "m >= N" candidates: recorded ones, then the
  // virtual continuation when available.
  struct MCand {
    std::size_t m;
    bool virt;
  };
  std::vector<MCand> m_candidates() const {
    std::vector<MCand> out;
    if (N) {
      for (std::size_t m = *N; m <= last; ++m) out.push_back({m, false});
      if (singleton_end) out.push_back({last + 1, true});
    }
    return out;
  }
  // True when sums reaching index `k` can be evaluated faithfully.
  bool reachable(std::size_t k) const { return k <= last || singleton_end; }

  // sum_{i=0}^{N-2} delta_i rho(x, x_i); `truncated` reports whether part of
  // the range fell past the recorded trace with no virtual continuation.
  double head_sum_at(point_id x, bool* truncated = nullptr) const {
    double sum = 0.0;
    const std::size_t count = *N >= 1 ? *N - 1 : 0;
    for (std::size_t i = 0; i < count; ++i) {
      if (i <= last) {
        sum += sch.delta(i) * gauge.eval(x, centers[i]);
      } else if (singleton_end) {
        sum += sch.delta(i) * gauge.eval(x, rr.xbar);
      } else if (truncated) {
        *truncated = true;
      }
    }
    return sum;
  }
  // Same head sum evaluated at xbar (virtual terms vanish).
  double head_sum_at_limit(bool* truncated = nullptr) const {
    double sum = 0.0;
    const std::size_t count = *N >= 1 ? *N - 1 : 0;
    for (std::size_t i = 0; i < count; ++i) {
      if (i <= last) {
        sum += sch.delta(i) * rho_lim(i);
      } else if (!singleton_end && truncated) {
        *truncated = true;
      }
    }
    return sum;
  }
};

CertificateEntry vacuous(std::string name, std::string note) {
  CertificateEntry e;
  e.name = std::move(name);
  e.margin = kInf;
  e.note = std::move(note);
  return e;
}

constexpr std::size_t kMaxWitnesses = 4;

void add_witness(CertificateEntry& e, std::size_t w) {
  if (e.witnesses.size() < kMaxWitnesses) e.witnesses.push_back(w);
}

}  // namespace

bool Certificate::overall() const {
  for (const CertificateEntry& e : entries)
    if (!e.holds) return false;
  return true;
}

const CertificateEntry* Certificate::find(std::string_view name) const {
  for (const CertificateEntry& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

void Certificate::append(std::vector<CertificateEntry> more) {
  for (CertificateEntry& e : more) entries.push_back(std::move(e));
}

std::string certificate_to_json(const Certificate& cert, double tol_cert) {
  nlohmann::ordered_json root;
  root["overall"] = cert.overall();
  root["tol_cert"] = tol_cert;
  root["entries"] = nlohmann::ordered_json::array();
  for (const CertificateEntry& e : cert.entries) {
    nlohmann::ordered_json je;
    je["name"] = e.name;
    je["holds"] = e.holds;
    je["skipped"] = e.skipped;
    if (std::isfinite(e.margin))
      je["margin"] = e.margin;
    else
      je["margin"] = nullptr;
    je["witnesses"] = e.witnesses;
    je["note"] = e.note;
    root["entries"].push_back(std::move(je));
  }
  return root.dump(2) + "\n";
}

std::vector<CertificateEntry> check_distance_bounds(const Problem& problem,
                                                    const GaugeFunction& gauge,
                                                    const Schedule& schedule,
                                                    const RunResult& result) {
  TraceView v(problem, gauge, schedule, result);
  std::vector<CertificateEntry> out;

  CertificateEntry origin;
  origin.name = "rho-origin-bound";
  origin.margin = v.eps / v.delta0 - v.rho_lim(0);
  origin.holds = origin.margin >= -v.tol;
  if (!origin.holds) add_witness(origin, result.xbar);
  out.push_back(std::move(origin));

  CertificateEntry iter;
  iter.name = "rho-iterate-bounds";
  iter.margin = kInf;
  for (std::size_t i = 1; i <= v.last; ++i) {
    const double m = schedule.eps(i) - v.rho_lim(i);
    if (m < iter.margin) {
      iter.margin = m;
      iter.witnesses.clear();
      add_witness(iter, i);
    }
  }
  iter.holds = !(iter.margin < -v.tol);
  if (v.last == 0) iter.note = "no iterates past x0";
  out.push_back(std::move(iter));
  return out;
}

CertificateEntry check_value_bound(const Problem& problem,
                                   const GaugeFunction& gauge,
                                   const Schedule& schedule,
                                   const RunResult& result) {
  TraceView v(problem, gauge, schedule, result);
  CertificateEntry e;
  e.name = "perturbed-value-bound";

  if (!v.N) {
    // Series form: partial sums of delta_i rho(xbar, x_i) must climb to a
    // value f(x0) - f(xbar) still admits.
    double sum = 0.0;
    for (std::size_t k = 0; k <= v.last; ++k) {
      const double term = v.deltas[k] * v.rho_lim(k);
      if (term < 0.0) {
        e.holds = false;
        e.note = "negative series term at index " + std::to_string(k);
        add_witness(e, k);
        return e;
      }
      sum += term;
    }
    e.margin = v.f0 - v.fbar - sum;
    e.holds = e.margin >= -v.tol;
    const double tail =
        v.singleton_end
            ? 0.0
            : schedule.delta_tail(v.last) *
                  rho_upper_bound(*problem.space, gauge);
    e.note = "series truncated at i=" + std::to_string(v.last) +
             ", tail bound " + fmt(tail);
    return e;
  }

  const std::size_t N = *v.N;
  bool truncated = false;
  const double head = v.head_sum_at_limit(&truncated);
  double sup = 0.0;
  if (N >= 1 && N - 1 <= v.last)
    sup = v.sup_tail_from(N - 1);
  else if (!v.singleton_end)
    truncated = true;
  const double dN1 = schedule.delta(N - 1);
  e.margin = v.f0 - (v.fbar + head + dN1 * sup);
  e.holds = e.margin >= -v.tol;

  // The chain partial sums must stay under the budget the inequality leaves
  // for them. Tolerance scaled by 1/delta so a boundary-tight main margin
  // cannot trip this sub-check spuriously.
  if (N - 1 <= v.last && dN1 > 0.0) {
    const double budget = (v.f0 - v.fbar - head) / dN1;
    const double slack = v.tol * std::max(1.0, 1.0 / dN1);
    for (std::size_t n = N - 1; n <= v.last; ++n) {
      const double partial = v.chain_prefix[n] - v.chain_prefix[N - 1];
      if (partial > budget + slack) {
        e.holds = false;
        e.note = "chain partial sum " + fmt(partial) + " exceeds budget " +
                 fmt(budget) + " at n=" + std::to_string(n);
        add_witness(e, n);
        return e;
      }
    }
  }
  if (truncated)
    e.note = "trace shorter than the cutoff; sums truncated at i=" +
             std::to_string(v.last);
  return e;
}

CertificateEntry check_strict_minimality(const Problem& problem,
                                         const GaugeFunction& gauge,
                                         const Schedule& schedule,
                                         const RunResult& result) {
  TraceView v(problem, gauge, schedule, result);
  CertificateEntry e;
  e.name = "strict-global-min";
  e.margin = kInf;
  const std::size_t n_pts = problem.space->size();

  if (!v.N) {
    double rhs = v.fbar;
    for (std::size_t k = 0; k <= v.last; ++k) rhs += v.deltas[k] * v.rho_lim(k);
    for (point_id x = 0; x < n_pts; ++x) {
      if (x == result.xbar) continue;
      double lhs = problem.f(x);
      for (std::size_t k = 0; k <= v.last && lhs < kInf; ++k)
        lhs += v.deltas[k] * gauge.eval(x, v.centers[k]);
      if (lhs == kInf) continue;  // divergent perturbations pass trivially
      const double m = lhs - rhs;
      if (m < e.margin) {
        e.margin = m;
        e.witnesses.clear();
        add_witness(e, x);
      }
    }
    e.holds = e.margin > -v.tol;
    if (!v.singleton_end)
      e.note = "sums truncated at i=" + std::to_string(v.last) +
               ", tail bound " +
               fmt(schedule.delta_tail(v.last) *
                   rho_upper_bound(*problem.space, gauge));
    return e;
  }

  // Finite cutoff: for each x != xbar find the earliest recorded index m0
  // past the cutoff from which the domination inequality holds at every
  // later recorded index.
  const std::size_t N = *v.N;
  const double dN1 = schedule.delta(N - 1);
  const auto cands = v.m_candidates();
  if (cands.empty()) {
    e.holds = false;
    e.note = "no recorded iterate at or past the cutoff; cannot locate m0";
    return e;
  }
  bool truncated = false;
  const double base_rhs = v.fbar + v.head_sum_at_limit(&truncated);
  for (point_id x = 0; x < n_pts; ++x) {
    if (x == result.xbar) continue;
    bool head_trunc = false;
    const double lhs_head = problem.f(x) + v.head_sum_at(x, &head_trunc);
    truncated = truncated || head_trunc;
    std::vector<double> margins(cands.size(), kInf);
    for (std::size_t t = 0; t < cands.size(); ++t) {
      const auto& c = cands[t];
      const double lhs =
          lhs_head + dN1 * (c.virt ? gauge.eval(x, result.xbar)
                                   : gauge.eval(x, v.centers[c.m]));
      const double rhs = base_rhs + dN1 * v.sup_tail_from(c.m);
      margins[t] = lhs - rhs;
    }
    // m0 = start of the longest suffix of candidates on which the strict
    // inequality holds; the conclusion needs such a suffix to exist.
    std::size_t m0 = cands.size();
    double worst = kInf;
    for (std::size_t t = cands.size(); t-- > 0;) {
      if (!(margins[t] > -v.tol)) break;
      m0 = t;
      worst = std::min(worst, margins[t]);
    }
    if (m0 == cands.size()) {
      e.holds = false;
      add_witness(e, x);
      e.margin = std::min(e.margin, margins.back());
      e.note = "no threshold index m0 found within the trace";
      continue;
    }
    if (worst < e.margin) {
      e.margin = worst;
      if (e.holds) {
        e.witnesses.clear();
        add_witness(e, x);
      }
    }
  }
  if (truncated)
    e.note = "head sums truncated at i=" + std::to_string(v.last);
  return e;
}

std::vector<CertificateEntry> check_finite_cutoff(const Problem& problem,
                                                  const GaugeFunction& gauge,
                                                  const Schedule& schedule,
                                                  const RunResult& result) {
  TraceView v(problem, gauge, schedule, result);
  if (!v.N)
    throw InvalidInput("finite-cutoff checks require a finite N");
  const std::size_t N = *v.N;
  const double dN1 = schedule.delta(N - 1);
  const std::size_t n_pts = problem.space->size();
  std::vector<CertificateEntry> out;

  bool truncated = false;
  const double head_limit = v.head_sum_at_limit(&truncated);

  {  // Value bound with the full weight block, rho evaluated at the limit.
    CertificateEntry e;
    e.name = "cutoff-value-bound";
    double sum = head_limit;
    if (N >= 1) sum += dN1 * (v.reachable(N - 1) ? v.rho_lim(N - 1) : 0.0);
    e.margin = v.f0 - (v.fbar + sum);
    e.holds = e.margin >= -v.tol;
    if (!v.reachable(N - 1)) e.note = "cutoff index past the recorded trace";
    out.push_back(std::move(e));
  }

  {  // Value bound with the residual chain in place of the last rho term.
    CertificateEntry e;
    e.name = "chain-value-bound";
    double chain_sum = 0.0;
    if (N - 1 <= v.last)
      chain_sum = v.chain_prefix[v.last] - v.chain_prefix[N - 1];
    e.margin = v.f0 - (v.fbar + head_limit + dN1 * chain_sum);
    e.holds = e.margin >= -v.tol;
    const double tail = v.singleton_end ? 0.0 : schedule.eps_tail(v.last);
    e.note = "chain truncated at i=" + std::to_string(v.last) +
             ", tail bound " + fmt(dN1 * tail);
    out.push_back(std::move(e));
  }

  // Pointwise domination families. For each x != xbar a threshold index m0
  // must exist past the cutoff; both right-hand sides are tried at every
  // candidate index.
  const auto cands = v.m_candidates();
  CertificateEntry point_dom;
  point_dom.name = "pointwise-domination";
  point_dom.margin = kInf;
  CertificateEntry chain_dom;
  chain_dom.name = "chain-domination";
  chain_dom.margin = kInf;
  if (cands.empty()) {
    point_dom.holds = false;
    chain_dom.holds = false;
    point_dom.note = chain_dom.note =
        "no recorded iterate at or past the cutoff";
  }
  const double base_rhs = v.fbar + head_limit;
  for (point_id x = 0; x < n_pts && !cands.empty(); ++x) {
    if (x == result.xbar) continue;
    const double lhs_head = problem.f(x) + v.head_sum_at(x);
    std::vector<double> point_margins(cands.size(), kInf);
    std::vector<double> chain_margins(cands.size(), kInf);
    for (std::size_t t = 0; t < cands.size(); ++t) {
      const auto& c = cands[t];
      const double lhs =
          lhs_head + dN1 * (c.virt ? gauge.eval(x, result.xbar)
                                   : gauge.eval(x, v.centers[c.m]));
      const double rho_m = c.virt ? 0.0 : v.rho_lim(c.m);
      const double chain_tail =
          c.virt ? 0.0 : v.chain_prefix[v.last] - v.chain_prefix[c.m];
      point_margins[t] = lhs - (base_rhs + dN1 * rho_m);
      chain_margins[t] = lhs - (base_rhs + dN1 * chain_tail);
    }
    auto suffix_scan = [&](const std::vector<double>& margins,
                           CertificateEntry& entry) {
      std::size_t m0 = margins.size();
      double worst = kInf;
      for (std::size_t t = margins.size(); t-- > 0;) {
        if (!(margins[t] > -v.tol)) break;
        m0 = t;
        worst = std::min(worst, margins[t]);
      }
      if (m0 == margins.size()) {
        entry.holds = false;
        add_witness(entry, x);
        entry.note = "no threshold index m0 found within the trace";
      } else if (worst < entry.margin) {
        entry.margin = worst;
      }
      return m0 < margins.size();
    };
    suffix_scan(point_margins, point_dom);
    suffix_scan(chain_margins, chain_dom);
  }
  out.push_back(std::move(point_dom));
  out.push_back(std::move(chain_dom));

  {  // Nonstrict bound with the limit point as the last center, all x.
    CertificateEntry e;
    e.name = "limit-center-lower-bound";
    e.margin = kInf;
    for (point_id x = 0; x < n_pts; ++x) {
      const double lhs =
          problem.f(x) + v.head_sum_at(x) + dN1 * gauge.eval(x, result.xbar);
      if (lhs == kInf) continue;
      const double m = lhs - base_rhs;
      if (m < e.margin) {
        e.margin = m;
        e.witnesses.clear();
        add_witness(e, x);
      }
    }
    e.holds = e.margin >= -v.tol;
    out.push_back(std::move(e));
  }

  {  // Early dropout: points expelled before the cutoff obey the
     // alternative bound built from their own expulsion index.
    CertificateEntry e;
    e.name = "early-dropout-bound";
    e.margin = kInf;
    double sup_from_cut = 0.0;
    bool sup_known = true;
    if (N <= v.last)
      sup_from_cut = v.tail_best[N] - v.chain_prefix[N - 1];
    else if (!v.singleton_end)
      sup_known = false;
    std::size_t dropouts = 0;
    for (point_id x = 0; x < n_pts && sup_known; ++x) {
      if (x == result.xbar) continue;
      // First recorded set that no longer contains x.
      std::size_t m0 = v.last + 1;
      for (std::size_t m = 0; m <= v.last; ++m) {
        const auto& members = result.trace.iterates[m].members;
        if (!std::binary_search(members.begin(), members.end(), x)) {
          m0 = m;
          break;
        }
      }
      if (m0 >= N || m0 > v.last) continue;  // not an early dropout
      ++dropouts;
      double lhs = problem.f(x);
      for (std::size_t i = 0; i <= m0; ++i)
        lhs += schedule.delta(i) * gauge.eval(x, v.centers[i]);
      const double rhs = v.fbar + head_limit + dN1 * sup_from_cut;
      const double m = lhs - rhs;
      if (m < e.margin) {
        e.margin = m;
        e.witnesses.clear();
        add_witness(e, x);
      }
      if (!(m > -v.tol)) e.holds = false;
    }
    if (!sup_known) {
      e.note = "tail sup unavailable; trace ends before the cutoff";
      e.margin = kInf;
    } else if (dropouts == 0) {
      e.note = "no early dropouts";
    } else {
      e.note = std::to_string(dropouts) + " early dropout(s) checked";
    }
    out.push_back(std::move(e));
  }

  if (truncated)
    out.front().note += " (head sums truncated)";
  return out;
}

std::vector<CertificateEntry> check_triangle_consequences(
    const Problem& problem, const GaugeFunction& gauge,
    const Schedule& schedule, const RunResult& result) {
  TraceView v(problem, gauge, schedule, result);
  if (!v.N)
    throw InvalidInput("triangle-consequence checks require a finite N");
  std::vector<CertificateEntry> out;
  if (!gauge.has_triangle) {
    for (const char* name :
         {"gauge-chain-inequality", "domination-implications",
          "strict-min-with-triangle"}) {
      CertificateEntry e = vacuous(name, "skipped: gauge lacks the triangle flag");
      e.skipped = true;
      out.push_back(std::move(e));
    }
    return out;
  }

  const std::size_t N = *v.N;
  const double dN1 = schedule.delta(N - 1);
  const std::size_t n_pts = problem.space->size();
  const double base_rhs = v.fbar + v.head_sum_at_limit();

  {  // rho(xbar, x_m) <= chain(m..n-1) + rho(xbar, x_n) for recorded m < n.
    CertificateEntry e;
    e.name = "gauge-chain-inequality";
    e.margin = kInf;
    for (std::size_t m = 0; m < v.last; ++m) {
      for (std::size_t n = m + 1; n <= v.last; ++n) {
        const double rhs =
            (v.chain_prefix[n] - v.chain_prefix[m]) + v.rho_lim(n);
        const double margin = rhs - v.rho_lim(m);
        if (margin < e.margin) {
          e.margin = margin;
          e.witnesses.clear();
          add_witness(e, m);
          add_witness(e, n);
        }
      }
    }
    e.holds = !(e.margin < -v.tol);
    if (v.last == 0) e.note = "single-row trace";
    out.push_back(std::move(e));
  }

  // Strict minimality of the limit-centered perturbation (per point), and
  // the implication pattern between the domination families.
  CertificateEntry strict;
  strict.name = "strict-min-with-triangle";
  strict.margin = kInf;
  std::size_t chain_implies_point_violations = 0;
  std::size_t point_implies_strict_violations = 0;
  const auto cands = v.m_candidates();
  for (point_id x = 0; x < n_pts; ++x) {
    if (x == result.xbar) continue;
    const double lhs_head = problem.f(x) + v.head_sum_at(x);
    const double strict_margin =
        lhs_head + dN1 * gauge.eval(x, result.xbar) - base_rhs;
    if (strict_margin < strict.margin) {
      strict.margin = strict_margin;
      strict.witnesses.clear();
      add_witness(strict, x);
    }
    if (!(strict_margin > -v.tol)) strict.holds = false;

    bool point_established = false;  // domination holds from some m0 on
    for (std::size_t t = 0; t < cands.size(); ++t) {
      const auto& c = cands[t];
      const double lhs =
          lhs_head + dN1 * (c.virt ? gauge.eval(x, result.xbar)
                                   : gauge.eval(x, v.centers[c.m]));
      const double rho_m = c.virt ? 0.0 : v.rho_lim(c.m);
      const double chain_tail =
          c.virt ? 0.0 : v.chain_prefix[v.last] - v.chain_prefix[c.m];
      const bool point_holds = lhs - (base_rhs + dN1 * rho_m) > -v.tol;
      const bool chain_holds = lhs - (base_rhs + dN1 * chain_tail) > -v.tol;
      if (chain_holds && !point_holds) ++chain_implies_point_violations;
      if (point_holds && t + 1 == cands.size()) point_established = true;
    }
    if (point_established && !(strict_margin > -v.tol))
      ++point_implies_strict_violations;
  }

  {  // Entry-level implication: the chain value bound forces the cutoff one.
    CertificateEntry e;
    e.name = "domination-implications";
    const auto finite_entries =
        check_finite_cutoff(problem, gauge, schedule, result);
    const CertificateEntry* cutoff = nullptr;
    const CertificateEntry* chain = nullptr;
    for (const auto& fe : finite_entries) {
      if (fe.name == "cutoff-value-bound") cutoff = &fe;
      if (fe.name == "chain-value-bound") chain = &fe;
    }
    std::size_t value_violations = 0;
    if (chain && cutoff && chain->holds && !cutoff->holds) ++value_violations;
    const std::size_t total = value_violations +
                              chain_implies_point_violations +
                              point_implies_strict_violations;
    e.holds = total == 0;
    e.margin = e.holds ? kInf : -1.0;
    e.note = "violations: value=" + std::to_string(value_violations) +
             " chain->point=" + std::to_string(chain_implies_point_violations) +
             " point->strict=" + std::to_string(point_implies_strict_violations);
    out.push_back(std::move(e));
  }
  out.push_back(std::move(strict));
  return out;
}

std::vector<CertificateEntry> check_ekeland(const Problem& problem,
                                            const GaugeFunction& gauge,
                                            const Schedule& schedule,
                                            const RunResult& result,
                                            double lambda) {
  TraceView v(problem, gauge, schedule, result);
  if (!v.N || *v.N != 1)
    throw InvalidInput("Ekeland-form checks require N = 1");
  if (std::fabs(v.delta0 * lambda - v.eps) >
      1e-9 * std::max(1.0, std::fabs(v.eps)))
    throw InvalidInput("Ekeland-form checks require delta0 = eps/lambda");
  const double rate = v.eps / lambda;
  const MetricSpace& space = *problem.space;
  std::vector<CertificateEntry> out;

  CertificateEntry dist;
  dist.name = "ekeland-distance";
  dist.margin = lambda - space.distance(result.xbar, problem.x0);
  dist.holds = dist.margin >= -v.tol;
  out.push_back(std::move(dist));

  CertificateEntry value;
  value.name = "ekeland-value";
  value.margin =
      v.f0 - (v.fbar + rate * space.distance(result.xbar, problem.x0));
  value.holds = value.margin >= -v.tol;
  out.push_back(std::move(value));

  CertificateEntry strict;
  strict.name = "ekeland-strict";
  strict.margin = kInf;
  for (point_id x = 0; x < space.size(); ++x) {
    if (x == result.xbar) continue;
    const double lhs = problem.f(x) + rate * space.distance(x, result.xbar);
    if (lhs == kInf) continue;
    const double m = lhs - v.fbar;
    if (m < strict.margin) {
      strict.margin = m;
      strict.witnesses.clear();
      add_witness(strict, x);
    }
  }
  strict.holds = strict.margin > -v.tol;
  if (space.size() == 1) strict.note = "single-point space";
  out.push_back(std::move(strict));
  return out;
}

std::vector<CertificateEntry> check_banach_scaling(const Problem& problem,
                                                   const GaugeFunction& gauge,
                                                   const Schedule& schedule,
                                                   const RunResult& result,
                                                   const T4Params& params) {
  TraceView v(problem, gauge, schedule, result);
  if (problem.space->kind() != MetricSpace::Kind::box_grid)
    throw InvalidInput("normed-space checks require a box grid");
  if (v.N)
    throw InvalidInput("normed-space checks require an infinite weight tail");
  const double lp = std::pow(params.lambda, params.p);
  const double scale = params.base_epsilon / lp;
  // The trace must come from the rescaled run.
  if (std::fabs(problem.epsilon - params.base_epsilon * params.base_delta(0)) >
      1e-9 * std::max(1.0, problem.epsilon))
    throw InvalidInput("scaling mismatch: epsilon != base_eps * base_delta0");
  for (std::size_t i = 0; i <= v.last + 1; ++i) {
    const double want = scale * params.base_delta(i);
    if (std::fabs(schedule.delta(i) - want) > 1e-9 * std::max(1.0, want))
      throw InvalidInput("scaling mismatch in delta at index " +
                         std::to_string(i));
    if (i >= 1) {
      const double want_eps = std::pow(params.base_eps_seq(i), params.p);
      if (std::fabs(schedule.eps(i) - want_eps) >
          1e-9 * std::max(1.0, want_eps))
        throw InvalidInput("scaling mismatch in eps at index " +
                           std::to_string(i));
    }
  }

  const MetricSpace& space = *problem.space;
  std::vector<CertificateEntry> out;

  CertificateEntry origin;
  origin.name = "t4-distance-origin";
  origin.margin = params.lambda - space.distance(result.xbar, problem.x0);
  origin.holds = origin.margin >= -v.tol;
  out.push_back(std::move(origin));

  CertificateEntry iter;
  iter.name = "t4-distance-iterates";
  iter.margin = kInf;
  for (std::size_t i = 1; i <= v.last; ++i) {
    const double m =
        params.base_eps_seq(i) - space.distance(result.xbar, v.centers[i]);
    if (m < iter.margin) {
      iter.margin = m;
      iter.witnesses.clear();
      add_witness(iter, i);
    }
  }
  iter.holds = !(iter.margin < -v.tol);
  out.push_back(std::move(iter));

  // Value bound and strict minimality recomputed through the base route:
  // f + (eps/lambda^p) sum base_delta_i * d^p.
  auto base_perturbation = [&](point_id x) {
    double sum = 0.0;
    for (std::size_t k = 0; k <= v.last; ++k) {
      const double d = space.distance(x, v.centers[k]);
      sum += params.base_delta(k) * (d == 0.0 ? 0.0 : std::pow(d, params.p));
    }
    return scale * sum;
  };

  CertificateEntry value;
  value.name = "t4-value-bound";
  value.margin = v.f0 - (v.fbar + base_perturbation(result.xbar));
  value.holds = value.margin >= -v.tol;
  value.note = "series truncated at i=" + std::to_string(v.last);
  out.push_back(std::move(value));

  CertificateEntry strict;
  strict.name = "t4-strict-min";
  strict.margin = kInf;
  const double rhs = v.fbar + base_perturbation(result.xbar);
  for (point_id x = 0; x < space.size(); ++x) {
    if (x == result.xbar) continue;
    const double fx = problem.f(x);
    if (fx == kInf) continue;
    const double m = fx + base_perturbation(x) - rhs;
    if (m < strict.margin) {
      strict.margin = m;
      strict.witnesses.clear();
      add_witness(strict, x);
    }
  }
  strict.holds = strict.margin > -v.tol;
  out.push_back(std::move(strict));

  CertificateEntry smooth;
  smooth.name = "t4-smooth-derivative";
  if (!(params.p > 1.0)) {
    smooth.skipped = true;
    smooth.note = "skipped: requires p > 1";
  } else {
    // g(y) = sum base_delta_i ||y - x_i||^p is differentiable for p > 1;
    // central differences at shrinking steps must match the analytic
    // derivative of the truncated series.
    const auto xbar_coords = space.coordinates(result.xbar);
    std::vector<std::vector<double>> center_coords;
    center_coords.reserve(v.last + 1);
    for (std::size_t k = 0; k <= v.last; ++k)
      center_coords.push_back(space.coordinates(v.centers[k]));
    auto g_at = [&](const std::vector<double>& y) {
      double sum = 0.0;
      for (std::size_t k = 0; k < center_coords.size(); ++k) {
        double sq = 0.0;
        for (std::size_t a = 0; a < y.size(); ++a) {
          const double dd = y[a] - center_coords[k][a];
          sq += dd * dd;
        }
        const double d = std::sqrt(sq);
        sum += params.base_delta(k) * (d == 0.0 ? 0.0 : std::pow(d, params.p));
      }
      return sum;
    };
    const double fd_tol = 1e-5;
    double worst_err = 0.0;
    for (std::size_t axis = 0; axis < xbar_coords.size(); ++axis) {
      double analytic = 0.0;
      for (std::size_t k = 0; k < center_coords.size(); ++k) {
        double sq = 0.0;
        for (std::size_t a = 0; a < xbar_coords.size(); ++a) {
          const double dd = xbar_coords[a] - center_coords[k][a];
          sq += dd * dd;
        }
        const double d = std::sqrt(sq);
        if (d > 0.0)
          analytic += params.base_delta(k) * params.p *
                      std::pow(d, params.p - 1.0) *
                      ((xbar_coords[axis] - center_coords[k][axis]) / d);
      }
      for (const double h : {1e-2, 1e-3}) {
        auto plus = xbar_coords, minus = xbar_coords;
        plus[axis] += h;
        minus[axis] -= h;
        const double fd = (g_at(plus) - g_at(minus)) / (2.0 * h);
        worst_err = std::max(worst_err, std::fabs(fd - analytic));
      }
    }
    smooth.margin = fd_tol - worst_err;
    smooth.holds = smooth.margin >= 0.0;
    smooth.note = "max |central difference - series derivative| = " +
                  fmt(worst_err);
  }
  out.push_back(std::move(smooth));
  return out;
}

CertificateEntry check_telescoping(const Problem& problem,
                                   const GaugeFunction& gauge,
                                   const Schedule& schedule,
                                   const RunResult& result) {
  TraceView v(problem, gauge, schedule, result);
  CertificateEntry e;
  e.name = "telescoping-bounds";
  e.margin = kInf;

  // Prefix sums reused across pairs.
  std::vector<double> limit_prefix(v.last + 2, 0.0);  // sum_{k<=n} d_k rho_lim
  for (std::size_t k = 0; k <= v.last; ++k)
    limit_prefix[k + 1] = limit_prefix[k] + v.deltas[k] * v.rho_lim(k);
  // sum_{k<m} delta_k rho(x_m, x_k) per m.
  std::vector<double> self_sum(v.last + 1, 0.0);
  for (std::size_t m = 0; m <= v.last; ++m)
    for (std::size_t k = 0; k < m; ++k)
      self_sum[m] += v.deltas[k] * gauge.eval(v.centers[m], v.centers[k]);

  const std::size_t N_cap = v.N ? *v.N : v.last + 1;
  // Head sums against x_m, capped at the cutoff.
  std::vector<double> head_at(v.last + 1, 0.0);
  if (v.N) {
    for (std::size_t m = 0; m <= v.last; ++m)
      for (std::size_t k = 0; k + 1 < N_cap && k <= v.last; ++k)
        head_at[m] += v.deltas[k] * gauge.eval(v.centers[m], v.centers[k]);
  }
  const double head_limit = v.N ? v.head_sum_at_limit() : 0.0;
  const double dN1 = v.N ? schedule.delta(*v.N - 1) : 0.0;

  auto consider = [&](std::size_t m, std::size_t n, double margin) {
    if (margin < e.margin) {
      e.margin = margin;
      e.witnesses.clear();
      e.witnesses.push_back(m);
      e.witnesses.push_back(n);
    }
  };

  for (std::size_t m = 0; m <= v.last; ++m) {
    const double fm = result.trace.iterates[m].f_x;
    for (std::size_t n = m; n <= v.last; ++n) {
      double lhs;
      if (!v.N || n < *v.N) {
        lhs = v.fbar + limit_prefix[n + 1] - self_sum[m];
      } else if (m >= *v.N) {
        lhs = v.fbar + (head_limit - head_at[m]) +
              dN1 * ((v.chain_prefix[n] - v.chain_prefix[m]) + v.rho_lim(n));
      } else {
        lhs = v.fbar + head_limit - self_sum[m] +
              dN1 *
                  ((v.chain_prefix[n] - v.chain_prefix[*v.N - 1]) +
                   v.rho_lim(n));
      }
      consider(m, n, fm - lhs);
    }
  }
  e.holds = !(e.margin < -v.tol);
  return e;
}

Certificate certify_run(const Problem& problem, const GaugeFunction& gauge,
                        const Schedule& schedule, const RunResult& result,
                        const CertifyOptions& options) {
  Certificate cert;
  cert.append(check_telescoping(problem, gauge, schedule, result));
  cert.append(check_distance_bounds(problem, gauge, schedule, result));
  cert.append(check_value_bound(problem, gauge, schedule, result));
  cert.append(check_strict_minimality(problem, gauge, schedule, result));
  if (schedule.n) {
    cert.append(check_finite_cutoff(problem, gauge, schedule, result));
    cert.append(check_triangle_consequences(problem, gauge, schedule, result));
    if (options.lambda && *schedule.n == 1 && gauge.description == "metric")
      cert.append(
          check_ekeland(problem, gauge, schedule, result, *options.lambda));
  }
  if (options.t4)
    cert.append(
        check_banach_scaling(problem, gauge, schedule, result, *options.t4));
  return cert;
}

Reconstruction reconstruct_run(const std::vector<TraceRow>& rows,
                               const Problem& problem,
                               const GaugeFunction& gauge,
                               const Schedule& schedule) {
  Reconstruction rec;
  CertificateEntry& e = rec.consistency;
  e.name = "trace-consistency";
  e.margin = kInf;
  std::size_t issues = 0;
  auto fail = [&](const std::string& why) {
    e.holds = false;
    if (issues < 6) {
      if (!e.note.empty()) e.note += "; ";
      e.note += why;
    }
    ++issues;
  };
  auto close = [](double got, double want) {
    return std::fabs(got - want) <= 1e-12 * std::max(1.0, std::fabs(want));
  };

  if (rows.front().i != 0) fail("first row index is not 0");
  if (rows.front().x != problem.x0) fail("row 0 point differs from x0");
  const double delta0 = schedule.delta(0);

  RunResult& rr = rec.result;
  Trace& trace = rr.trace;
  std::vector<point_id> centers;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const TraceRow& row = rows[r];
    if (row.i != r) fail("row indices not sequential at " + std::to_string(r));
    const std::size_t j_want = schedule.j_index(row.i);
    if (row.j != j_want)
      fail("weight index mismatch at row " + std::to_string(r));
    if (row.x >= problem.space->size())
      throw InvalidInput("trace file: point id out of range at row " +
                         std::to_string(r));
    if (!close(row.f_x, problem.f(row.x)))
      fail("objective value mismatch at row " + std::to_string(r));
    const double eps_want =
        row.i == 0 ? problem.epsilon / delta0 : schedule.eps(row.i);
    if (!close(row.eps_i, eps_want))
      fail("eps column mismatch at row " + std::to_string(r));
    if (!close(row.delta_j, schedule.delta(j_want)))
      fail("delta column mismatch at row " + std::to_string(r));

    IterateRecord it;
    it.i = row.i;
    it.j = j_want;
    it.x = row.x;
    it.f_x = problem.f(row.x);
    it.eps_i = eps_want;
    it.delta_j = schedule.delta(j_want);
    it.slack_used = row.slack;

    if (r == 0) {
      it.members = build_s0(problem, gauge, delta0);
      if (row.slack != 0.0) fail("row 0 carries nonzero slack");
    } else {
      const auto& prev = trace.iterates.back().members;
      if (!std::binary_search(prev.begin(), prev.end(), row.x))
        fail("nesting violation: x_" + std::to_string(r) +
             " is not in the previous set");
      const double budget = schedule.delta(j_want) * schedule.eps(row.i);
      if (!(row.slack >= 0.0) ||
          row.slack > budget + 1e-12 * std::max(1.0, budget))
        fail("slack outside its budget at row " + std::to_string(r));
      auto objective = [&](point_id x) {
        return selection_objective(problem, gauge, schedule, centers, j_want,
                                   x);
      };
      double best = kInf;
      for (point_id x : prev) best = std::min(best, objective(x));
      if (objective(row.x) > best + row.slack + 1e-12 * std::max(1.0, std::fabs(best)))
        fail("selection not within its slack at row " + std::to_string(r));
      for (point_id x : prev) {
        if (membership_lhs(problem, gauge, schedule, centers, j_want, row.x,
                           x) <= problem.f(row.x))
          it.members.push_back(x);
      }
      const double rho_step = gauge.eval(row.x, centers.back());
      if (!close(rows[r - 1].rho_next, rho_step))
        fail("chain value mismatch at row " + std::to_string(r - 1));
      trace.rho_chain.push_back(rho_step);
      trace.iterates.back().rho_next = rho_step;
    }
    if (it.members.size() != row.s_size)
      fail("set size mismatch at row " + std::to_string(r));
    for (point_id x : it.members) {
      if (gauge.eval(x, row.x) > eps_want + schedule.tol_cert) {
        fail("member outside the eps radius at row " + std::to_string(r));
        break;
      }
    }
    centers.push_back(row.x);
    trace.iterates.push_back(std::move(it));
  }
  if (std::fabs(rows.back().rho_next) > 1e-12)
    fail("final row chain value must be 0");

  // Selection values must not increase along the trace.
  double prev_value = kInf;
  for (std::size_t r = 0; r < trace.iterates.size(); ++r) {
    const double value = selection_objective(
        problem, gauge, schedule, centers, trace.iterates[r].j,
        trace.iterates[r].x);
    if (value > prev_value + 1e-12 * std::max(1.0, std::fabs(prev_value)))
      fail("selection value increases at row " + std::to_string(r));
    prev_value = value;
  }

  rr.xbar = trace.iterates.back().x;
  trace.rho_to_limit.clear();
  for (const IterateRecord& row : trace.iterates)
    trace.rho_to_limit.push_back(gauge.eval(rr.xbar, row.x));
  rr.status = trace.ends_singleton() ? RunStatus::singleton_early
                                     : RunStatus::cap_reached;
  double radius = 0.0;
  for (point_id x : trace.iterates.back().members)
    radius = std::max(radius, problem.space->distance(x, rr.xbar));
  rr.final_diam_bound = 2.0 * radius;
  if (issues > 6) e.note += "; and " + std::to_string(issues - 6) + " more";
  return rec;
}

}  // namespace varcert

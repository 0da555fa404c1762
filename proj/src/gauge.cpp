#include "varcert/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace varcert {
namespace {

constexpr std::size_t kExhaustiveLimit = 200;
constexpr double kTriangleSlack = 1e-12;

std::string triple_label(const MetricSpace& s, point_id a, point_id b,
                         point_id c) {
  return "(" + s.point_label(a) + "," + s.point_label(b) + "," +
         s.point_label(c) + ")";
}

}  // namespace

double rho_upper_bound(const MetricSpace& space, const GaugeFunction& gauge) {
  const std::size_t n = space.size();
  if (n < 2) return 0.0;
  if (space.is_finite_matrix() && n <= kExhaustiveLimit) {
    double worst = 0.0;
    for (point_id a = 0; a < n; ++a)
      for (point_id b = a + 1; b < n; ++b)
        worst = std::max(worst, gauge.eval(a, b));
    return worst;
  }
  // Grids: the first and last node sit at opposite corners of the box.
  return gauge.eval(0, n - 1);
}

bool AxiomReport::all_pass() const {
  for (const AxiomCheck& c : checks)
    if (!c.pass) return false;
  return true;
}

const AxiomCheck* AxiomReport::find(const std::string& name) const {
  for (const AxiomCheck& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

GaugeFunction metric_as_gauge(SpacePtr space) {
  GaugeFunction g;
  g.eval = [space](point_id a, point_id b) { return space->distance(a, b); };
  g.modulus = [](double eps) { return eps / 2.0; };
  g.has_triangle = true;
  g.description = "metric";
  return g;
}

GaugeFunction power_norm_gauge(SpacePtr space, double p) {
  if (!(p > 0.0))
    throw InvalidInput("power gauge: exponent must be positive, got " +
                       std::to_string(p));
  GaugeFunction g;
  g.eval = [space, p](point_id a, point_id b) {
    const double d = space->distance(a, b);
    return d == 0.0 ? 0.0 : std::pow(d, p);
  };
  // rho <= eps^p/2 forces d <= eps / 2^(1/p) < eps.
  g.modulus = [p](double eps) { return std::pow(eps, p) / 2.0; };
  g.has_triangle = (p <= 1.0);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "power(%g)", p);
  g.description = buf;
  return g;
}

AxiomReport check_gauge_axioms(const MetricSpace& space,
                               const GaugeFunction& gauge,
                               std::size_t sample_budget, std::uint64_t seed) {
  if (sample_budget == 0)
    throw InvalidInput("gauge axiom check: sample budget must be >= 1");
  if (space.size() == 0)
    throw InvalidInput("gauge axiom check: empty space");

  AxiomReport report;
  const std::size_t n = space.size();
  const bool exhaustive =
      space.is_finite_matrix() && n <= kExhaustiveLimit;
  report.exhaustive = exhaustive;
  std::mt19937_64 rng(seed);
  auto pick = [&]() { return static_cast<point_id>(rng() % n); };

  AxiomCheck identity{"identity", true, ""};
  AxiomCheck nonneg{"nonnegative", true, ""};
  auto probe = [&](point_id a, point_id b) {
    const double v = gauge.eval(a, b);
    if (nonneg.pass && (std::isnan(v) || v < 0.0)) {
      nonneg.pass = false;
      nonneg.witness = "rho" + std::string("(") + space.point_label(a) + "," +
                       space.point_label(b) + ") = " + std::to_string(v);
    }
    return v;
  };

  // rho(x,x) = 0.
  {
    const std::size_t count = exhaustive ? n : std::min(n, sample_budget);
    for (std::size_t t = 0; t < count && identity.pass; ++t) {
      const point_id x = exhaustive ? static_cast<point_id>(t) : pick();
      if (probe(x, x) != 0.0) {
        identity.pass = false;
        identity.witness = space.point_label(x);
      }
    }
  }

  // Modulus witness: a ladder of eps values scaled by the diameter.
  AxiomCheck modulus{"modulus", true, ""};
  {
    const double scale = space.diameter() > 0.0 ? space.diameter() : 1.0;
    std::vector<std::pair<point_id, point_id>> pairs;
    if (exhaustive) {
      pairs.reserve(n * n);
      for (point_id a = 0; a < n; ++a)
        for (point_id b = 0; b < n; ++b) pairs.emplace_back(a, b);
    } else {
      pairs.reserve(sample_budget);
      for (std::size_t t = 0; t < sample_budget; ++t)
        pairs.emplace_back(pick(), pick());
    }
    for (int k = 0; k <= 10 && modulus.pass; ++k) {
      const double eps = scale * std::ldexp(1.0, -k);
      const double delta = gauge.modulus(eps);
      if (!(delta > 0.0)) {
        modulus.pass = false;
        modulus.witness = "modulus(" + std::to_string(eps) +
                          ") not positive: " + std::to_string(delta);
        break;
      }
      for (const auto& [a, b] : pairs) {
        const double r = probe(a, b);
        if (r <= delta && !(space.distance(a, b) < eps)) {
          modulus.pass = false;
          modulus.witness = "rho(" + space.point_label(a) + "," +
                            space.point_label(b) + ")=" + std::to_string(r) +
                            " <= " + std::to_string(delta) + " but d >= " +
                            std::to_string(eps);
          break;
        }
      }
    }
  }

  report.checks.push_back(identity);
  report.checks.push_back(modulus);

  if (gauge.has_triangle) {
    AxiomCheck tri{"triangle", true, ""};
    auto check_triple = [&](point_id a, point_id b, point_id c) {
      const double lhs = probe(a, c);
      const double rhs = probe(a, b) + probe(b, c);
      if (lhs > rhs + kTriangleSlack) {
        tri.pass = false;
        tri.witness = triple_label(space, a, b, c) + ": " +
                      std::to_string(lhs) + " > " + std::to_string(rhs);
      }
    };
    if (exhaustive) {
      for (point_id a = 0; a < n && tri.pass; ++a)
        for (point_id b = 0; b < n && tri.pass; ++b)
          for (point_id c = 0; c < n && tri.pass; ++c) check_triple(a, b, c);
    } else {
      for (std::size_t t = 0; t < sample_budget && tri.pass; ++t)
        check_triple(pick(), pick(), pick());
    }
    report.checks.push_back(tri);
  }

  if (space.kind() == MetricSpace::Kind::box_grid && n > 1) {
    // Continuity proxy: the largest rho jump across one grid step must not
    // exceed the largest jump across eight steps. Catches kernels that blow
    // up at fine scales; genuine continuity is untestable from samples.
    AxiomCheck cont{"continuity", true, ""};
    auto max_jump = [&](std::size_t stride) {
      double worst = 0.0;
      const std::size_t tries = std::min<std::size_t>(sample_budget, 4096);
      for (std::size_t t = 0; t < tries; ++t) {
        const point_id y = pick();
        const point_id z = pick();
        const point_id z2 = (z + stride < n) ? z + stride : (z >= stride ? z - stride : z);
        if (z2 == z) continue;
        const double a = probe(y, z);
        const double b = probe(y, z2);
        if (std::isfinite(a) && std::isfinite(b))
          worst = std::max(worst, std::fabs(a - b));
      }
      return worst;
    };
    const double fine = max_jump(1);
    const double coarse = max_jump(8);
    if (fine > coarse + kTriangleSlack) {
      cont.pass = false;
      cont.witness = "one-step jump " + std::to_string(fine) +
                     " exceeds eight-step jump " + std::to_string(coarse);
    }
    report.checks.push_back(cont);
  }

  report.checks.push_back(nonneg);
  return report;
}

}  // namespace varcert

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "varcert/certify.hpp"
#include "varcert/corpus.hpp"

using namespace varcert;

namespace {

struct Setup {
  Problem problem;
  GaugeFunction gauge;
  Schedule schedule;
  RunResult result;
};

Setup p3_run(std::optional<std::size_t> n, std::vector<double> deltas,
             double eps) {
  Setup s;
  Fixture fx = corpus_fixture("P3");
  fx.problem.epsilon = eps;
  s.problem = fx.problem;
  ScheduleSpec spec;
  spec.delta_head = std::move(deltas);
  spec.n = n;
  if (!n) spec.delta_rule = DeltaRule::geometric;
  s.schedule = spec.build(eps);
  s.gauge = metric_as_gauge(s.problem.space);
  s.result = run(s.problem, s.gauge, s.schedule,
                 exhaustive_oracle(*s.problem.space));
  return s;
}

double margin_of(const Certificate& cert, std::string_view name) {
  const CertificateEntry* e = cert.find(name);
  REQUIRE(e != nullptr);
  return e->margin;
}

}  // namespace

TEST_CASE("P3 single-weight run: every margin matches hand arithmetic") {
  const Setup s = p3_run(1, {0.5}, 2.0);
  REQUIRE(s.result.xbar == 2);
  CertifyOptions options;
  options.lambda = 4.0;  // eps / delta0
  const Certificate cert =
      certify_run(s.problem, s.gauge, s.schedule, s.result, options);
  CHECK(cert.overall());

  // rho(xbar, x0) = 2 against the budget eps/delta0 = 4.
  CHECK(margin_of(cert, "rho-origin-bound") == 2.0);
  // Value bound is tight: f(x0) - (f(p2) + 0.5 * 2) = 0.
  CHECK(std::fabs(margin_of(cert, "perturbed-value-bound")) <= 1e-12);
  // Worst strict-minimality witness is p1: 0.2 + 0.5*1 over 0.
  CHECK(margin_of(cert, "strict-global-min") == doctest::Approx(0.7));
  // Cutoff form: 0 + 0.5 * rho(p2,p0) = 1 <= 1, again tight.
  CHECK(std::fabs(margin_of(cert, "cutoff-value-bound")) <= 1e-12);
  CHECK(std::fabs(margin_of(cert, "chain-value-bound")) <= 1e-12);
  CHECK(margin_of(cert, "pointwise-domination") == doctest::Approx(0.7));
  CHECK(margin_of(cert, "chain-domination") == doctest::Approx(0.7));
  // Nonstrict bound attains equality at x = xbar.
  CHECK(std::fabs(margin_of(cert, "limit-center-lower-bound")) <= 1e-12);
  CHECK(margin_of(cert, "strict-min-with-triangle") == doctest::Approx(0.7));
  CHECK(margin_of(cert, "ekeland-distance") == 2.0);
  CHECK(std::fabs(margin_of(cert, "ekeland-value")) <= 1e-12);
  CHECK(margin_of(cert, "ekeland-strict") == doctest::Approx(0.7));
  const CertificateEntry* dropout = cert.find("early-dropout-bound");
  REQUIRE(dropout != nullptr);
  CHECK(dropout->note == "no early dropouts");
}

TEST_CASE("P3 infinite-tail run: series bounds from the shorter trace") {
  const Setup s = p3_run(std::nullopt, {0.5}, 2.0);
  REQUIRE(s.result.xbar == 1);  // the k=0 term keeps p1 ahead of p2
  const Certificate cert =
      certify_run(s.problem, s.gauge, s.schedule, s.result, {});
  CHECK(cert.overall());
  // f(x0) - f(p1) - 0.5*rho(p1,p0) = 1 - 0.2 - 0.5.
  CHECK(margin_of(cert, "perturbed-value-bound") == doctest::Approx(0.3));
  // Both other points sit 0.55 above the perturbed value of p1.
  CHECK(margin_of(cert, "strict-global-min") == doctest::Approx(0.55));
}

TEST_CASE("P3 three-weight run exercises the early-dropout bound") {
  const Setup s = p3_run(3, {0.5, 0.25, 0.125}, 2.0);
  REQUIRE(s.result.xbar == 1);
  REQUIRE(s.result.trace.last_index() == 1);  // singleton at i = 1 < N = 3
  const Certificate cert =
      certify_run(s.problem, s.gauge, s.schedule, s.result, {});
  CHECK(cert.overall());
  // Head sum at the limit: 0.5*rho(p1,p0) + 0.25*0 = 0.5.
  CHECK(margin_of(cert, "cutoff-value-bound") == doctest::Approx(0.3));
  // p0 and p2 both evaluate to 1.375 against 0.7 at the virtual index.
  CHECK(margin_of(cert, "pointwise-domination") == doctest::Approx(0.675));
  const CertificateEntry* dropout = cert.find("early-dropout-bound");
  REQUIRE(dropout != nullptr);
  CHECK(dropout->holds);
  CHECK(dropout->note == "2 early dropout(s) checked");
  // f(x) + 0.5 rho(x,p0) + 0.25 rho(x,p1) = 1.25 against 0.7 for both.
  CHECK(dropout->margin == doctest::Approx(0.55));
}

TEST_CASE("triangle consequences are skipped without the flag") {
  Fixture fx = corpus_fixture("P3");
  fx.problem.epsilon = 2.0;
  const GaugeFunction squared = power_norm_gauge(fx.problem.space, 2.0);
  REQUIRE_FALSE(squared.has_triangle);
  ScheduleSpec spec;
  spec.delta_head = {0.5};
  spec.n = 1;
  const Schedule sch = spec.build(2.0);
  const RunResult r =
      run(fx.problem, squared, sch, exhaustive_oracle(*fx.problem.space));
  const auto entries = check_triangle_consequences(fx.problem, squared, sch, r);
  REQUIRE(entries.size() == 3);
  for (const auto& e : entries) {
    CHECK(e.skipped);
    CHECK(e.holds);
  }
  // The rest of the certificate still applies.
  const Certificate cert = certify_run(fx.problem, squared, sch, r, {});
  CHECK(cert.overall());
}

TEST_CASE("ekeland checks demand the eps/lambda normalization") {
  const Setup s = p3_run(1, {0.5}, 2.0);
  CHECK_THROWS_AS(
      check_ekeland(s.problem, s.gauge, s.schedule, s.result, 3.0),
      InvalidInput);
  const Setup s3 = p3_run(3, {0.5, 0.25, 0.125}, 2.0);
  CHECK_THROWS_AS(
      check_ekeland(s3.problem, s3.gauge, s3.schedule, s3.result, 4.0),
      InvalidInput);
}

TEST_CASE("margins recompute identically from the exported trace") {
  for (const auto& setup :
       {p3_run(1, {0.5}, 2.0), p3_run(3, {0.5, 0.25, 0.125}, 2.0),
        p3_run(std::nullopt, {0.5}, 2.0)}) {
    std::ostringstream out;
    write_trace(out, setup.result);
    std::istringstream in(out.str());
    const auto rows = read_trace(in);
    const Reconstruction rec =
        reconstruct_run(rows, setup.problem, setup.gauge, setup.schedule);
    CHECK(rec.consistency.holds);
    CHECK(rec.result.xbar == setup.result.xbar);

    const Certificate direct =
        certify_run(setup.problem, setup.gauge, setup.schedule, setup.result, {});
    const Certificate replayed =
        certify_run(setup.problem, setup.gauge, setup.schedule, rec.result, {});
    REQUIRE(direct.entries.size() == replayed.entries.size());
    for (std::size_t k = 0; k < direct.entries.size(); ++k) {
      CAPTURE(direct.entries[k].name);
      CHECK(direct.entries[k].holds == replayed.entries[k].holds);
      if (std::isfinite(direct.entries[k].margin))
        CHECK(std::fabs(direct.entries[k].margin -
                        replayed.entries[k].margin) <= 1e-12);
    }
  }
}

TEST_CASE("reconstruction flags tampered rows") {
  const Setup s = p3_run(1, {0.5}, 2.0);
  std::ostringstream out;
  write_trace(out, s.result);

  auto reconstruct_text = [&](const std::string& text) {
    std::istringstream in(text);
    const auto rows = read_trace(in);
    return reconstruct_run(rows, s.problem, s.gauge, s.schedule);
  };

  // Pristine trace passes.
  CHECK(reconstruct_text(out.str()).consistency.holds);

  // Objective value shifted by +0.1.
  std::string f_mut = out.str();
  f_mut.replace(f_mut.find("0,0,0,1,3"), 9, "0,0,0,1.1,3");
  CHECK_FALSE(reconstruct_text(f_mut).consistency.holds);

  // Iterate replaced by a different (valid) point id.
  std::string x_mut = out.str();
  x_mut.replace(x_mut.find("1,0,2,0,1"), 9, "1,0,1,0,1");
  CHECK_FALSE(reconstruct_text(x_mut).consistency.holds);

  // Chain value shifted.
  std::string c_mut = out.str();
  c_mut.replace(c_mut.find("0.5,0,2\n"), 8, "0.5,0,2.1\n");
  CHECK_FALSE(reconstruct_text(c_mut).consistency.holds);

  // An out-of-range id cannot be replayed at all.
  std::string id_mut = out.str();
  id_mut.replace(id_mut.find("1,0,2,0,1"), 9, "1,0,9,0,1");
  std::istringstream bad(id_mut);
  const auto bad_rows = read_trace(bad);
  CHECK_THROWS_AS(reconstruct_run(bad_rows, s.problem, s.gauge, s.schedule),
                  InvalidInput);

  // Wrong schedule at verification time is a mismatch, not a pass.
  ScheduleSpec other;
  other.delta_head = {0.25};
  other.n = 1;
  std::istringstream in(out.str());
  const auto rows = read_trace(in);
  const Reconstruction rec =
      reconstruct_run(rows, s.problem, s.gauge, other.build(2.0));
  CHECK_FALSE(rec.consistency.holds);
}

TEST_CASE("certificates serialize with stable field names") {
  const Setup s = p3_run(1, {0.5}, 2.0);
  CertifyOptions options;
  options.lambda = 4.0;
  const Certificate cert =
      certify_run(s.problem, s.gauge, s.schedule, s.result, options);
  const std::string text = certificate_to_json(cert, s.schedule.tol_cert);
  const auto parsed = nlohmann::json::parse(text);
  CHECK(parsed.at("overall").get<bool>());
  CHECK(parsed.at("tol_cert").get<double>() == s.schedule.tol_cert);
  REQUIRE(parsed.at("entries").is_array());
  for (const auto& e : parsed.at("entries")) {
    CHECK(e.contains("name"));
    CHECK(e.contains("holds"));
    CHECK(e.contains("skipped"));
    CHECK(e.contains("margin"));
    CHECK(e.contains("witnesses"));
    CHECK(e.contains("note"));
  }
  // Vacuous margins serialize as null, never as a made-up number.
  bool saw_null = false;
  for (const auto& e : parsed.at("entries"))
    if (e.at("margin").is_null()) saw_null = true;
  CHECK(saw_null);
}

TEST_CASE("trivial-start runs keep the full distance budget") {
  const Fixture fx = corpus_fixture("PLATEAU");
  const Schedule sch = fx.schedule.build(fx.problem.epsilon);
  const GaugeFunction g = metric_as_gauge(fx.problem.space);
  const RunResult r =
      run(fx.problem, g, sch, exhaustive_oracle(*fx.problem.space));
  REQUIRE(r.xbar == fx.problem.x0);
  const auto entries = check_distance_bounds(fx.problem, g, sch, r);
  // rho(xbar, x0) = 0, so the whole eps/delta0 budget remains.
  CHECK(entries[0].margin == fx.problem.epsilon / sch.delta(0));
}

TEST_CASE("boundary fixture: the far minimizer enters exactly at the edge") {
  const Fixture fx = corpus_fixture("INF-AT-GAP");
  const Schedule sch = fx.schedule.build(fx.problem.epsilon);
  const GaugeFunction g = metric_as_gauge(fx.problem.space);
  // S0 keeps x0 and the distant minimizer, the latter at exact equality:
  // 0 + 0.25 * 4 = 1.0 = f(x0).
  CHECK(build_s0(fx.problem, g, sch.delta(0)) ==
        std::vector<point_id>{0, 4});
  const RunResult r =
      run(fx.problem, g, sch, exhaustive_oracle(*fx.problem.space));
  CHECK(r.xbar == 4);
  CertifyOptions options;
  options.lambda = fx.lambda;
  const Certificate cert = certify_run(fx.problem, g, sch, r, options);
  CHECK(cert.overall());
  // The cutoff value bound is tight: 0 + 0.25 * rho(p4,p0) = 1 = f(x0).
  CHECK(std::fabs(margin_of(cert, "cutoff-value-bound")) <= 1e-12);
}

TEST_CASE("single-field mutations of multi-row traces are always caught") {
  // Slack-exploiting runs produce traces with several rows and fat sets;
  // shifting any objective value, point id, or chain value by 0.1 must
  // break verification.
  std::size_t total = 0, caught = 0;
  for (const std::uint64_t seed : {5ull, 12ull}) {
    Fixture fx = random_fixture(seed);
    ScheduleSpec spec = fx.schedule;
    spec.n.reset();
    spec.delta_rule = DeltaRule::geometric;
    const Schedule sch = spec.build(fx.problem.epsilon);
    const GaugeFunction g = metric_as_gauge(fx.problem.space);
    const RunResult r = run(fx.problem, g, sch, slack_oracle(0.9, seed + 100));
    std::ostringstream out;
    write_trace(out, r);

    std::vector<std::string> lines;
    {
      std::stringstream ss(out.str());
      std::string line;
      while (std::getline(ss, line)) lines.push_back(line);
    }
    auto verdict = [&](const std::string& text) {
      try {
        std::istringstream in(text);
        const auto rows = read_trace(in);
        Reconstruction rec = reconstruct_run(rows, fx.problem, g, sch);
        if (!rec.consistency.holds) return false;
        return certify_run(fx.problem, g, sch, rec.result, {}).overall();
      } catch (const std::exception&) {
        return false;
      }
    };
    REQUIRE(verdict(out.str()));

    for (std::size_t row = 1; row < lines.size(); ++row) {
      for (const std::size_t field : {2u, 3u, 8u}) {  // x, f_x, rho_next
        std::vector<std::string> parts;
        std::stringstream ss(lines[row]);
        std::string tok;
        while (std::getline(ss, tok, ',')) parts.push_back(tok);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", std::stod(parts[field]) + 0.1);
        parts[field] = buf;
        std::string mutated = parts[0];
        for (std::size_t k = 1; k < parts.size(); ++k) mutated += "," + parts[k];
        std::string text;
        for (std::size_t k = 0; k < lines.size(); ++k)
          text += (k == row ? mutated : lines[k]) + "\n";
        ++total;
        if (!verdict(text)) ++caught;
      }
    }
  }
  CHECK(total >= 12);
  CHECK(caught == total);
}

TEST_CASE("certificates survive a deliberately inexact oracle") {
  for (const std::uint64_t seed : {4ull, 8ull, 15ull}) {
    Fixture fx = random_fixture(seed);
    const Schedule sch = fx.schedule.build(fx.problem.epsilon);
    const GaugeFunction g = metric_as_gauge(fx.problem.space);
    const RunResult exact =
        run(fx.problem, g, sch, exhaustive_oracle(*fx.problem.space));
    const RunResult loose = run(fx.problem, g, sch, slack_oracle(0.9, seed));
    CertifyOptions options;
    options.lambda = fx.problem.epsilon / sch.delta(0);
    CHECK(certify_run(fx.problem, g, sch, exact, options).overall());
    CHECK(certify_run(fx.problem, g, sch, loose, options).overall());
  }
}

TEST_CASE("a capped run reports honest conclusions for its truncation") {
  // A slack-exploiting oracle that keeps the worst admissible candidate
  // leaves a two-point set at the cap; the reported point is then only an
  // approximation of the limit and the strict-minimality entry must say so.
  Problem p;
  p.space = std::make_shared<MetricSpace>(
      MetricSpace::finite({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}}));
  std::vector<double> values = {0.3, 0.1, 0.0};
  p.f = [values](point_id x) { return values[x]; };
  p.x0 = 0;
  p.epsilon = 1.0;
  ScheduleSpec spec;
  spec.delta_head = {0.05};
  spec.delta_rule = DeltaRule::geometric;
  spec.n.reset();
  spec.cap = 1;
  const Schedule sch = spec.build(1.0);
  const GaugeFunction g = metric_as_gauge(p.space);

  Oracle worst;
  worst.description = "adversarial-worst";
  worst.minimize = [](const std::function<double(point_id)>& objective,
                      std::span<const point_id> feasible,
                      double budget) -> OracleResult {
    double best = kInf;
    for (point_id q : feasible) best = std::min(best, objective(q));
    const double allowed = 0.9 * budget;
    point_id pick = feasible.front();
    double worst_value = -kInf;
    for (point_id q : feasible) {
      const double v = objective(q);
      if (v <= best + allowed && v > worst_value) {
        worst_value = v;
        pick = q;
      }
    }
    return {pick, allowed};
  };

  const RunResult r = run(p, g, sch, worst);
  CHECK(r.status == RunStatus::cap_reached);
  CHECK(r.xbar == 1);
  REQUIRE(r.trace.iterates.back().members == std::vector<point_id>{1, 2});
  CHECK(r.final_diam_bound == 2.0);

  const Certificate cert = certify_run(p, g, sch, r, {});
  // Distance and value conclusions hold for the truncated trace...
  CHECK(cert.find("rho-origin-bound")->holds);
  CHECK(cert.find("rho-iterate-bounds")->holds);
  CHECK(cert.find("perturbed-value-bound")->holds);
  CHECK(cert.find("telescoping-bounds")->holds);
  // ...but p2 still undercuts the reported point, and the certificate
  // must expose that instead of passing a point that is not the limit.
  const CertificateEntry* strict = cert.find("strict-global-min");
  REQUIRE(strict != nullptr);
  CHECK_FALSE(strict->holds);
  REQUIRE_FALSE(strict->witnesses.empty());
  CHECK(strict->witnesses.front() == 2);
  CHECK(strict->margin == doctest::Approx(-0.075));
  CHECK_FALSE(cert.overall());
}

TEST_CASE("a trace that never reaches the cutoff is inconclusive, not green") {
  Problem p;
  p.space = std::make_shared<MetricSpace>(
      MetricSpace::finite({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}}));
  std::vector<double> values = {0.3, 0.1, 0.0};
  p.f = [values](point_id x) { return values[x]; };
  p.x0 = 0;
  p.epsilon = 1.0;
  ScheduleSpec spec;
  spec.delta_head = {0.05};
  spec.delta_rule = DeltaRule::geometric;
  spec.n = 3;
  spec.cap = 1;  // stops before any index >= N exists
  const Schedule sch = spec.build(1.0);
  const GaugeFunction g = metric_as_gauge(p.space);
  Oracle worst;
  worst.minimize = [](const std::function<double(point_id)>& objective,
                      std::span<const point_id> feasible,
                      double budget) -> OracleResult {
    double best = kInf;
    for (point_id q : feasible) best = std::min(best, objective(q));
    point_id pick = feasible.front();
    double worst_value = -kInf;
    for (point_id q : feasible) {
      const double v = objective(q);
      if (v <= best + 0.9 * budget && v > worst_value) {
        worst_value = v;
        pick = q;
      }
    }
    return {pick, 0.9 * budget};
  };
  const RunResult r = run(p, g, sch, worst);
  REQUIRE(r.status == RunStatus::cap_reached);
  REQUIRE(r.trace.iterates.back().members.size() == 2);

  const Certificate cert = certify_run(p, g, sch, r, {});
  const CertificateEntry* dom = cert.find("pointwise-domination");
  REQUIRE(dom != nullptr);
  CHECK_FALSE(dom->holds);
  CHECK(dom->note.find("no recorded iterate") != std::string::npos);
  CHECK_FALSE(cert.find("strict-global-min")->holds);
  // The value bounds remain checkable on the truncated data.
  CHECK(cert.find("perturbed-value-bound")->holds);
}

TEST_CASE("harmonic weight tails run and certify") {
  Fixture fx = corpus_fixture("P3");
  fx.problem.epsilon = 2.0;
  ScheduleSpec spec;
  spec.delta_head = {0.5};
  spec.delta_rule = DeltaRule::harmonic;
  spec.n.reset();
  const Schedule sch = spec.build(2.0);
  const GaugeFunction g = metric_as_gauge(fx.problem.space);
  const RunResult r =
      run(fx.problem, g, sch, exhaustive_oracle(*fx.problem.space));
  const Certificate cert = certify_run(fx.problem, g, sch, r, {});
  CHECK(cert.overall());
  // The divergent tail only matters for the truncation note; a singleton
  // ending pins the tail to zero.
  CHECK(sch.delta_tail(r.trace.last_index()) == kInf);
}

TEST_CASE("corpus fixtures certify across tail families") {
  for (const auto& name : {"P3", "EQUALITY-EDGE", "PLATEAU", "INF-AT-GAP"}) {
    Fixture fx = corpus_fixture(name);
    for (const int family : {0, 1, 2}) {
      ScheduleSpec spec = fx.schedule;
      const double d0 = spec.delta_head.front();
      if (family == 1) {
        spec.delta_head = {d0, d0 / 2.0, d0 / 4.0};
        spec.n = 3;
      } else if (family == 2) {
        spec.n.reset();
        spec.delta_rule = DeltaRule::geometric;
      }
      const Schedule sch = spec.build(fx.problem.epsilon);
      const GaugeFunction g = metric_as_gauge(fx.problem.space);
      const RunResult r =
          run(fx.problem, g, sch, exhaustive_oracle(*fx.problem.space));
      CertifyOptions options;
      options.lambda = fx.problem.epsilon / sch.delta(0);
      const Certificate cert = certify_run(fx.problem, g, sch, r, options);
      CAPTURE(name);
      CAPTURE(family);
      CHECK(cert.overall());
    }
  }
}

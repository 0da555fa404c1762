#include "varcert/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

namespace varcert {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw InvalidInput("cannot parse number '" + tok + "'");
    }
  }
  if (out.empty()) throw InvalidInput("empty number list");
  return out;
}

Fixture load_fixture(const RunConfig& config) {
  const std::string prefix = "corpus:";
  if (config.source.rfind(prefix, 0) == 0) {
    const std::string name = config.source.substr(prefix.size());
    if (name == "RANDOM") return random_fixture(config.seed);
    return corpus_fixture(name);
  }
  std::ifstream in(config.source);
  if (!in) throw InvalidInput("cannot open problem file '" + config.source + "'");
  Fixture fx;
  fx.problem = read_problem(in, config.source);
  fx.name = config.source;
  fx.schedule.delta_head = {1.0};
  fx.schedule.n = 1;
  fx.lambda = fx.problem.epsilon;
  return fx;
}

void apply_schedule_flags(const RunConfig& config, ScheduleSpec& spec) {
  bool n_overridden = false;
  if (config.n_text) {
    n_overridden = true;
    if (*config.n_text == "inf") {
      spec.n.reset();
    } else {
      try {
        spec.n = std::stoull(*config.n_text);
      } catch (const std::exception&) {
        throw InvalidInput("bad N '" + *config.n_text + "'");
      }
    }
  }
  if (config.deltas_text) {
    spec.delta_head = parse_reals(*config.deltas_text);
  } else if (config.delta0) {
    spec.delta_head = {*config.delta0};
  }
  if (config.delta_rule) {
    if (*config.delta_rule == "zero-tail")
      spec.delta_rule = DeltaRule::zero_tail;
    else if (*config.delta_rule == "geometric")
      spec.delta_rule = DeltaRule::geometric;
    else if (*config.delta_rule == "harmonic")
      spec.delta_rule = DeltaRule::harmonic;
    else
      throw InvalidInput("unknown delta rule '" + *config.delta_rule + "'");
  } else if (n_overridden && spec.delta_rule == DeltaRule::zero_tail &&
             (!spec.n || *spec.n > spec.delta_head.size())) {
    // A longer (or infinite) weight sequence needs a positive tail.
    spec.delta_rule = DeltaRule::geometric;
  }
  spec.delta_ratio = config.delta_ratio;
  if (config.eps_rule) {
    if (*config.eps_rule == "paper-default")
      spec.eps_rule = EpsRule::paper_default;
    else if (*config.eps_rule == "geometric")
      spec.eps_rule = EpsRule::geometric;
    else
      throw InvalidInput("unknown eps rule '" + *config.eps_rule + "'");
  }
  spec.eps_ratio = config.eps_ratio;
  if (config.cap) spec.cap = *config.cap;
  if (config.tol_d) spec.tol_d = *config.tol_d;
  if (config.tol_cert) spec.tol_cert = *config.tol_cert;
}

}  // namespace

ResolvedRun resolve_config(const RunConfig& config) {
  Fixture fx = load_fixture(config);
  if (config.epsilon) fx.problem.epsilon = *config.epsilon;

  ScheduleSpec spec = fx.schedule;
  apply_schedule_flags(config, spec);

  ResolvedRun out;
  out.problem = fx.problem;

  if (config.mode == "ekeland") {
    if (!config.lambda)
      throw InvalidInput("ekeland mode requires --lambda");
    if (!config.delta0 && !config.deltas_text)
      spec.delta_head = {fx.problem.epsilon / *config.lambda};
    spec.n = 1;
    spec.delta_rule = DeltaRule::zero_tail;
    out.gauge = metric_as_gauge(fx.problem.space);
    out.schedule = spec.build(fx.problem.epsilon);
  } else if (config.mode == "t4") {
    if (!config.lambda) throw InvalidInput("t4 mode requires --lambda");
    if (fx.problem.space->kind() != MetricSpace::Kind::box_grid)
      throw InvalidInput("t4 mode requires a box-grid problem");
    if (spec.n)
      throw InvalidInput("t4 mode requires an infinite weight tail (--N inf)");
    if (spec.delta_rule == DeltaRule::zero_tail)
      spec.delta_rule = DeltaRule::geometric;
    const double lambda = *config.lambda;
    const double p = config.p;
    const double base_eps = fx.problem.epsilon;
    const Schedule base = spec.build(base_eps);
    const double lp = std::pow(lambda, p);
    const double scale = base_eps / lp;

    // Rescaled run: eps' = eps*delta0, delta_i' = (eps/lambda^p) delta_i,
    // eps_i' = eps_i^p, with the power-p gauge.
    out.problem.epsilon = base_eps * base.delta(0);
    out.gauge = power_norm_gauge(fx.problem.space, p);
    Schedule sub;
    sub.n = std::nullopt;
    sub.cap = base.cap;
    sub.tol_d = base.tol_d;
    sub.tol_cert = base.tol_cert;
    sub.delta = [base_delta = base.delta, scale](std::size_t i) {
      return scale * base_delta(i);
    };
    sub.delta_tail_sum = [base_tail = base.delta_tail_sum,
                          scale](std::size_t i) {
      return scale * base_tail(i);
    };
    sub.eps = [base_eps_seq = base.eps, p](std::size_t i) {
      return std::pow(base_eps_seq(i), p);
    };
    const double q = spec.eps_rule == EpsRule::paper_default
                         ? std::pow(0.5, p)
                         : std::pow(spec.eps_ratio, p);
    auto sub_eps = sub.eps;
    sub.eps_tail_sum = [sub_eps, q](std::size_t i) {
      return sub_eps(i + 1) / (1.0 - q);
    };
    out.schedule = std::move(sub);

    T4Params params;
    params.lambda = lambda;
    params.p = p;
    params.base_epsilon = base_eps;
    params.base_delta = base.delta;
    params.base_eps_seq = base.eps;
    out.options.t4 = std::move(params);
  } else if (config.mode == "raw") {
    out.gauge = config.gauge == "power"
                    ? power_norm_gauge(fx.problem.space, config.p)
                    : metric_as_gauge(fx.problem.space);
    out.schedule = spec.build(fx.problem.epsilon);
  } else {
    throw InvalidInput("unknown mode '" + config.mode + "'");
  }

  if (config.lambda) {
    out.options.lambda = *config.lambda;
    out.slope_applicable = out.problem.space->is_finite_matrix();
  } else if (config.mode != "t4") {
    // Natural distance budget of the run.
    out.options.lambda = out.problem.epsilon / out.schedule.delta(0);
    out.slope_applicable = false;
  }
  return out;
}

namespace {

void print_hypothesis(const HypothesisReport& rep) {
  std::printf("hypothesis: inf=%s  eps-min %s (slack %s)  ies2 %s (slack %s)  weak-min %s\n",
              fmt(rep.computed_inf).c_str(), rep.eps_min_ok ? "OK" : "FAIL",
              fmt(rep.eps_min_slack).c_str(), rep.ies2_ok ? "OK" : "FAIL",
              fmt(rep.ies2_slack).c_str(), rep.weak_min_ok ? "OK" : "FAIL");
}

void print_certificate(const Certificate& cert) {
  for (const CertificateEntry& e : cert.entries) {
    const char* mark = e.skipped ? "skip" : (e.holds ? " ok " : "FAIL");
    std::printf("[%s] %-26s margin=%s%s%s\n", mark, e.name.c_str(),
                std::isfinite(e.margin) ? fmt(e.margin).c_str() : "n/a",
                e.note.empty() ? "" : "  ", e.note.c_str());
  }
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) return false;
  out << content;
  return static_cast<bool>(out);
}

}  // namespace

Certificate verify_certificate(const ResolvedRun& resolved,
                               const RunResult& result,
                               CertificateEntry consistency) {
  Certificate cert;
  cert.append(std::move(consistency));
  Certificate main = certify_run(resolved.problem, resolved.gauge,
                                 resolved.schedule, result, resolved.options);
  cert.append(std::move(main.entries));
  if (resolved.slope_applicable && resolved.options.lambda) {
    cert.append(slope_bound_check(result, resolved.problem, resolved.gauge,
                                  resolved.schedule, *resolved.options.lambda));
  }
  return cert;
}

int cmd_solve(const RunConfig& config) {
  try {
    const ResolvedRun resolved = resolve_config(config);
    const HypothesisReport rep =
        validate(resolved.problem, resolved.schedule, resolved.gauge);
    print_hypothesis(rep);
    if (!rep.weak_min_ok) {
      std::fprintf(stderr, "error: x0 is not weakly near-minimal\n");
      return 1;
    }
    if (!rep.ies2_ok)
      std::fprintf(stderr,
                   "warning: delta0 below (f(x0)-inf)/eps; distance "
                   "conclusions are not guaranteed in rescaled forms\n");
    const Oracle oracle = exhaustive_oracle(*resolved.problem.space);
    const RunResult result =
        run(resolved.problem, resolved.gauge, resolved.schedule, oracle);
    std::printf("xbar=%s  status=%s  iterations=%zu  diam-bound=%s\n",
                resolved.problem.space->point_label(result.xbar).c_str(),
                to_string(result.status).c_str(),
                result.trace.last_index(),
                fmt(result.final_diam_bound).c_str());
    if (!config.out_trace_path.empty()) {
      std::ostringstream ss;
      write_trace(ss, result);
      if (!write_file(config.out_trace_path, ss.str())) {
        std::fprintf(stderr, "error: cannot write trace to '%s'\n",
                     config.out_trace_path.c_str());
        return 1;
      }
    }
    return result.status == RunStatus::cap_reached ? 2 : 0;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
}

int cmd_verify(const RunConfig& config) {
  try {
    const ResolvedRun resolved = resolve_config(config);
    if (config.trace_path.empty())
      throw InvalidInput("verify requires --trace");
    std::ifstream in(config.trace_path);
    if (!in)
      throw InvalidInput("cannot open trace file '" + config.trace_path + "'");
    const std::vector<TraceRow> rows = read_trace(in);
    Reconstruction rec =
        reconstruct_run(rows, resolved.problem, resolved.gauge,
                        resolved.schedule);
    const Certificate cert =
        verify_certificate(resolved, rec.result, std::move(rec.consistency));
    print_certificate(cert);
    const bool ok = cert.overall();
    std::printf("overall: %s\n", ok ? "PASS" : "FAIL");
    if (!config.out_cert_path.empty()) {
      if (!write_file(config.out_cert_path,
                      certificate_to_json(cert, resolved.schedule.tol_cert))) {
        std::fprintf(stderr, "error: cannot write certificate to '%s'\n",
                     config.out_cert_path.c_str());
        return 1;
      }
    }
    return ok ? 0 : 1;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
}

int cmd_slope(const RunConfig& config) {
  try {
    const ResolvedRun resolved = resolve_config(config);
    if (!config.lambda) throw InvalidInput("slope requires --lambda");
    if (config.trace_path.empty()) throw InvalidInput("slope requires --trace");
    std::ifstream in(config.trace_path);
    if (!in)
      throw InvalidInput("cannot open trace file '" + config.trace_path + "'");
    const std::vector<TraceRow> rows = read_trace(in);
    Reconstruction rec = reconstruct_run(rows, resolved.problem,
                                         resolved.gauge, resolved.schedule);
    if (!rec.consistency.holds) {
      std::fprintf(stderr, "error: trace inconsistent: %s\n",
                   rec.consistency.note.c_str());
      return 1;
    }
    const double lambda = *config.lambda;
    const PerturbationSeries series = series_from_trace(
        rec.result, resolved.problem, resolved.gauge, resolved.schedule,
        lambda);
    const SlopeValue slope =
        nonlocal_slope(resolved.problem.f, series, rec.result.xbar);
    const double bound = resolved.problem.epsilon / lambda;
    std::printf("slope=%s  bound=%s  margin=%s  anomalies=%zu\n",
                fmt(slope.value).c_str(), fmt(bound).c_str(),
                fmt(bound - slope.value).c_str(), slope.anomalies.size());
    return bound - slope.value >= -resolved.schedule.tol_cert &&
                   slope.anomalies.empty()
               ? 0
               : 1;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
}

int cmd_bench(const BenchConfig& config) {
  try {
    if (config.count == 0) throw InvalidInput("bench: need at least one seed");
    std::size_t passed = 0;
    std::vector<double> pooled_margins;
    std::ostringstream csv;
    csv << "seed,name,points,N,status,overall,min_margin\n";
    for (std::size_t k = 0; k < config.count; ++k) {
      const std::uint64_t seed = config.first_seed + k;
      Fixture fx = random_fixture(seed);
      ScheduleSpec spec = fx.schedule;
      const double delta0 = spec.delta_head.front();
      switch (seed % 3) {
        case 0:
          break;  // N = 1 as generated
        case 1:
          spec.delta_head = {delta0, delta0 / 2.0, delta0 / 4.0};
          spec.n = 3;
          break;
        case 2:
          spec.n.reset();
          spec.delta_rule = DeltaRule::geometric;
          spec.cap = 40;
          break;
      }
      if (seed % 7 == 0) {
        // Exercise the equality edge: eps exactly the gap, delta0 = 1.
        double inf = kInf;
        for (point_id x = 0; x < fx.problem.space->size(); ++x)
          inf = std::min(inf, fx.problem.f(x));
        const double f0 = fx.problem.f(fx.problem.x0);
        double gap = f0 - inf;
        if (gap > 1e-9) {
          // Nudge up by ulps until the hypothesis survives roundoff.
          while (inf + gap < f0) gap = std::nextafter(gap, kInf);
          fx.problem.epsilon = gap;
          spec.delta_head[0] = 1.0;
          fx.lambda = gap;
        }
      }
      const Schedule schedule = spec.build(fx.problem.epsilon);
      const GaugeFunction gauge = metric_as_gauge(fx.problem.space);
      const Oracle oracle = exhaustive_oracle(*fx.problem.space);
      const RunResult result = run(fx.problem, gauge, schedule, oracle);

      CertifyOptions options;
      const double lambda = fx.problem.epsilon / schedule.delta(0);
      options.lambda = lambda;
      Certificate cert =
          certify_run(fx.problem, gauge, schedule, result, options);
      cert.append(
          slope_bound_check(result, fx.problem, gauge, schedule, lambda));

      double min_margin = kInf;
      for (const CertificateEntry& e : cert.entries) {
        if (e.skipped || !std::isfinite(e.margin)) continue;
        min_margin = std::min(min_margin, e.margin);
        pooled_margins.push_back(e.margin);
      }
      const bool ok = cert.overall();
      if (ok) ++passed;
      csv << seed << ',' << fx.name << ',' << fx.problem.space->size() << ','
          << (schedule.n ? std::to_string(*schedule.n) : "inf") << ','
          << to_string(result.status) << ',' << (ok ? 1 : 0) << ','
          << fmt(min_margin) << '\n';
    }
    std::sort(pooled_margins.begin(), pooled_margins.end());
    auto quantile = [&](double q) {
      const std::size_t idx = static_cast<std::size_t>(
          q * static_cast<double>(pooled_margins.size() - 1) + 0.5);
      return pooled_margins[idx];
    };
    std::printf("bench: %zu/%zu certificates pass\n", passed, config.count);
    std::printf("margin quantiles: min=%s p25=%s median=%s p75=%s max=%s\n",
                fmt(quantile(0.0)).c_str(), fmt(quantile(0.25)).c_str(),
                fmt(quantile(0.5)).c_str(), fmt(quantile(0.75)).c_str(),
                fmt(quantile(1.0)).c_str());
    if (!config.out_csv.empty() && !write_file(config.out_csv, csv.str())) {
      std::fprintf(stderr, "error: cannot write CSV to '%s'\n",
                   config.out_csv.c_str());
      return 1;
    }
    return passed == config.count ? 0 : 1;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
}

int cli_main(int argc, char** argv) {
  CLI::App app{
      "varcert: constructs certified perturbed minimizers on desk-scale "
      "complete metric spaces and re-verifies every conclusion"};
  app.require_subcommand(1);

  RunConfig config;
  BenchConfig bench;

  auto add_common = [&](CLI::App* cmd, bool needs_source) {
    if (needs_source)
      cmd->add_option("source", config.source,
                      "problem source: corpus:NAME or a file path")
          ->required();
    cmd->add_option("--gauge", config.gauge, "gauge kind: metric|power");
    cmd->add_option("--p", config.p, "exponent for the power gauge");
    cmd->add_option("--N", config.n_text, "positive weight count, or 'inf'");
    cmd->add_option("--delta0", config.delta0, "leading weight");
    cmd->add_option("--deltas", config.deltas_text,
                    "comma-separated weight head");
    cmd->add_option("--delta-rule", config.delta_rule,
                    "zero-tail|geometric|harmonic");
    cmd->add_option("--delta-ratio", config.delta_ratio, "tail ratio");
    cmd->add_option("--eps", config.epsilon, "near-minimality slack");
    cmd->add_option("--eps-rule", config.eps_rule, "paper-default|geometric");
    cmd->add_option("--eps-ratio", config.eps_ratio, "eps tail ratio");
    cmd->add_option("--cap", config.cap, "iteration cap");
    cmd->add_option("--tol-d", config.tol_d, "target diameter");
    cmd->add_option("--tol-cert", config.tol_cert, "certificate slack");
    cmd->add_option("--lambda", config.lambda, "distance budget");
    cmd->add_option("--mode", config.mode, "raw|ekeland|t4");
    cmd->add_option("--seed", config.seed, "seed for corpus:RANDOM");
  };

  CLI::App* solve = app.add_subcommand("solve", "run the construction");
  add_common(solve, true);
  solve->add_option("--out-trace", config.out_trace_path, "trace output path");

  CLI::App* verify =
      app.add_subcommand("verify", "re-verify a trace against its problem");
  add_common(verify, true);
  verify->add_option("--trace", config.trace_path, "trace input path")
      ->required();
  verify->add_option("--out-cert", config.out_cert_path,
                     "certificate output path");

  CLI::App* slope =
      app.add_subcommand("slope", "descent rate of a finished run");
  add_common(slope, true);
  slope->add_option("--trace", config.trace_path, "trace input path")
      ->required();

  CLI::App* bench_cmd =
      app.add_subcommand("bench", "seeded random fixtures end to end");
  bench_cmd->add_option("--seeds", bench.count, "number of seeds");
  bench_cmd->add_option("--first-seed", bench.first_seed, "first seed");
  bench_cmd->add_option("--out", bench.out_csv, "CSV detail path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (solve->parsed()) return cmd_solve(config);
  if (verify->parsed()) return cmd_verify(config);
  if (slope->parsed()) return cmd_slope(config);
  if (bench_cmd->parsed()) return cmd_bench(bench);
  return 1;
}

}  // namespace varcert

#pragma once

#include <optional>
#include <string>

#include "varcert/certify.hpp"
#include "varcert/corpus.hpp"
#include "varcert/slope.hpp"

namespace varcert {

// One batch run described by flags: where the problem comes from, which
// gauge perturbs it, the weight/slack schedule, and how the conclusions
// should be interpreted (raw, Ekeland form, or the normed-space rescaling).
struct RunConfig {
  std::string source;  // "corpus:NAME" or a problem file path
  std::string gauge = "metric";  // metric | power
  double p = 2.0;

  std::optional<std::string> n_text;  // "inf" or a positive integer
  std::optional<double> delta0;
  std::optional<std::string> deltas_text;  // comma-separated head
  std::optional<std::string> delta_rule;   // zero-tail|geometric|harmonic
  double delta_ratio = 0.5;
  std::optional<double> epsilon;
  std::optional<std::string> eps_rule;  // paper-default|geometric
  double eps_ratio = 0.5;
  std::optional<std::size_t> cap;
  std::optional<double> tol_d;
  std::optional<double> tol_cert;
  std::optional<double> lambda;
  std::string mode = "raw";  // raw | ekeland | t4
  std::uint64_t seed = 1;

  std::string trace_path;      // input for verify/slope
  std::string out_trace_path;  // output for solve
  std::string out_cert_path;   // output for verify
};

// Fully resolved run inputs.
struct ResolvedRun {
  Problem problem;
  GaugeFunction gauge;
  Schedule schedule;
  CertifyOptions options;
  bool slope_applicable = false;
};

ResolvedRun resolve_config(const RunConfig& config);

// Exit codes: 0 success (solve: converged or singleton), 1 invalid input or
// failed certificate, 2 cap reached.
int cmd_solve(const RunConfig& config);
int cmd_verify(const RunConfig& config);
int cmd_slope(const RunConfig& config);

struct BenchConfig {
  std::uint64_t first_seed = 1;
  std::size_t count = 20;
  std::string out_csv;
};
int cmd_bench(const BenchConfig& config);

// Full certificate for a reconstructed run, matching what cmd_verify emits.
Certificate verify_certificate(const ResolvedRun& resolved,
                               const RunResult& result,
                               CertificateEntry consistency);

int cli_main(int argc, char** argv);

}  // namespace varcert

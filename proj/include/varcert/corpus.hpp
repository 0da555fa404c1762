#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "varcert/problem.hpp"

namespace varcert {

// Deterministic random helper. std::mt19937_64 output is pinned by the
// standard; the scaling below avoids implementation-defined distributions
// so seeded artifacts are byte-identical across toolchains.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : eng_(seed) {}
  std::uint64_t next() { return eng_(); }
  double uniform(double lo, double hi) {
    const double u =
        static_cast<double>(next() >> 11) * 0x1.0p-53;  // [0,1)
    return lo + (hi - lo) * u;
  }
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

 private:
  std::mt19937_64 eng_;
};

// A named problem with a default schedule known to satisfy both the
// near-minimality hypothesis and the delta0 lower bound.
struct Fixture {
  std::string name;
  Problem problem;
  ScheduleSpec schedule;
  double lambda = 1.0;  // epsilon / delta0: the distance budget
};

// Built-in fixtures: P3, EQUALITY-EDGE, LINE-ABS, PLATEAU, INF-AT-GAP.
std::vector<Fixture> corpus();
Fixture corpus_fixture(const std::string& name);

// Seeded finite fixture: random connected weighted graph completed by
// shortest paths (triangle inequality holds by construction), random
// objective, parameters chosen so the hypotheses hold.
Fixture random_fixture(std::uint64_t seed);
MetricSpace random_metric_space(std::uint64_t seed, std::size_t max_points = 40);

}  // namespace varcert

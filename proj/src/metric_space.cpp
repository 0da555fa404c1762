#include "varcert/metric_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <random>
#include <utility>

namespace varcert {
namespace {

constexpr std::size_t kExhaustiveLimit = 200;
constexpr double kTriangleSlack = 1e-12;
constexpr std::size_t kMaxGridPoints = 10'000'000;

std::string pair_label(std::size_t a, std::size_t b) {
  return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
}

}  // namespace

MetricSpace MetricSpace::finite(std::vector<std::vector<double>> distances) {
  const std::size_t n = distances.size();
  if (n == 0) throw InvalidInput("finite space: empty distance matrix");
  for (std::size_t i = 0; i < n; ++i) {
    if (distances[i].size() != n)
      throw InvalidInput("finite space: matrix row " + std::to_string(i) +
                         " has wrong length");
  }
  double diameter = 0.0;
  double min_positive = kInf;
  for (std::size_t i = 0; i < n; ++i) {
    if (distances[i][i] != 0.0)
      throw InvalidInput("finite space: d(x,x) != 0 at point " +
                         std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) {
      const double d = distances[i][j];
      if (!(d >= 0.0))
        throw InvalidInput("finite space: negative or NaN distance at " +
                           pair_label(i, j));
      if (distances[j][i] != d)
        throw InvalidInput("finite space: asymmetric distances at " +
                           pair_label(i, j));
      if (i != j) {
        if (d == 0.0)
          throw InvalidInput("finite space: distinct points at distance 0: " +
                             pair_label(i, j));
        diameter = std::max(diameter, d);
        min_positive = std::min(min_positive, d);
      }
    }
  }
  // Triangle inequality: exhaustive for small spaces, sampled otherwise.
  auto check_triple = [&](std::size_t i, std::size_t j, std::size_t k) {
    if (distances[i][k] > distances[i][j] + distances[j][k] + kTriangleSlack)
      throw InvalidInput("finite space: triangle inequality fails on (" +
                         std::to_string(i) + "," + std::to_string(j) + "," +
                         std::to_string(k) + ")");
  };
  if (n <= kExhaustiveLimit) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) check_triple(i, j, k);
  } else {
    std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
    for (std::size_t t = 0; t < 2'000'000; ++t) {
      const std::size_t i = static_cast<std::size_t>(rng() % n);
      const std::size_t j = static_cast<std::size_t>(rng() % n);
      const std::size_t k = static_cast<std::size_t>(rng() % n);
      check_triple(i, j, k);
    }
  }

  MetricSpace s;
  s.kind_ = Kind::finite;
  s.size_ = n;
  s.diameter_ = diameter;
  s.min_positive_ = min_positive;
  s.dist_ = std::move(distances);
  return s;
}

MetricSpace MetricSpace::box_grid(std::vector<GridAxis> axes) {
  if (axes.empty()) throw InvalidInput("box grid: no axes");
  std::vector<std::size_t> counts;
  counts.reserve(axes.size());
  std::size_t total = 1;
  double diag_sq = 0.0;
  double min_step = kInf;
  for (const GridAxis& a : axes) {
    if (!(a.step > 0.0)) throw InvalidInput("box grid: step must be positive");
    if (!(a.upper >= a.lower))
      throw InvalidInput("box grid: upper bound below lower bound");
    const double span = a.upper - a.lower;
    const std::size_t count =
        static_cast<std::size_t>(std::floor(span / a.step + 1e-9)) + 1;
    counts.push_back(count);
    if (count > kMaxGridPoints / total)
      throw InvalidInput("box grid: too many points (limit 1e7)");
    total *= count;
    const double extent = static_cast<double>(count - 1) * a.step;
    diag_sq += extent * extent;
    if (count > 1) min_step = std::min(min_step, a.step);
  }
  MetricSpace s;
  s.kind_ = Kind::box_grid;
  s.size_ = total;
  s.diameter_ = std::sqrt(diag_sq);
  s.min_positive_ = min_step;
  s.axes_ = std::move(axes);
  s.axis_counts_ = std::move(counts);
  return s;
}

MetricSpace MetricSpace::read_finite(std::istream& in) {
  std::size_t n = 0;
  if (!(in >> n) || n == 0)
    throw InvalidInput("space file: expected positive point count");
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (!(in >> d[i][j]))
        throw InvalidInput("space file: truncated distance matrix");
  return finite(std::move(d));
}

double MetricSpace::distance(point_id a, point_id b) const {
  if (kind_ == Kind::finite) return dist_[a][b];
  if (a == b) return 0.0;
  if (axes_.size() == 1) {
    // One axis: |a-b| steps apart; avoids sqrt rounding in the common case.
    const double delta = coordinate(a, 0) - coordinate(b, 0);
    return std::fabs(delta);
  }
  double sum = 0.0;
  for (std::size_t ax = 0; ax < axes_.size(); ++ax) {
    const double delta = coordinate(a, ax) - coordinate(b, ax);
    sum += delta * delta;
  }
  return std::sqrt(sum);
}

double MetricSpace::coordinate(point_id p, std::size_t axis) const {
  // Row-major decomposition: axis 0 varies slowest.
  std::size_t rem = p;
  for (std::size_t ax = axes_.size(); ax-- > 0;) {
    const std::size_t idx = rem % axis_counts_[ax];
    rem /= axis_counts_[ax];
    if (ax == axis)
      return axes_[ax].lower + static_cast<double>(idx) * axes_[ax].step;
  }
  throw InvalidInput("box grid: axis index out of range");
}

std::vector<double> MetricSpace::coordinates(point_id p) const {
  std::vector<double> out(axes_.size(), 0.0);
  std::size_t rem = p;
  for (std::size_t ax = axes_.size(); ax-- > 0;) {
    const std::size_t idx = rem % axis_counts_[ax];
    rem /= axis_counts_[ax];
    out[ax] = axes_[ax].lower + static_cast<double>(idx) * axes_[ax].step;
  }
  return out;
}

std::string MetricSpace::point_label(point_id p) const {
  if (kind_ == Kind::finite) return "p" + std::to_string(p);
  std::string out = "(";
  const auto coords = coordinates(p);
  char buf[32];
  for (std::size_t ax = 0; ax < coords.size(); ++ax) {
    std::snprintf(buf, sizeof(buf), "%.6g", coords[ax]);
    if (ax) out += ",";
    out += buf;
  }
  out += ")";
  return out;
}

}  // namespace varcert

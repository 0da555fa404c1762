#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace varcert {

using point_id = std::size_t;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Malformed input data: bad files, invalid parameters, broken preconditions.
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridAxis {
  double lower = 0.0;
  double upper = 0.0;
  double step = 1.0;
};

// A complete metric space at desk scale. Two concrete kinds:
//   finite   - points are row indices of an explicit n x n distance matrix;
//   box_grid - points are the nodes of a regular grid over a box in R^k,
//              with the Euclidean metric inherited from the ambient space.
// Metric axioms are validated at construction (exhaustively for finite
// spaces up to 200 points, sampled beyond that).
class MetricSpace {
 public:
  enum class Kind { finite, box_grid };

  static MetricSpace finite(std::vector<std::vector<double>> distances);
  static MetricSpace box_grid(std::vector<GridAxis> axes);

  // Text format: first line n, then n lines of n space-separated distances.
  static MetricSpace read_finite(std::istream& in);

  Kind kind() const { return kind_; }
  bool is_finite_matrix() const { return kind_ == Kind::finite; }
  std::size_t size() const { return size_; }
  double distance(point_id a, point_id b) const;
  double diameter() const { return diameter_; }
  // Smallest positive pairwise distance (grid: the smallest axis step).
  double min_positive_distance() const { return min_positive_; }

  // box_grid only.
  const std::vector<GridAxis>& axes() const { return axes_; }
  std::vector<double> coordinates(point_id p) const;
  double coordinate(point_id p, std::size_t axis) const;

  std::string point_label(point_id p) const;

 private:
  MetricSpace() = default;

  Kind kind_ = Kind::finite;
  std::size_t size_ = 0;
  double diameter_ = 0.0;
  double min_positive_ = kInf;
  std::vector<std::vector<double>> dist_;   // finite
  std::vector<GridAxis> axes_;              // box_grid
  std::vector<std::size_t> axis_counts_;    // box_grid, per-axis node counts
};

using SpacePtr = std::shared_ptr<const MetricSpace>;

}  // namespace varcert

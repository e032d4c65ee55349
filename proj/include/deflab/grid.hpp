#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace deflab {

/// Uniform grid t_i = T_max * i / N, i = 0..N.
class TimeGrid {
 public:
  TimeGrid(double t_max, std::size_t steps);

  double t_max() const { return t_max_; }
  std::size_t steps() const { return steps_; }
  std::size_t nodes() const { return steps_ + 1; }
  double time(std::size_t i) const;
  double dt(std::size_t i) const { return time(i + 1) - time(i); }
  double nominal_step() const { return t_max_ / static_cast<double>(steps_); }

  /// Index of the node at time t; t must coincide with a node up to 1e-9 relative.
  std::size_t node_at(double t) const;

  /// Grid with every `factor`-th node (steps must divide evenly).
  TimeGrid coarsened(std::size_t factor) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double t_max_;
  std::size_t steps_;
};

/// Contiguous slice [first, first + count) of the global path index space.
struct PathRange {
  std::size_t first = 0;
  std::size_t count = 0;
};

/// Simulated values of one process: n_paths rows by grid.nodes() columns, row-major.
/// Rows carry their global path index (range().first + row) so that blocks of a
/// large run can be simulated and processed independently.
class PathBundle {
 public:
  PathBundle(TimeGrid grid, PathRange range, std::string label = {});

  static PathBundle filled(TimeGrid grid, PathRange range, double value, std::string label = {});

  const TimeGrid& grid() const { return grid_; }
  PathRange range() const { return range_; }
  std::size_t n_paths() const { return range_.count; }
  std::size_t nodes() const { return grid_.nodes(); }
  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  double& operator()(std::size_t path, std::size_t node) { return values_[path * nodes() + node]; }
  double operator()(std::size_t path, std::size_t node) const {
    return values_[path * nodes() + node];
  }
  std::span<double> path(std::size_t p) { return {values_.data() + p * nodes(), nodes()}; }
  std::span<const double> path(std::size_t p) const {
    return {values_.data() + p * nodes(), nodes()};
  }
  std::span<const double> values() const { return values_; }

  /// Throws StructuralError unless `other` has the same grid and path range.
  void require_compatible(const PathBundle& other, const char* context) const;

  /// CSV: header "path,t=<t0>,..." then one row per path; every `stride`-th node
  /// plus the last node, at most `max_paths` rows.
  void write_csv(std::ostream& os, std::size_t stride = 1,
                 std::size_t max_paths = static_cast<std::size_t>(-1)) const;

 private:
  TimeGrid grid_;
  PathRange range_;
  std::string label_;
  std::vector<double> values_;
};

/// Values of a process at a few checkpoint times, one row per path.
struct CheckpointPanel {
  std::vector<double> times;
  std::size_t n_paths = 0;
  std::vector<double> values;  // n_paths x times.size(), row-major

  double operator()(std::size_t path, std::size_t k) const {
    return values[path * times.size() + k];
  }
  std::vector<double> column(std::size_t k) const;

  static CheckpointPanel sample(const PathBundle& b, std::span<const double> times);
  /// Concatenate panels with identical checkpoint times, in argument order.
  static CheckpointPanel concat(std::span<const CheckpointPanel> parts);
};

}  // namespace deflab

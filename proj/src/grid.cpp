#include "deflab/grid.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "deflab/errors.hpp"

namespace deflab {

TimeGrid::TimeGrid(double t_max, std::size_t steps) : t_max_(t_max), steps_(steps) {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw DomainError("time grid needs T_max > 0");
  if (steps < 1) throw DomainError("time grid needs at least one step");
}

double TimeGrid::time(std::size_t i) const {
  if (i == steps_) return t_max_;
  return t_max_ * static_cast<double>(i) / static_cast<double>(steps_);
}

std::size_t TimeGrid::node_at(double t) const {
  if (t < 0.0 || t > t_max_ * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "time " << t << " outside grid [0, " << t_max_ << "]";
    throw DomainError(os.str());
  }
  const double pos = t / nominal_step();
  const auto i = static_cast<std::size_t>(std::llround(pos));
  if (std::abs(time(i) - t) > 1e-9 * std::max(1.0, t_max_)) {
    std::ostringstream os;
    os << "time " << t << " is not a grid node (step " << nominal_step() << ")";
    throw DomainError(os.str());
  }
  return i;
}

TimeGrid TimeGrid::coarsened(std::size_t factor) const {
  if (factor == 0 || steps_ % factor != 0) throw StructuralError("grid cannot be coarsened evenly");
  return TimeGrid(t_max_, steps_ / factor);
}

PathBundle::PathBundle(TimeGrid grid, PathRange range, std::string label)
    : grid_(grid), range_(range), label_(std::move(label)), values_(range.count * grid.nodes()) {}

PathBundle PathBundle::filled(TimeGrid grid, PathRange range, double value, std::string label) {
  PathBundle b(grid, range, std::move(label));
  std::fill(b.values_.begin(), b.values_.end(), value);
  return b;
}

void PathBundle::require_compatible(const PathBundle& other, const char* context) const {
  if (!(grid_ == other.grid_) || range_.first != other.range_.first ||
      range_.count != other.range_.count) {
    std::ostringstream os;
    os << context << ": bundles '" << label_ << "' and '" << other.label_
       << "' differ in grid or path range";
    throw StructuralError(os.str());
  }
}

void PathBundle::write_csv(std::ostream& os, std::size_t stride, std::size_t max_paths) const {
  if (stride == 0) stride = 1;
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < nodes(); j += stride) cols.push_back(j);
  if (cols.back() != nodes() - 1) cols.push_back(nodes() - 1);

  const auto old_precision = os.precision(17);
  os << "path";
  for (auto j : cols) os << ",t=" << grid_.time(j);
  os << '\n';
  const std::size_t rows = std::min(max_paths, n_paths());
  for (std::size_t p = 0; p < rows; ++p) {
    os << range_.first + p;
    for (auto j : cols) os << ',' << (*this)(p, j);
    os << '\n';
  }
  os.precision(old_precision);
}

std::vector<double> CheckpointPanel::column(std::size_t k) const {
  std::vector<double> out(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) out[p] = (*this)(p, k);
  return out;
}

CheckpointPanel CheckpointPanel::sample(const PathBundle& b, std::span<const double> times) {
  CheckpointPanel panel;
  panel.times.assign(times.begin(), times.end());
  panel.n_paths = b.n_paths();
  panel.values.resize(panel.n_paths * times.size());
  std::vector<std::size_t> idx;
  idx.reserve(times.size());
  for (double t : times) idx.push_back(b.grid().node_at(t));
  for (std::size_t p = 0; p < b.n_paths(); ++p)
    for (std::size_t k = 0; k < idx.size(); ++k)
      panel.values[p * idx.size() + k] = b(p, idx[k]);
  return panel;
}

CheckpointPanel CheckpointPanel::concat(std::span<const CheckpointPanel> parts) {
  CheckpointPanel out;
  if (parts.empty()) return out;
  out.times = parts.front().times;
  for (const auto& part : parts) {
    if (part.times != out.times) throw StructuralError("panel concat: checkpoint times differ");
    out.n_paths += part.n_paths;
    out.values.insert(out.values.end(), part.values.begin(), part.values.end());
  }
  return out;
}

}  // namespace deflab

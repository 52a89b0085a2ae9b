#include "qspec/sample.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qspec/errors.hpp"

namespace qspec {

void Sample::validate(std::size_t min_n, std::size_t min_distinct) const {
  if (x.size() != y.size()) {
    throw InvalidArgument("sample: x and y have different lengths (" + std::to_string(x.size()) +
                          " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < min_n) {
    throw InvalidArgument("sample: need at least " + std::to_string(min_n) +
                          " observations, got " + std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || x[i] < 0.0 || x[i] > 1.0) {
      throw InvalidArgument("sample: covariate " + std::to_string(i) + " is outside [0, 1]");
    }
    if (!std::isfinite(y[i])) {
      throw InvalidArgument("sample: response " + std::to_string(i) + " is not finite");
    }
  }
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const auto distinct =
      static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  if (distinct < min_distinct) {
    throw InvalidArgument("sample: need at least " + std::to_string(min_distinct) +
                          " distinct covariate values, got " + std::to_string(distinct));
  }
}

Curve::Curve(std::vector<double> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (grid_.empty() || grid_.size() != values_.size()) {
    throw InvalidArgument("curve: grid and values must be nonempty and of equal length");
  }
  for (std::size_t i = 1; i < grid_.size(); ++i) {
    if (!(grid_[i] > grid_[i - 1])) throw InvalidArgument("curve: grid must be strictly increasing");
  }
}

double Curve::operator()(double x) const {
  if (grid_.empty()) throw InvalidArgument("curve: empty");
  // Allow a few ulps of slack at the ends; grids are produced by linspace.
  const double slack = 1e-12 * std::max(1.0, std::abs(grid_.back()));
  if (x < grid_.front() - slack || x > grid_.back() + slack) {
    throw InvalidArgument("curve: evaluation at " + std::to_string(x) + " outside [" +
                          std::to_string(grid_.front()) + ", " + std::to_string(grid_.back()) + "]");
  }
  return interpolate(x);
}

double Curve::clamped(double x) const {
  if (grid_.empty()) throw InvalidArgument("curve: empty");
  return interpolate(std::clamp(x, grid_.front(), grid_.back()));
}

double Curve::interpolate(double x) const {
  if (x <= grid_.front()) return values_.front();
  if (x >= grid_.back()) return values_.back();
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
  const auto k = static_cast<std::size_t>(it - grid_.begin());
  const double x0 = grid_[k - 1], x1 = grid_[k];
  const double w = (x - x0) / (x1 - x0);
  return values_[k - 1] + w * (values_[k] - values_[k - 1]);
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  if (lo == hi) return {lo};
  if (count < 2 || !(lo < hi)) throw InvalidArgument("linspace: need count >= 2 and lo < hi");
  std::vector<double> out(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

}  // namespace qspec

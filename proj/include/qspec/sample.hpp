#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qspec {

/// Paired covariate/response observations with covariates in [0, 1].
struct Sample {
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const noexcept { return x.size(); }

  /// Throws InvalidArgument unless lengths match, covariates are finite and
  /// in [0, 1], responses are finite, n >= min_n, and there are at least
  /// min_distinct distinct covariate values.
  void validate(std::size_t min_n = 2, std::size_t min_distinct = 1) const;
};

/// A function tabulated on a strictly increasing grid, linearly interpolated
/// between nodes. Evaluation outside [front, back] throws InvalidArgument.
class Curve {
 public:
  Curve() = default;
  Curve(std::vector<double> grid, std::vector<double> values);

  double operator()(double x) const;
  /// Same as operator() but clamps x to the grid range first.
  double clamped(double x) const;

  std::span<const double> grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return grid_.size(); }
  double lo() const { return grid_.front(); }
  double hi() const { return grid_.back(); }

 private:
  double interpolate(double x) const;

  std::vector<double> grid_;
  std::vector<double> values_;
};

/// `count` equispaced nodes covering [lo, hi] (count >= 2, lo < hi), or the
/// single node lo when lo == hi.
std::vector<double> linspace(double lo, double hi, std::size_t count);

}  // namespace qspec

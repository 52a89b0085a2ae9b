#pragma once

#include <cstddef>

#include "qspec/sample.hpp"

namespace qspec {

struct RearrangeConfig {
  double a = 0.0;
  double b = 1.0;
  std::size_t grid_m = 2001;

  void validate() const;
};

/// Increasing rearrangement on [a, b]: g is sampled at grid_m equispaced
/// nodes and the sorted values are returned on the same nodes. A
/// nondecreasing input comes back unchanged.
Curve increasing_rearrangement(const Curve& g, const RearrangeConfig& cfg);

/// Rearranged quantile curve on [trim, 1 - trim].
Curve constrained_quantile_curve(const Curve& qhat, double trim, std::size_t grid_m = 2001);

}  // namespace qspec

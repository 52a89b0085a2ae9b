#include "qspec/rearrangement.hpp"

#include <algorithm>

#include "qspec/errors.hpp"

namespace qspec {

void RearrangeConfig::validate() const {
  if (!(a < b)) throw InvalidArgument("rearrangement interval must satisfy a < b");
  if (grid_m < 3) throw InvalidArgument("rearrangement grid needs at least 3 nodes");
}

Curve increasing_rearrangement(const Curve& g, const RearrangeConfig& cfg) {
  cfg.validate();
  auto nodes = linspace(cfg.a, cfg.b, cfg.grid_m);
  std::vector<double> values(nodes.size());
  std::transform(nodes.begin(), nodes.end(), values.begin(), [&](double x) { return g(x); });
  std::stable_sort(values.begin(), values.end());
  return Curve(std::move(nodes), std::move(values));
}

Curve constrained_quantile_curve(const Curve& qhat, double trim, std::size_t grid_m) {
  return increasing_rearrangement(qhat, RearrangeConfig{trim, 1.0 - trim, grid_m});
}

}  // namespace qspec

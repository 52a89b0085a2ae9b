#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <functional>

#include "qspec/errors.hpp"
#include "qspec/rearrangement.hpp"

using namespace qspec;

namespace {

Curve tabulate(double a, double b, std::size_t m, const std::function<double(double)>& f) {
  auto grid = linspace(a, b, m);
  std::vector<double> v(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) v[k] = f(grid[k]);
  return Curve(std::move(grid), std::move(v));
}

// Gamma g(x) = inf{y : |{u in [a,b] : g(u) <= y}| / (b - a) >= (x - a) / (b - a)},
// with the level-set measure from a fine midpoint rule and y found by bisection.
double rearranged_by_bisection(const std::function<double(double)>& g, double a, double b, double x) {
  const int fine = 200000;
  std::vector<double> values(fine);
  for (int i = 0; i < fine; ++i) values[i] = g(a + (b - a) * (i + 0.5) / fine);
  const double target = (x - a) / (b - a);
  double lo = *std::min_element(values.begin(), values.end()) - 1.0;
  double hi = *std::max_element(values.begin(), values.end());
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double mass =
        static_cast<double>(std::count_if(values.begin(), values.end(), [&](double v) { return v <= mid; })) /
        fine;
    (mass >= target ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

TEST_CASE("monotone input is returned unchanged", "[rearrangement]") {
  const Curve g = tabulate(0.0, 1.0, 2001, [](double x) { return x * x + std::floor(4 * x); });
  const Curve r = increasing_rearrangement(g, RearrangeConfig{0.0, 1.0, 2001});
  for (std::size_t k = 0; k < r.size(); ++k) CHECK(r.values()[k] == g.values()[k]);
}

TEST_CASE("decreasing input is reversed", "[rearrangement]") {
  const Curve g = tabulate(0.0, 1.0, 2001, [](double x) { return -x; });
  const Curve r = increasing_rearrangement(g, RearrangeConfig{0.0, 1.0, 2001});
  for (std::size_t k = 0; k < r.size(); ++k) {
    CHECK(std::abs(r.values()[k] - (r.grid()[k] - 1.0)) < 1e-12);
  }
}

TEST_CASE("rearrangement matches the level-set definition", "[rearrangement]") {
  const std::size_t m = 2001;
  const std::vector<std::function<double(double)>> funcs{
      [](double x) { return (x - 0.5) * (x - 0.5); },
      [](double x) { return std::sin(6 * x); },
      [](double x) { return x - 0.3 * std::sin(9 * x); },
  };
  const std::vector<double> slopes{1.0, 6.0, 3.7};
  for (std::size_t f = 0; f < funcs.size(); ++f) {
    const Curve g = tabulate(0.0, 1.0, 4001, funcs[f]);
    const Curve r = constrained_quantile_curve(g, 0.1, m);
    CHECK(r.lo() == 0.1);
    CHECK(r.hi() == 0.9);
    for (const double x : {0.101, 0.23, 0.5, 0.61, 0.77, 0.9}) {
      const double oracle = rearranged_by_bisection(funcs[f], 0.1, 0.9, x);
      CHECK(std::abs(r(x) - oracle) <= 2.0 * slopes[f] / static_cast<double>(m));
    }
  }
  // Closed form for the parabola on [0, 1]: Gamma g(x) = (x / 2)^2.
  const Curve p = tabulate(0.0, 1.0, 2001, funcs[0]);
  const Curve rp = increasing_rearrangement(p, RearrangeConfig{0.0, 1.0, 2001});
  for (std::size_t k = 0; k < rp.size(); k += 50) {
    CHECK(std::abs(rp.values()[k] - 0.25 * rp.grid()[k] * rp.grid()[k]) <= 2.0 / 2001.0);
  }
}

TEST_CASE("rearrangement is idempotent and keeps the value multiset", "[rearrangement]") {
  const Curve g = tabulate(0.0, 1.0, 1001, [](double x) { return std::cos(11 * x) + 0.2 * x; });
  const RearrangeConfig cfg{0.0, 1.0, 1001};
  const Curve r = increasing_rearrangement(g, cfg);
  const Curve rr = increasing_rearrangement(r, cfg);
  std::vector<double> sorted(g.values().begin(), g.values().end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < r.size(); ++k) {
    CHECK(rr.values()[k] == r.values()[k]);
    CHECK(r.values()[k] == sorted[k]);
    if (k > 0) CHECK(r.values()[k] >= r.values()[k - 1]);
  }
}

TEST_CASE("rearrangement configuration is validated", "[rearrangement]") {
  const Curve g = tabulate(0.0, 1.0, 11, [](double x) { return x; });
  CHECK_THROWS_AS(increasing_rearrangement(g, RearrangeConfig{0.5, 0.5, 101}), InvalidArgument);
  CHECK_THROWS_AS(increasing_rearrangement(g, RearrangeConfig{0.0, 1.0, 2}), InvalidArgument);
}

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qspec/bandwidths.hpp"
#include "qspec/errors.hpp"
#include "qspec/quantile_scale.hpp"
#include "qspec/simulation.hpp"

using namespace qspec;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

// (1/b) int_0^1 int_{-inf}^{tau} kappa((F(G^{-1}(u)) - v) / b) dv du by nested
// adaptive quadrature of the Epanechnikov density itself.
double h_double_integral(const std::function<double(double)>& FoGinv, double tau, double b,
                         std::vector<double> u_breaks) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const auto inner = [&](double u) {
    const double f = FoGinv(u);
    const double lo = std::max(f - b, -10.0), hi = std::min(f + b, tau);
    if (!(hi > lo)) return 0.0;
    return GK::integrate([&](double v) { return eval_kernel(kEpanechnikov, (f - v) / b) / b; }, lo,
                         hi, 10, 1e-13);
  };
  u_breaks.insert(u_breaks.begin(), 0.0);
  u_breaks.push_back(1.0);
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < u_breaks.size(); ++j) {
    total += GK::integrate(inner, u_breaks[j], u_breaks[j + 1], 10, 1e-12);
  }
  return total;
}

BandwidthSet bandwidths_for(const Sample& s) {
  return default_bandwidths(s.size(), rice_variance(s)).set;
}

}  // namespace

TEST_CASE("fit_normal_ref matches prescribed quantiles", "[quantile_scale]") {
  const double z95 = normal_quantile(0.95);
  CHECK(z95 == Catch::Approx(1.644854).epsilon(1e-6));
  // With 100 values the 5% and 95% order statistics are the 5th and 95th.
  std::vector<double> v(100, 0.0);
  for (std::size_t i = 0; i < 4; ++i) v[i] = -5.0;
  for (std::size_t i = 95; i < 100; ++i) v[i] = 5.0;
  v[4] = -z95;
  v[94] = z95;
  const auto ref = fit_normal_ref(v);
  CHECK(std::abs(ref.mu) < 1e-15);
  CHECK(ref.sigma == Catch::Approx(1.0).epsilon(1e-15));

  for (auto& x : v) x += 2.5;
  const auto shifted = fit_normal_ref(v);
  CHECK(shifted.mu == Catch::Approx(2.5).epsilon(1e-14));
  CHECK(shifted.sigma == Catch::Approx(ref.sigma).epsilon(1e-14));
}

TEST_CASE("fit_normal_ref on normal draws", "[quantile_scale]") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> z;
  std::vector<double> v(10000);
  for (auto& x : v) x = z(rng);
  const auto ref = fit_normal_ref(v);
  CHECK(std::abs(ref.mu) < 0.05);
  CHECK(std::abs(ref.sigma - 1.0) < 0.05);
  CHECK_THROWS_AS(fit_normal_ref(std::vector<double>(20, 1.0)), DegenerateSample);
}

TEST_CASE("empirical quantile is the left-continuous inverse", "[quantile_scale]") {
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(empirical_quantile(v, 0.05) == 1);
  CHECK(empirical_quantile(v, 0.1) == 1);
  CHECK(empirical_quantile(v, 0.11) == 2);
  CHECK(empirical_quantile(v, 0.95) == 10);
  CHECK(empirical_quantile(v, 0.9) == 9);
}

TEST_CASE("H of the reference itself returns tau", "[quantile_scale]") {
  const NormalRef G{0.3, 1.7};
  const auto F = [&](double y) { return G.cdf(y); };
  for (const double b : {0.01, 0.05, 0.1}) {
    for (int t = 1; t <= 9; ++t) {
      const double tau = t / 10.0;
      if (!(tau - b > 0.0 && tau + b < 1.0)) continue;
      CHECK(std::abs(h_functional(F, G, tau, b) - tau) < 1e-9);
    }
  }
}

TEST_CASE("H of degenerate and step functions", "[quantile_scale]") {
  const NormalRef G{0.0, 1.0};
  CHECK(h_functional([](double) { return 1.0; }, G, 0.5, 0.1) == 0.0);
  CHECK(std::abs(h_functional([](double) { return 0.0; }, G, 0.5, 0.1) - 1.0) < 1e-15);

  const double jump = G.quantile(0.3);
  const auto step = [&](double y) { return y >= jump ? 1.0 : 0.0; };
  const double oracle = h_double_integral([&](double u) { return step(G.quantile(u)); }, 0.5, 0.05, {0.3});
  CHECK(oracle == Catch::Approx(0.3).margin(1e-9));
  CHECK(std::abs(h_functional(step, G, 0.5, 0.05) - oracle) < 1e-6);
  const std::vector<double> jumps{jump}, levels{1.0};
  CHECK(std::abs(h_functional_step(jumps, levels, G, 0.5, 0.05) - oracle) < 1e-12);
}

TEST_CASE("H against the double integral for a smooth F", "[quantile_scale]") {
  const NormalRef G{0.0, 1.0};
  const NormalRef F{0.4, 0.6};
  const auto FoG = [&](double u) { return F.cdf(G.quantile(u)); };
  for (const double tau : {0.25, 0.5, 0.8}) {
    for (const double b : {0.002, 0.02, 0.1}) {
      // Break the outer integral where F(G^{-1}(u)) crosses tau +- b.
      std::vector<double> breaks;
      for (const double level : {tau - b, tau + b}) breaks.push_back(G.cdf(F.quantile(level)));
      const double oracle = h_double_integral(FoG, tau, b, breaks);
      CHECK(std::abs(h_functional([&](double y) { return F.cdf(y); }, G, tau, b) - oracle) < 1e-9);
    }
  }
}

TEST_CASE("H panel integration agrees with a 2048 point composite rule", "[quantile_scale]") {
  const NormalRef G{0.0, 1.0};
  const auto F = [](double y) { return 0.5 * std::erfc(-(y - 0.2) / (0.8 * M_SQRT2)); };
  const double tau = 0.5, b = 0.01;
  const auto integrand = [&](double u) {
    return 1.0 - eval_kappa_cdf((F(G.quantile(u)) - tau) / b);
  };
  double fine = 0.0;
  const int pieces = 128;  // 128 panels x 16 nodes
  for (int k = 0; k < pieces; ++k) {
    fine += boost::math::quadrature::gauss<double, 16>::integrate(
        integrand, static_cast<double>(k) / pieces, static_cast<double>(k + 1) / pieces);
  }
  CHECK(std::abs(h_functional(F, G, tau, b) - fine) < 1e-6);
}

TEST_CASE("H of step functions is monotone in tau and matches the double integral", "[quantile_scale]") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z;
  const NormalRef G{0.0, 1.0};
  for (int rep = 0; rep < 8; ++rep) {
    std::vector<double> jumps(6), levels(6);
    for (auto& j : jumps) j = z(rng);
    std::sort(jumps.begin(), jumps.end());
    double level = 0.0;
    for (auto& l : levels) l = (level += u(rng) / 6.0);
    const auto FoG = [&](double p) {
      const double y = G.quantile(p);
      double v = 0.0;
      for (std::size_t j = 0; j < jumps.size(); ++j)
        if (y >= jumps[j]) v = levels[j];
      return v;
    };
    std::vector<double> breaks;
    for (const double j : jumps) breaks.push_back(G.cdf(j));
    double prev = -1.0;
    for (double tau = 0.1; tau < 0.95; tau += 0.05) {
      const double h = h_functional_step(jumps, levels, G, tau, 0.03);
      CHECK(h >= prev);
      prev = h;
      if (static_cast<int>(std::lround(tau * 20)) % 4 == 0) {
        CHECK(std::abs(h_double_integral(FoG, tau, 0.03, breaks) - h) < 1e-9);
      }
    }
  }
}

TEST_CASE("quantile estimator on nearly constant responses", "[quantile_scale]") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Sample s;
  for (int i = 0; i < 60; ++i) {
    s.x.push_back(u(rng));
    s.y.push_back(3.0 + 1e-6 * (u(rng) - 0.5));
  }
  BandwidthSet bw;
  bw.h = 0.3;
  bw.d = 0.6;
  bw.b = 0.05;
  const QuantileEstimator q(s, 0.5, bw);
  for (const double x : {0.3, 0.5, 0.7}) {
    CHECK(std::abs(q(x) - 3.0) <= bw.d + bw.b * q.reference().sigma);
  }
  Sample flat{s.x, std::vector<double>(s.x.size(), 3.0)};
  CHECK_THROWS_AS(QuantileEstimator(flat, 0.5, bw), DegenerateSample);
}

TEST_CASE("quantile curve recovers the model 4 median", "[quantile_scale][slow]") {
  std::vector<double> errors;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = make_rng(101, seed);
    const Sample s = generate(ModelSpec{ModelId::m4}, 400, rng);
    const auto bw = bandwidths_for(s);
    const auto grid = linspace(bw.trim, 1.0 - bw.trim, 201);
    const Curve q = estimate_quantile_curve(s, 0.5, bw, grid);
    double worst = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      worst = std::max(worst, std::abs(q.values()[k] - (1.0 + grid[k])));
    }
    errors.push_back(worst);
  }
  CHECK(median(errors) <= 0.15);
}

TEST_CASE("quantile curves do not cross", "[quantile_scale]") {
  Rng rng = make_rng(5, 0);
  const Sample s = generate(ModelSpec{ModelId::m1h}, 150, rng);
  const auto bw = bandwidths_for(s);
  const auto grid = linspace(bw.trim, 1.0 - bw.trim, 101);
  std::vector<double> prev(grid.size(), -1e300);
  for (const double tau : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    const Curve q = estimate_quantile_curve(s, tau, bw, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(q.values()[k] >= prev[k]);
      prev[k] = q.values()[k];
    }
  }
}

TEST_CASE("serial and parallel curve evaluation agree", "[quantile_scale]") {
  Rng rng = make_rng(6, 0);
  const Sample s = generate(ModelSpec{ModelId::m3}, 120, rng);
  const auto bw = bandwidths_for(s);
  const auto grid = linspace(0.0, 1.0, 64);
  const Curve a = estimate_quantile_curve(s, 0.5, bw, grid, Exec{1});
  const Curve b = estimate_quantile_curve(s, 0.5, bw, grid, Exec{4});
  for (std::size_t k = 0; k < grid.size(); ++k) CHECK(a.values()[k] == b.values()[k]);
}

TEST_CASE("scale estimate of model 1 with a = 0", "[quantile_scale][slow]") {
  // s(x) is the conditional median of |Y - q(X)|: 0.1 times the normal 75% point.
  const double truth = 0.1 * normal_quantile(0.75);
  std::vector<double> errors;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = make_rng(202, seed);
    const Sample s = generate(ModelSpec{ModelId::m1, 0.0}, 400, rng);
    const auto bw = bandwidths_for(s);
    const QuantileEstimator q(s, 0.5, bw);
    const auto q_at_x = q.evaluate(s.x);
    const auto grid = linspace(2.0 * bw.trim, 1.0 - 2.0 * bw.trim, 101);
    const Curve sc = estimate_scale_curve(s, q_at_x, bw, grid);
    double worst = 0.0;
    for (const double v : sc.values()) worst = std::max(worst, std::abs(v - truth));
    errors.push_back(worst);
  }
  CHECK(median(errors) <= 0.05);
}

TEST_CASE("scale estimator degenerate and equivariance cases", "[quantile_scale]") {
  Rng rng = make_rng(7, 0);
  const Sample s = generate(ModelSpec{ModelId::m1h}, 100, rng);
  const auto bw = bandwidths_for(s);
  const auto grid = linspace(0.1, 0.9, 41);
  CHECK_THROWS_AS(estimate_scale_curve(s, std::span<const double>(s.y), bw, grid), DegenerateSample);

  const double c = 3.0;
  Sample scaled = s;
  for (auto& y : scaled.y) y *= c;
  BandwidthSet bw_c = bw;
  bw_c.d *= c;
  const QuantileEstimator q(s, 0.5, bw), qc(scaled, 0.5, bw_c);
  const Curve a = estimate_scale_curve(s, q.evaluate(s.x), bw, grid);
  const Curve b = estimate_scale_curve(scaled, qc.evaluate(scaled.x), bw_c, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(std::abs(b.values()[k] - c * a.values()[k]) < 1e-8);
    CHECK(a.values()[k] > 0.0);
  }
}

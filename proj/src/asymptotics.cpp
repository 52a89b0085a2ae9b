#include "qspec/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/roots.hpp>

#include "qspec/errors.hpp"

namespace qspec {

namespace {

double uniform_cdf(double x) { return std::clamp(x, 0.0, 1.0); }

double covariate_factor(const std::function<double(double)>& F_X, double s, double t) {
  const auto F = [&](double v) { return F_X ? F_X(v) : uniform_cdf(v); };
  return F(std::min(s, t)) - F(s) * F(t);
}

double phi_location(const ErrorModel& em, double y) { return em.pdf(y) / em.pdf(0.0); }

}  // namespace

double RawErrorLaw::cdf(double x) const {
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  const double z = (x - mu) / sigma;
  if (family == ErrorFamily::normal) return boost::math::cdf(boost::math::normal_distribution<>(), z);
  return boost::math::cdf(boost::math::students_t_distribution<>(nu), z);
}

double RawErrorLaw::pdf(double x) const {
  if (std::isinf(x)) return 0.0;
  const double z = (x - mu) / sigma;
  if (family == ErrorFamily::normal) {
    return boost::math::pdf(boost::math::normal_distribution<>(), z) / sigma;
  }
  return boost::math::pdf(boost::math::students_t_distribution<>(nu), z) / sigma;
}

double RawErrorLaw::quantile(double u) const {
  if (family == ErrorFamily::normal) {
    return mu + sigma * boost::math::quantile(boost::math::normal_distribution<>(), u);
  }
  return mu + sigma * boost::math::quantile(boost::math::students_t_distribution<>(nu), u);
}

double ErrorModel::cdf(double y) const {
  if (y == 0.0) return tau;
  return raw.cdf(shift + y / factor);
}

double ErrorModel::pdf(double y) const { return raw.pdf(shift + y / factor) / factor; }

double ErrorModel::abs_pdf(double y) const { return y < 0.0 ? 0.0 : pdf(y) + pdf(-y); }

ErrorModel rescale_error_model(const RawErrorLaw& raw, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("tau must lie in (0, 1)");
  if (!(raw.sigma > 0.0)) throw InvalidArgument("error law scale must be positive");
  if (raw.family == ErrorFamily::student_t && !(raw.nu > 0.0)) {
    throw InvalidArgument("student t degrees of freedom must be positive");
  }
  ErrorModel em;
  em.raw = raw;
  em.tau = tau;
  em.shift = raw.quantile(tau);
  const auto mass = [&](double q) { return raw.cdf(em.shift + q) - raw.cdf(em.shift - q) - 0.5; };
  double hi = raw.sigma;
  while (mass(hi) < 0.0) hi *= 2.0;
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      mass, 0.0, hi, -0.5, mass(hi), boost::math::tools::eps_tolerance<double>(52), iters);
  em.factor = 2.0 / (a + b);
  return em;
}

double phi(const ErrorModel& em, double y) {
  const double ratio = (em.pdf(1.0) - em.pdf(-1.0)) / em.abs_pdf(1.0);
  return em.pdf(y) / em.pdf(0.0) * (1.0 - y * ratio);
}

double psi(const ErrorModel& em, double y) { return y * em.pdf(y) / em.abs_pdf(1.0); }

double influence(const ErrorModel& em, double eps, double y) {
  const double ind_y = eps <= y ? 1.0 : 0.0;
  const double ind_0 = eps <= 0.0 ? 1.0 : 0.0;
  const double ind_1 = std::abs(eps) <= 1.0 ? 1.0 : 0.0;
  return ind_y - em.cdf(y) - phi(em, y) * (ind_0 - em.tau) - psi(em, y) * (ind_1 - 0.5);
}

double limit_covariance(const LimitCovarianceSpec& spec, double s, double y, double t, double z) {
  const ErrorModel& em = spec.error_model;
  const double tau = em.tau;
  const bool loc = spec.kind == ExpansionKind::location;
  const double py = loc ? phi_location(em, y) : phi(em, y);
  const double pz = loc ? phi_location(em, z) : phi(em, z);
  const double sy = loc ? 0.0 : psi(em, y);
  const double sz = loc ? 0.0 : psi(em, z);
  const double Fy = em.cdf(y), Fz = em.cdf(z), Fm1 = em.cdf(-1.0);

  const auto strip = [&](double v, double Fv) {
    return (v > -1.0 ? em.cdf(std::min(v, 1.0)) - Fm1 : 0.0) - 0.5 * Fv;
  };
  double bracket = em.cdf(std::min(y, z)) - Fy * Fz;
  bracket += py * pz * (tau - tau * tau);
  bracket += 0.25 * sy * sz;
  bracket -= py * (em.cdf(std::min(z, 0.0)) - Fz * tau);
  bracket -= pz * (em.cdf(std::min(y, 0.0)) - Fy * tau);
  bracket -= sy * strip(z, Fz);
  bracket -= sz * strip(y, Fy);
  bracket += (py * sz + pz * sy) * (em.cdf(0.0) - Fm1 - 0.5 * tau);
  return covariate_factor(spec.F_X, s, t) * bracket;
}

double location_limit_covariance(const ErrorModel& em, const std::function<double(double)>& F_X,
                                 double s, double y, double t, double z) {
  const double f0 = em.pdf(0.0);
  const double py = em.pdf(y) / f0, pz = em.pdf(z) / f0;
  const double Fy = em.cdf(y), Fz = em.cdf(z), tau = em.tau;
  const double bracket = em.cdf(std::min(y, z)) - Fy * Fz + py * pz * tau * (1.0 - tau) -
                         py * (em.cdf(std::min(z, 0.0)) - Fz * tau) -
                         pz * (em.cdf(std::min(y, 0.0)) - Fy * tau);
  return covariate_factor(F_X, s, t) * bracket;
}

}  // namespace qspec

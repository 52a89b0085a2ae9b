#include "qspec/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <json.hpp>

#include "qspec/errors.hpp"
#include "qspec/quantile_scale.hpp"
#include "qspec/rearrangement.hpp"

namespace qspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp_to(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

// Estimator failures that make a bootstrap replication unusable. Anything
// else (bad arguments) is a bug and propagates.
bool is_estimation_failure(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const InvalidArgument&) {
    return false;
  } catch (const Error&) {
    return true;
  } catch (...) {
    return false;
  }
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

ModelKind parse_model_kind(std::string_view name) {
  if (name == "location") return ModelKind::location;
  if (name == "location_scale" || name == "location-scale") return ModelKind::location_scale;
  if (name == "monotone") return ModelKind::monotone;
  throw InvalidArgument("unknown model kind '" + std::string(name) +
                        "' (expected location, location_scale or monotone)");
}

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::location: return "location";
    case ModelKind::location_scale: return "location_scale";
    case ModelKind::monotone: return "monotone";
  }
  return "?";
}

BootstrapCenter default_center(ModelKind kind) noexcept {
  return kind == ModelKind::monotone ? BootstrapCenter::rearranged_q
                                     : BootstrapCenter::unconstrained_q;
}

std::string center_name(BootstrapCenter center) {
  return center == BootstrapCenter::rearranged_q ? "rearranged_q" : "unconstrained_q";
}

ModelFit fit_model(const Sample& sample, const FitOptions& opts) {
  opts.bw.validate();
  if (!(opts.tau > 0.0 && opts.tau < 1.0)) throw InvalidArgument("tau must lie in (0, 1)");
  const std::size_t n = sample.size();
  const double trim = opts.bw.trim;
  const TrimWindow window = TrimWindow::symmetric(trim, opts.trim_factor);
  if (!(window.lo < window.hi)) {
    throw TrimEmpty("trim interval empty: (" + std::to_string(window.lo) + ", " +
                    std::to_string(window.hi) + "]");
  }

  ModelFit fit;
  const QuantileEstimator qest(sample, opts.tau, opts.bw);
  // Off the estimation interval the curves are continued as constants.
  std::vector<double> xq(n);
  for (std::size_t i = 0; i < n; ++i) xq[i] = clamp_to(sample.x[i], trim, 1.0 - trim);
  fit.q_at_x = qest.evaluate(xq, opts.exec);

  if (opts.kind == ModelKind::location) {
    fit.s_at_x.assign(n, 1.0);
  } else {
    const auto abs_res = absolute_residuals(sample, fit.q_at_x, trim, 1.0 - trim);
    if (abs_res.x.empty()) throw TrimEmpty("trim interval empty: no residuals for the scale fit");
    const ScaleEstimator sest(abs_res.x, abs_res.abs_e, opts.bw);
    std::vector<double> xs(n);
    const double lo = std::min(2.0 * trim, 0.5), hi = std::max(1.0 - 2.0 * trim, 0.5);
    for (std::size_t i = 0; i < n; ++i) xs[i] = clamp_to(sample.x[i], lo, hi);
    fit.s_at_x = sest.evaluate(xs, opts.exec);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(fit.s_at_x[i] > 0.0)) {
        throw ScaleDegenerate("scale estimate is nonpositive at x = " + std::to_string(xs[i]));
      }
    }
  }
  const std::optional<std::span<const double>> scale =
      opts.kind == ModelKind::location ? std::nullopt
                                       : std::optional<std::span<const double>>(fit.s_at_x);
  fit.residuals = compute_residuals(sample, fit.q_at_x, scale, window);

  if (opts.kind == ModelKind::monotone || opts.tabulate) {
    const auto grid = linspace(trim, 1.0 - trim, opts.grid_nodes);
    fit.qhat = Curve(grid, qest.evaluate(grid, opts.exec));
  }
  if (opts.kind == ModelKind::monotone) {
    fit.qhat_I = constrained_quantile_curve(*fit.qhat, trim, opts.grid_m);
    // The rearrangement acts on the tabulated curve; its shift is carried over
    // to the exact values at the covariates, so a monotone estimate leaves
    // every residual unchanged.
    fit.qI_at_x = fit.q_at_x;
    const auto tab = fit.qhat->values();
    const bool monotone = std::is_sorted(tab.begin(), tab.end());
    for (std::size_t i = 0; i < n && !monotone; ++i) {
      fit.qI_at_x[i] = fit.q_at_x[i] + (fit.qhat_I->clamped(xq[i]) - fit.qhat->clamped(xq[i]));
    }
    fit.constrained = compute_residuals(sample, fit.qI_at_x, scale, window);
    fit.field = independence_process(*fit.constrained, fit.residuals, opts.exec);
  } else {
    fit.field = independence_process(fit.residuals, fit.residuals, opts.exec);
  }
  fit.ks = ks_statistic(fit.field);
  fit.cvm = cvm_statistic(fit.field, fit.residuals);
  return fit;
}

double smooth_error_cdf_eval(const SmoothErrorCdf& cdf, double y) {
  if (cdf.residuals.empty()) throw InvalidArgument("smooth error cdf: no residuals");
  if (!(cdf.alpha > 0.0)) throw InvalidArgument("smooth error cdf: alpha must be positive");
  if (y == kInf) return 1.0;
  if (y == -kInf) return 0.0;
  double sum = 0.0;
  for (const double e : cdf.residuals) sum += normal_cdf((y - e) / cdf.alpha);
  return sum / static_cast<double>(cdf.residuals.size());
}

std::vector<double> draw_bootstrap_errors(const SmoothErrorCdf& cdf, std::size_t n, Rng& rng) {
  if (cdf.residuals.empty()) throw InvalidArgument("bootstrap errors: no residuals");
  std::uniform_int_distribution<std::size_t> pick(0, cdf.residuals.size() - 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& e : out) {
    const double base = cdf.residuals[pick(rng)];
    e = base + cdf.alpha * noise(rng);
  }
  return out;
}

BootstrapStatistics bootstrap_replication(std::span<const double> sample_x,
                                          std::span<const double> center,
                                          std::span<const double> scale, const SmoothErrorCdf& cdf,
                                          const FitOptions& opts, Rng& rng) {
  const std::size_t n = sample_x.size();
  if (center.size() != n || scale.size() != n) {
    throw InvalidArgument("bootstrap_replication: need center and scale at every covariate");
  }
  const auto errors = draw_bootstrap_errors(cdf, n, rng);
  Sample boot;
  boot.x.assign(sample_x.begin(), sample_x.end());
  boot.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) boot.y[i] = center[i] + scale[i] * errors[i];
  FitOptions local = opts;
  local.tabulate = false;
  const ModelFit fit = fit_model(boot, local);
  return {fit.ks, fit.cvm};
}

void BootstrapConfig::validate() const {
  if (B < 1) throw InvalidArgument("B must be at least 1");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("level must lie in (0, 1)");
  if (!(max_failure_fraction >= 0.0 && max_failure_fraction < 1.0)) {
    throw InvalidArgument("max_failure_fraction must lie in [0, 1)");
  }
  if (grid_nodes < 2) throw InvalidArgument("grid_nodes must be at least 2");
  if (grid_m < 3) throw InvalidArgument("grid_m must be at least 3");
}

std::size_t critical_rank(std::size_t B, double level) {
  // The small slack keeps e.g. 0.95 * 20 from rounding up past 19.
  const double target = (1.0 - level) * static_cast<double>(B + 1);
  return static_cast<std::size_t>(std::max(1.0, std::ceil(target - 1e-9)));
}

double critical_value(std::vector<double> stats, double level) {
  const std::size_t k = critical_rank(stats.size(), level);
  if (k > stats.size()) return kInf;
  std::nth_element(stats.begin(), stats.begin() + static_cast<std::ptrdiff_t>(k - 1), stats.end());
  return stats[k - 1];
}

double bootstrap_p_value(std::span<const double> stats, double observed) {
  const auto count = std::count_if(stats.begin(), stats.end(), [&](double s) { return s >= observed; });
  return (1.0 + static_cast<double>(count)) / (static_cast<double>(stats.size()) + 1.0);
}

TestReport bootstrap_test(const Sample& sample, double tau, const BandwidthSet& bw,
                          const BootstrapConfig& cfg, ModelKind kind) {
  cfg.validate();
  bw.validate();
  sample.validate(static_cast<std::size_t>(bw.p) + 2, static_cast<std::size_t>(bw.p) + 1);
  const BootstrapCenter center = cfg.center.value_or(default_center(kind));
  if (center == BootstrapCenter::rearranged_q && kind != ModelKind::monotone) {
    throw InvalidArgument("the rearranged center is only available for the monotone test");
  }
  const TrimWindow boot_window = TrimWindow::symmetric(bw.trim, 4.0);
  if (std::none_of(sample.x.begin(), sample.x.end(),
                   [&](double x) { return boot_window.contains(x); })) {
    throw TrimEmpty("trim interval empty: no covariate in (" + std::to_string(boot_window.lo) +
                    ", " + std::to_string(boot_window.hi) + "]");
  }

  FitOptions opts;
  opts.kind = kind;
  opts.tau = tau;
  opts.bw = bw;
  opts.trim_factor = 2.0;
  opts.grid_nodes = cfg.grid_nodes;
  opts.grid_m = cfg.grid_m;
  opts.exec = Exec{cfg.workers};
  const ModelFit data = fit_model(sample, opts);

  TestReport report;
  report.kind = kind;
  report.tau = tau;
  report.bw = bw;
  report.config = cfg;
  report.config.center = center;
  report.n = sample.size();
  report.n_trim = data.residuals.n_trim();
  report.statistic_ks = data.ks;
  report.statistic_cvm = data.cvm;

  SmoothErrorCdf cdf{data.residuals.eps, bw.alpha};
  if (!(cdf.alpha > 0.0)) cdf.alpha = bootstrap_alpha(data.residuals.eps, sample.size());
  if (!(cdf.alpha > 0.0)) throw DegenerateSample("bootstrap smoothing is zero: residuals vanish");
  report.bw.alpha = cdf.alpha;

  const std::vector<double>& centers =
      center == BootstrapCenter::rearranged_q ? data.qI_at_x : data.q_at_x;
  FitOptions boot_opts = opts;
  boot_opts.trim_factor = 4.0;
  boot_opts.exec = Exec{1};

  std::vector<std::optional<BootstrapStatistics>> results(cfg.B);
  parallel_for(cfg.B, Exec{cfg.workers}, [&](std::size_t b) {
    Rng rng = make_rng(cfg.seed, b);
    try {
      results[b] = bootstrap_replication(sample.x, centers, data.s_at_x, cdf, boot_opts, rng);
    } catch (...) {
      if (!is_estimation_failure(std::current_exception())) throw;
    }
  });

  for (const auto& r : results) {
    if (!r) {
      ++report.failures;
      continue;
    }
    report.boot_ks.push_back(r->ks);
    report.boot_cvm.push_back(r->cvm);
  }
  report.B_effective = report.boot_ks.size();
  if (static_cast<double>(report.failures) > cfg.max_failure_fraction * static_cast<double>(cfg.B) ||
      report.B_effective == 0) {
    throw BootstrapUnstable(std::to_string(report.failures) + " of " + std::to_string(cfg.B) +
                            " bootstrap replications failed");
  }
  report.critical_ks = critical_value(report.boot_ks, cfg.level);
  report.critical_cvm = critical_value(report.boot_cvm, cfg.level);
  report.p_ks = bootstrap_p_value(report.boot_ks, report.statistic_ks);
  report.p_cvm = bootstrap_p_value(report.boot_cvm, report.statistic_cvm);
  report.reject_ks = report.statistic_ks >= report.critical_ks;
  report.reject_cvm = report.statistic_cvm >= report.critical_cvm;
  return report;
}

std::string TestReport::to_json(int indent) const {
  nlohmann::ordered_json doc;
  doc["statistic_ks"] = statistic_ks;
  doc["statistic_cvm"] = statistic_cvm;
  doc["critical_ks"] = finite_or_null(critical_ks);
  doc["critical_cvm"] = finite_or_null(critical_cvm);
  doc["p_ks"] = p_ks;
  doc["p_cvm"] = p_cvm;
  doc["reject_ks"] = reject_ks;
  doc["reject_cvm"] = reject_cvm;
  doc["B_effective"] = B_effective;
  doc["failures"] = failures;
  doc["n"] = n;
  doc["n_trim"] = n_trim;
  nlohmann::ordered_json c;
  c["model_kind"] = model_kind_name(kind);
  c["tau"] = tau;
  c["level"] = config.level;
  c["B"] = config.B;
  c["seed"] = config.seed;
  c["center"] = center_name(config.center.value_or(default_center(kind)));
  c["h"] = bw.h;
  c["d"] = bw.d;
  c["b"] = bw.b;
  c["alpha"] = bw.alpha;
  c["p"] = bw.p;
  c["trim"] = bw.trim;
  c["kernel_K"] = kernel_name(bw.kernel);
  c["grid_nodes"] = config.grid_nodes;
  c["grid_m"] = config.grid_m;
  doc["config"] = std::move(c);
  return doc.dump(indent);
}

}  // namespace qspec

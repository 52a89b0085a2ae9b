#include "qspec/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "qspec/errors.hpp"
#include "qspec/quantile_scale.hpp"

namespace qspec {

namespace {

double open_uniform(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = 0.0;
  while (u <= 0.0) u = unif(rng);
  return u;
}

double closed_uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

bool heteroscedastic(ModelId id) {
  return id == ModelId::m1h || id == ModelId::m2ah || id == ModelId::m2bh || id == ModelId::m3h;
}

std::string fmt_param(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Degrees of freedom and scale of the t error in models 2b / 2bh at x.
std::pair<double, double> m2b_error(double c, double x) {
  const double r = std::pow(c * x, 0.25);
  const double nu = r > 0.0 ? 2.0 / r : std::numeric_limits<double>::infinity();
  if (!(nu >= 2.0)) throw InvalidArgument("model 2b: degrees of freedom below 2");
  return {nu, std::sqrt(std::max(0.0, 1.0 - r))};
}

}  // namespace

ModelId parse_model_id(std::string_view name) {
  static const std::pair<std::string_view, ModelId> table[] = {
      {"m1", ModelId::m1},   {"m2a", ModelId::m2a},   {"m2b", ModelId::m2b},   {"m3", ModelId::m3},
      {"m1h", ModelId::m1h}, {"m2ah", ModelId::m2ah}, {"m2bh", ModelId::m2bh}, {"m3h", ModelId::m3h},
      {"m4", ModelId::m4},   {"m5", ModelId::m5}};
  for (const auto& [key, id] : table)
    if (key == name) return id;
  throw InvalidArgument("unknown model '" + std::string(name) + "'");
}

std::string model_id_name(ModelId id) {
  switch (id) {
    case ModelId::m1: return "m1";
    case ModelId::m2a: return "m2a";
    case ModelId::m2b: return "m2b";
    case ModelId::m3: return "m3";
    case ModelId::m1h: return "m1h";
    case ModelId::m2ah: return "m2ah";
    case ModelId::m2bh: return "m2bh";
    case ModelId::m3h: return "m3h";
    case ModelId::m4: return "m4";
    case ModelId::m5: return "m5";
  }
  return "?";
}

void ModelSpec::validate() const {
  for (const double v : {a, b, c, beta})
    if (!std::isfinite(v)) throw InvalidArgument("model parameters must be finite");
  switch (id) {
    case ModelId::m1:
      if (a < -1.0) throw InvalidArgument("model 1 needs a >= -1 so that 1 + a x >= 0");
      break;
    case ModelId::m2a:
    case ModelId::m2ah:
      if (!(c > 0.5)) throw InvalidArgument("model 2a needs c > 1/2");
      break;
    case ModelId::m2b:
    case ModelId::m2bh:
      if (!(c >= 0.0 && c <= 1.0)) throw InvalidArgument("model 2b needs c in [0, 1]");
      break;
    default: break;
  }
}

std::string ModelSpec::label() const {
  const std::string name = model_id_name(id);
  switch (id) {
    case ModelId::m1: return name + "(a=" + fmt_param(a) + ")";
    case ModelId::m2a:
    case ModelId::m2b:
    case ModelId::m2ah:
    case ModelId::m2bh: return name + "(c=" + fmt_param(c) + ")";
    case ModelId::m3:
    case ModelId::m3h: return name + "(b=" + fmt_param(b) + ")";
    case ModelId::m4: return name + "(beta=" + fmt_param(beta) + ")";
    default: return name;
  }
}

CopulaDraw draw_copula(double b, Rng& rng) {
  const double x = closed_uniform(rng);
  const double v = closed_uniform(rng);
  const double w = closed_uniform(rng);
  const double div = b * (1.0 - 2.0 * x);
  if (div == 0.0) return {x, v};
  if (x <= 0.5) return {x, std::min(v, w / div)};
  return {x, std::max(v, 1.0 + w / div)};
}

double draw_student_t(double nu, Rng& rng) {
  const double u = open_uniform(rng);
  if (std::isinf(nu)) return normal_quantile(u);
  if (!(nu > 0.0)) throw InvalidArgument("student t needs positive degrees of freedom");
  return boost::math::quantile(boost::math::students_t_distribution<>(nu), u);
}

Sample generate(const ModelSpec& model, std::size_t n, Rng& rng) {
  model.validate();
  Sample s;
  s.x.resize(n);
  s.y.resize(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double x = 0.0, y = 0.0;
    switch (model.id) {
      case ModelId::m1:
      case ModelId::m1h: {
        x = closed_uniform(rng);
        const double sd = model.id == ModelId::m1 ? std::sqrt(1.0 + model.a * x) / 10.0
                                                  : (2.0 + x) / 10.0;
        y = base_curve(x) + sd * normal(rng);
        break;
      }
      case ModelId::m2a:
      case ModelId::m2ah: {
        x = closed_uniform(rng);
        const double sd = heteroscedastic(model.id) ? (2.0 + x) / 10.0 : 0.1;
        y = base_curve(x) + sd * std::sqrt(1.0 - 1.0 / (2.0 * model.c)) * draw_student_t(model.c, rng);
        break;
      }
      case ModelId::m2b:
      case ModelId::m2bh: {
        x = closed_uniform(rng);
        const auto [nu, scale] = m2b_error(model.c, x);
        const double sd = heteroscedastic(model.id) ? (2.0 + x) / 10.0 : 0.1;
        y = base_curve(x) + sd * scale * draw_student_t(nu, rng);
        break;
      }
      case ModelId::m3: {
        const auto [cx, u] = draw_copula(model.b, rng);
        x = cx;
        y = base_curve(x) + (u - 0.5 - model.b / 6.0 * (2.0 * x - 1.0));
        break;
      }
      case ModelId::m3h: {
        const auto [cx, u] = draw_copula(model.b, rng);
        x = cx;
        y = base_curve(x) + (2.0 + x) / 10.0 * (u - 0.5 - model.b * (2.0 * x - 1.0));
        break;
      }
      case ModelId::m4: {
        x = closed_uniform(rng);
        y = 1.0 + x - model.beta * std::exp(-50.0 * (x - 0.5) * (x - 0.5)) + 0.2 * normal(rng);
        break;
      }
      case ModelId::m5: {
        x = closed_uniform(rng);
        y = x / 2.0 + 2.0 * (0.1 - (x - 0.5) * (x - 0.5)) * normal(rng);
        break;
      }
    }
    s.x[i] = x;
    s.y[i] = y;
  }
  return s;
}

double true_quantile(const ModelSpec& model, double tau, double x) {
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("tau must lie in (0, 1)");
  const double z = normal_quantile(tau);
  switch (model.id) {
    case ModelId::m4:
      return 1.0 + x - model.beta * std::exp(-50.0 * (x - 0.5) * (x - 0.5)) + 0.2 * z;
    case ModelId::m5:
      // The noise coefficient changes sign near the ends; the spread is its
      // absolute value.
      return x / 2.0 + std::abs(2.0 * (0.1 - (x - 0.5) * (x - 0.5))) * z;
    default:
      throw InvalidArgument("true_quantile is available for models m4 and m5 only");
  }
}

void StudyConfig::validate() const {
  model.validate();
  if (runs < 1) throw InvalidArgument("runs must be at least 1");
  if (B < 1) throw InvalidArgument("B must be at least 1");
  if (n < 8) throw InvalidArgument("n must be at least 8");
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("tau must lie in (0, 1)");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("level must lie in (0, 1)");
  if (trim && !(*trim >= 0.0 && *trim < 0.5)) throw InvalidArgument("trim must lie in [0, 0.5)");
}

BandwidthSet study_bandwidths(const Sample& sample, const StudyConfig& cfg) {
  auto set = default_bandwidths(sample.size(), rice_variance(sample), cfg.kernel).set;
  if (cfg.trim) set.trim = *cfg.trim;
  return set;
}

StudyResult run_study(const StudyConfig& cfg, const TestFn& test) {
  cfg.validate();
  const TestFn& run_test = test ? test : TestFn(bootstrap_test);
  StudyResult result;
  result.config = cfg;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  result.p_ks.assign(cfg.runs, nan);
  result.p_cvm.assign(cfg.runs, nan);
  std::vector<int> outcome(cfg.runs, -1);  // bit 0 KS, bit 1 CvM; -1 failed

  parallel_for(cfg.runs, Exec{cfg.workers}, [&](std::size_t r) {
    Rng rng = make_rng(cfg.root_seed, r);
    const Sample sample = generate(cfg.model, cfg.n, rng);
    BootstrapConfig boot;
    boot.B = cfg.B;
    boot.level = cfg.level;
    boot.seed = derive_seed(~cfg.root_seed, r);
    boot.grid_nodes = cfg.grid_nodes;
    boot.grid_m = cfg.grid_m;
    try {
      const BandwidthSet bw = study_bandwidths(sample, cfg);
      const TestReport rep = run_test(sample, cfg.tau, bw, boot, cfg.kind);
      result.p_ks[r] = rep.p_ks;
      result.p_cvm[r] = rep.p_cvm;
      outcome[r] = (rep.reject_ks ? 1 : 0) | (rep.reject_cvm ? 2 : 0);
    } catch (const InvalidArgument&) {
      throw;
    } catch (const Error&) {
      outcome[r] = -1;
    }
  });

  for (const int o : outcome) {
    if (o < 0) {
      ++result.failures;
      continue;
    }
    ++result.completed;
    if (o & 1) ++result.rejections_ks;
    if (o & 2) ++result.rejections_cvm;
  }
  if (result.completed > 0) {
    const auto done = static_cast<double>(result.completed);
    result.reject_rate_ks = static_cast<double>(result.rejections_ks) / done;
    result.reject_rate_cvm = static_cast<double>(result.rejections_cvm) / done;
  }
  return result;
}

std::string study_csv_header() {
  return "model,n,runs,B,tau,level,model_kind,kernel_K,seed,completed,failures,reject_rate_ks,"
         "reject_rate_cvm";
}

std::string study_csv_row(const StudyResult& r) {
  const auto& c = r.config;
  char rates[64];
  std::snprintf(rates, sizeof rates, "%.6f,%.6f", r.reject_rate_ks, r.reject_rate_cvm);
  std::ostringstream os;
  os << '"' << c.model.label() << "\"," << c.n << ',' << c.runs << ',' << c.B << ',' << c.tau << ','
     << c.level << ',' << model_kind_name(c.kind) << ',' << kernel_name(c.kernel) << ','
     << c.root_seed << ',' << r.completed << ',' << r.failures << ',' << rates;
  return os.str();
}

std::string format_study_table(const std::vector<StudyResult>& results) {
  std::vector<std::string> columns;
  std::vector<std::size_t> sizes;
  std::map<std::pair<std::string, std::size_t>, const StudyResult*> cell;
  for (const auto& r : results) {
    const std::string label = r.config.model.label();
    if (std::find(columns.begin(), columns.end(), label) == columns.end()) columns.push_back(label);
    if (std::find(sizes.begin(), sizes.end(), r.config.n) == sizes.end()) sizes.push_back(r.config.n);
    cell[{label, r.config.n}] = &r;
  }
  std::size_t width = 8;
  for (const auto& c : columns) width = std::max(width, c.size() + 2);

  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-12s", "");
  os << buf;
  for (const auto& c : columns) {
    std::snprintf(buf, sizeof buf, "%*s", static_cast<int>(width), c.c_str());
    os << buf;
  }
  os << '\n';
  for (const char* stat : {"KS", "CvM"}) {
    for (const std::size_t n : sizes) {
      std::snprintf(buf, sizeof buf, "%-4s n=%-6zu", stat, n);
      os << buf;
      for (const auto& c : columns) {
        const auto it = cell.find({c, n});
        if (it == cell.end()) {
          std::snprintf(buf, sizeof buf, "%*s", static_cast<int>(width), "-");
        } else {
          const double v = stat[0] == 'K' ? it->second->reject_rate_ks : it->second->reject_rate_cvm;
          std::snprintf(buf, sizeof buf, "%*.3f", static_cast<int>(width), v);
        }
        os << buf;
      }
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace qspec

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qspec/bandwidths.hpp"
#include "qspec/bootstrap.hpp"
#include "qspec/errors.hpp"
#include "qspec/quantile_scale.hpp"
#include "qspec/rearrangement.hpp"
#include "qspec/simulation.hpp"

namespace {

using namespace qspec;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitReject = 3;

// Problems with the input data, as opposed to the command line.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string input;
  std::string output;
  double tau = 0.5;
  double level = 0.05;
  std::size_t B = 200;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string model_kind = "location_scale";
  std::optional<double> h, d, b, alpha, trim;
  std::size_t grid_m = 2001;
  std::size_t grid_nodes = 201;
  std::string kernel = "gaussian";
  std::string decision = "cvm";
  bool plot = false;

  // simulate / generate
  std::string model = "m3";
  double pa = 0.0, pb = 0.0, pc = 2.0, pbeta = 0.0;
  std::size_t n = 100;
  std::size_t runs = 200;
  bool table = false;
  std::optional<std::string> sim_kind;
  std::optional<double> sim_trim;
};

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Sample read_sample(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("input is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != "x,y") throw DataError("expected header 'x,y', got '" + line + "'");
  Sample s;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw DataError("line " + std::to_string(lineno) + ": expected two fields");
    }
    const auto parse = [&](const std::string& field) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != field.size() || !std::isfinite(v)) {
        throw DataError("line " + std::to_string(lineno) + ": bad number '" + field + "'");
      }
      return v;
    };
    const double x = parse(line.substr(0, comma));
    const double y = parse(line.substr(comma + 1));
    if (x < 0.0 || x > 1.0) {
      throw DataError("line " + std::to_string(lineno) + ": x = " + num(x) + " outside [0, 1]");
    }
    s.x.push_back(x);
    s.y.push_back(y);
  }
  // Enough points for a local cubic fit.
  try {
    s.validate(5, 4);
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  }
  return s;
}

void write_sample(std::ostream& out, const Sample& s) {
  out << "x,y\n";
  for (std::size_t i = 0; i < s.size(); ++i) out << num(s.x[i]) << ',' << num(s.y[i]) << '\n';
}

// Writes to the named file, or stdout when the name is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

BandwidthSet choose_bandwidths(const Sample& s, const Options& o) {
  const KernelSpec kernel = parse_kernel(o.kernel);
  auto choice = default_bandwidths(s.size(), rice_variance(s), kernel);
  BandwidthSet bw = choice.set;
  if (o.h) {
    bw.h = *o.h;
    bw.d = 2.0 * bw.h;
    bw.trim = default_trim(kernel, bw.h);
  }
  if (o.d) bw.d = *o.d;
  if (o.b) bw.b = *o.b;
  if (o.alpha) bw.alpha = *o.alpha;
  if (o.trim) bw.trim = *o.trim;
  if (!o.h) {
    for (const auto& w : choice.warnings) {
      std::cerr << "warning [" << w.code << "]: " << w.message << '\n';
    }
  }
  bw.validate();
  return bw;
}

void check_common(const Options& o) {
  if (!(o.tau > 0.0 && o.tau < 1.0)) throw InvalidArgument("--tau must lie in (0, 1)");
  if (!(o.level > 0.0 && o.level < 1.0)) throw InvalidArgument("--level must lie in (0, 1)");
  if (o.B < 1) throw InvalidArgument("--B must be at least 1");
  if (o.workers < 1) throw InvalidArgument("--workers must be at least 1");
}

int cmd_test(const Options& o) {
  check_common(o);
  const ModelKind kind = parse_model_kind(o.model_kind);
  if (o.decision != "ks" && o.decision != "cvm" && o.decision != "either") {
    throw InvalidArgument("--decision must be ks, cvm or either");
  }
  const Sample s = read_sample(o.input);
  const BandwidthSet bw = choose_bandwidths(s, o);
  BootstrapConfig cfg;
  cfg.B = o.B;
  cfg.level = o.level;
  cfg.seed = o.seed;
  cfg.workers = o.workers;
  cfg.grid_nodes = o.grid_nodes;
  cfg.grid_m = o.grid_m;
  const TestReport report = bootstrap_test(s, o.tau, bw, cfg, kind);
  emit(o.output, report.to_json() + "\n");
  const bool reject = o.decision == "ks"    ? report.reject_ks
                      : o.decision == "cvm" ? report.reject_cvm
                                            : (report.reject_ks || report.reject_cvm);
  return reject ? kExitReject : kExitOk;
}

int cmd_estimate(const Options& o) {
  check_common(o);
  if (o.output.empty()) throw InvalidArgument("estimate needs --output (a file prefix)");
  const ModelKind kind = parse_model_kind(o.model_kind);
  const Sample s = read_sample(o.input);
  const BandwidthSet bw = choose_bandwidths(s, o);
  s.validate(static_cast<std::size_t>(bw.p) + 2, static_cast<std::size_t>(bw.p) + 1);

  FitOptions opts;
  opts.kind = kind;
  opts.tau = o.tau;
  opts.bw = bw;
  opts.grid_nodes = o.grid_nodes;
  opts.grid_m = o.grid_m;
  opts.exec = Exec{o.workers};
  const ModelFit fit = fit_model(s, opts);

  // Curves on grid_m nodes of [trim, 1 - trim].
  const auto grid = linspace(bw.trim, 1.0 - bw.trim, o.grid_m);
  const QuantileEstimator qest(s, o.tau, bw);
  const Curve qhat(grid, qest.evaluate(grid, opts.exec));
  const Curve qhat_I = increasing_rearrangement(qhat, RearrangeConfig{grid.front(), grid.back(), o.grid_m});
  std::vector<double> shat(grid.size(), 1.0);
  if (kind != ModelKind::location) {
    const auto abs_res = absolute_residuals(s, fit.q_at_x, bw.trim, 1.0 - bw.trim);
    const ScaleEstimator sest(abs_res.x, abs_res.abs_e, bw);
    const double lo = std::min(2.0 * bw.trim, 0.5), hi = std::max(1.0 - 2.0 * bw.trim, 0.5);
    std::vector<double> xs(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) xs[k] = std::min(std::max(grid[k], lo), hi);
    shat = sest.evaluate(xs, opts.exec);
  }

  std::ostringstream curves;
  curves << "x,qhat,shat,qhat_I\n";
  for (std::size_t k = 0; k < grid.size(); ++k) {
    curves << num(grid[k]) << ',' << num(qhat.values()[k]) << ',' << num(shat[k]) << ','
           << num(qhat_I.values()[k]) << '\n';
  }
  emit(o.output + "_curves.csv", curves.str());

  std::ostringstream res;
  res << "index,x,y,q,s,eps" << (fit.constrained ? ",q_I,eps_I" : "") << '\n';
  for (std::size_t j = 0; j < fit.residuals.n_trim(); ++j) {
    const std::size_t i = fit.residuals.indices[j];
    res << i << ',' << num(s.x[i]) << ',' << num(s.y[i]) << ',' << num(fit.q_at_x[i]) << ','
        << num(fit.s_at_x[i]) << ',' << num(fit.residuals.eps[j]);
    if (fit.constrained) res << ',' << num(fit.qI_at_x[i]) << ',' << num(fit.constrained->eps[j]);
    res << '\n';
  }
  emit(o.output + "_residuals.csv", res.str());

  std::ostringstream proc;
  proc << "t,y,S\n";
  const auto& f = fit.field;
  for (std::size_t k = 0; k < f.t_grid.size(); ++k)
    for (std::size_t l = 0; l < f.y_grid.size(); ++l)
      proc << num(f.t_grid[k]) << ',' << num(f.y_grid[l]) << ',' << num(f.at(k, l)) << '\n';
  emit(o.output + "_process.csv", proc.str());

  nlohmann::ordered_json summary;
  summary["n"] = s.size();
  summary["n_trim"] = fit.residuals.n_trim();
  summary["statistic_ks"] = fit.ks;
  summary["statistic_cvm"] = fit.cvm;
  summary["model_kind"] = model_kind_name(kind);
  summary["tau"] = o.tau;
  summary["h"] = bw.h;
  summary["d"] = bw.d;
  summary["b"] = bw.b;
  summary["trim"] = bw.trim;
  summary["kernel_K"] = kernel_name(bw.kernel);
  summary["grid_m"] = o.grid_m;
  emit(o.output + "_summary.json", summary.dump(2) + "\n");

  if (o.plot) {
    std::ostringstream gp;
    const std::string p = o.output;
    gp << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set multiplot layout 1,2\n"
       << "plot '" << p << "_residuals.csv' using 2:3 with points pt 7 ps 0.4 title 'data', \\\n"
       << "     '" << p << "_curves.csv' using 1:2 with lines title 'qhat', \\\n"
       << "     '' using 1:4 with lines title 'qhat_I'\n"
       << "plot '" << p << "_curves.csv' using 1:3 with lines title 'shat'\n"
       << "unset multiplot\n";
    emit(o.output + "_plot.gp", gp.str());
  }
  return kExitOk;
}

ModelSpec model_from(const Options& o) {
  ModelSpec m;
  m.id = parse_model_id(o.model);
  m.a = o.pa;
  m.b = o.pb;
  m.c = o.pc;
  m.beta = o.pbeta;
  m.validate();
  return m;
}

ModelKind default_kind_for(ModelId id) {
  switch (id) {
    case ModelId::m1:
    case ModelId::m2a:
    case ModelId::m2b:
    case ModelId::m3: return ModelKind::location;
    case ModelId::m4:
    case ModelId::m5: return ModelKind::monotone;
    default: return ModelKind::location_scale;
  }
}

int cmd_simulate(const Options& o) {
  check_common(o);
  if (o.runs < 1) throw InvalidArgument("--runs must be at least 1");
  StudyConfig cfg;
  cfg.model = model_from(o);
  cfg.n = o.n;
  cfg.runs = o.runs;
  cfg.B = o.B;
  cfg.tau = o.tau;
  cfg.level = o.level;
  cfg.kind = o.sim_kind ? parse_model_kind(*o.sim_kind) : default_kind_for(cfg.model.id);
  cfg.root_seed = o.seed;
  cfg.workers = o.workers;
  cfg.kernel = parse_kernel(o.kernel);
  cfg.trim = o.sim_trim;
  cfg.grid_m = o.grid_m;
  cfg.grid_nodes = o.grid_nodes;
  const StudyResult r = run_study(cfg);
  if (o.table) {
    emit(o.output, format_study_table({r}));
  } else {
    emit(o.output, study_csv_header() + "\n" + study_csv_row(r) + "\n");
  }
  return kExitOk;
}

int cmd_generate(const Options& o) {
  const ModelSpec m = model_from(o);
  if (o.n < 1) throw InvalidArgument("--n must be at least 1");
  Rng rng = make_rng(o.seed, 0);
  std::ostringstream out;
  write_sample(out, generate(m, o.n, rng));
  emit(o.output, out.str());
  return kExitOk;
}

void report_error(const std::string& code, const std::string& message) {
  nlohmann::ordered_json err;
  err["error"] = code;
  err["message"] = message;
  std::cerr << err.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantile location-scale estimation and specification tests"};
  app.require_subcommand(1);
  // --h is the bandwidth, so help is long-form only. Subcommands inherit this.
  app.set_help_flag("--help", "Print this help message and exit");
  Options o;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--tau", o.tau, "Quantile level")->capture_default_str();
    sub->add_option("--level", o.level, "Nominal test level")->capture_default_str();
    sub->add_option("--B", o.B, "Bootstrap replications")->capture_default_str();
    sub->add_option("--seed", o.seed, "Root random seed")->capture_default_str();
    sub->add_option("--workers", o.workers, "Worker threads")->capture_default_str();
    sub->add_option("--grid-m", o.grid_m, "Rearrangement / curve grid size")->capture_default_str();
    sub->add_option("--kernel-K", o.kernel, "Covariate kernel: gaussian, epanechnikov, quartic4")
        ->capture_default_str();
    sub->add_option("--output", o.output, "Output file (prefix for estimate)");
  };
  const auto add_fit = [&](CLI::App* sub) {
    sub->add_option("--input", o.input, "CSV with header x,y")->required();
    sub->add_option("--model-kind", o.model_kind, "location, location_scale or monotone")
        ->capture_default_str();
    sub->add_option("--h", o.h, "Covariate bandwidth (d follows as 2h unless given)");
    sub->add_option("--d", o.d, "Response smoothing bandwidth");
    sub->add_option("--b", o.b, "Inversion bandwidth");
    sub->add_option("--alpha", o.alpha, "Bootstrap error smoothing");
    sub->add_option("--trim", o.trim, "Boundary trimming half-width");
  };
  const auto add_model = [&](CLI::App* sub) {
    sub->add_option("--model", o.model, "m1 m2a m2b m3 m1h m2ah m2bh m3h m4 m5")->required();
    sub->add_option("--a", o.pa, "Parameter a (m1)");
    sub->add_option("--b", o.pb, "Parameter b (m3, m3h)");
    sub->add_option("--c", o.pc, "Parameter c (m2a, m2b and variants)");
    sub->add_option("--beta", o.pbeta, "Parameter beta (m4)");
    sub->add_option("--n", o.n, "Sample size")->capture_default_str();
  };

  auto* test = app.add_subcommand("test", "Bootstrap specification test on a data file");
  add_common(test);
  add_fit(test);
  test->add_option("--decision", o.decision, "Statistic deciding the exit code: ks, cvm, either")
      ->capture_default_str();

  auto* estimate = app.add_subcommand("estimate", "Write curves, residuals and the process field");
  add_common(estimate);
  add_fit(estimate);
  estimate->add_flag("--plot", o.plot, "Also write a gnuplot script");

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo rejection rates for a model");
  add_common(simulate);
  add_model(simulate);
  simulate->add_option("--runs", o.runs, "Simulation runs")->capture_default_str();
  simulate->add_option("--model-kind", o.sim_kind, "Null model (default follows the model)");
  simulate->add_option("--trim", o.sim_trim, "Boundary trimming half-width");
  simulate->add_flag("--table", o.table, "Print a formatted table instead of CSV");

  auto* gen = app.add_subcommand("generate", "Draw a sample from a model as CSV");
  add_model(gen);
  gen->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  gen->add_option("--output", o.output, "Output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*test) return cmd_test(o);
    if (*estimate) return cmd_estimate(o);
    if (*simulate) return cmd_simulate(o);
    if (*gen) return cmd_generate(o);
  } catch (const DataError& e) {
    report_error("data", e.what());
    return kExitData;
  } catch (const InvalidArgument& e) {
    report_error("usage", e.what());
    return kExitUsage;
  } catch (const TrimEmpty& e) {
    report_error("trim_empty", e.what());
    return kExitData;
  } catch (const Error& e) {
    report_error("estimation", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    report_error("io", e.what());
    return kExitData;
  }
  return kExitUsage;
}

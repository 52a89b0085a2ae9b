#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "qspec/errors.hpp"
#include "qspec/quantile_scale.hpp"
#include "qspec/simulation.hpp"

using namespace qspec;
using Catch::Approx;

namespace {

double sample_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  return empirical_quantile(v, p);
}

}  // namespace

TEST_CASE("model ids and labels", "[simulation]") {
  for (const auto id : {ModelId::m1, ModelId::m2a, ModelId::m2b, ModelId::m3, ModelId::m1h,
                        ModelId::m2ah, ModelId::m2bh, ModelId::m3h, ModelId::m4, ModelId::m5}) {
    CHECK(parse_model_id(model_id_name(id)) == id);
  }
  CHECK_THROWS_AS(parse_model_id("m6"), InvalidArgument);
  CHECK(ModelSpec{ModelId::m3, 0.0, 5.0}.label() == "m3(b=5)");
  CHECK(ModelSpec{ModelId::m1, 2.5}.label() == "m1(a=2.5)");
  CHECK(ModelSpec{ModelId::m5}.label() == "m5");
  CHECK_THROWS_AS((ModelSpec{ModelId::m1, -2.0}.validate()), InvalidArgument);
  CHECK_THROWS_AS((ModelSpec{ModelId::m2a, 0.0, 0.0, 0.5}.validate()), InvalidArgument);
  CHECK_THROWS_AS((ModelSpec{ModelId::m2b, 0.0, 0.0, 1.5}.validate()), InvalidArgument);
  CHECK_NOTHROW((ModelSpec{ModelId::m2b, 0.0, 0.0, 1.0}.validate()));
}

TEST_CASE("copula without dependence gives independent coordinates", "[simulation]") {
  Rng rng(1);
  int table[4][4] = {};
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto d = draw_copula(0.0, rng);
    ++table[std::min(3, static_cast<int>(4 * d.x))][std::min(3, static_cast<int>(4 * d.u))];
  }
  double chi2 = 0.0;
  for (auto& row : table)
    for (const int c : row) chi2 += std::pow(c - n / 16.0, 2) / (n / 16.0);
  CHECK(chi2 < 27.88);  // 0.999 quantile with 9 degrees of freedom

  // Model 3 with b = 0 is additive uniform noise around the base curve.
  Rng rng2(2);
  const Sample s = generate(ModelSpec{ModelId::m3, 0.0, 0.0}, 5000, rng2);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double u = s.y[i] - base_curve(s.x[i]);
    CHECK((u >= -0.5 && u <= 0.5));
  }
}

TEST_CASE("copula conditional mean is removed by the model 3 shift", "[simulation]") {
  Rng rng(3);
  const double b = 1.0;
  const Sample s = generate(ModelSpec{ModelId::m3, 0.0, b}, 40000, rng);
  double sum[5] = {}, count[5] = {};
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int k = std::min(4, static_cast<int>(5 * s.x[i]));
    sum[k] += s.y[i] - base_curve(s.x[i]);
    count[k] += 1;
  }
  for (int k = 0; k < 5; ++k) CHECK(std::abs(sum[k] / count[k]) < 0.015);
}

TEST_CASE("model 1 conditional variance", "[simulation]") {
  Rng rng(4);
  const double a = 3.0;
  const Sample s = generate(ModelSpec{ModelId::m1, a}, 60000, rng);
  for (const double mid : {0.1, 0.5, 0.9}) {
    double sum2 = 0.0, cnt = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (std::abs(s.x[i] - mid) < 0.02) {
        sum2 += std::pow(s.y[i] - base_curve(s.x[i]), 2);
        cnt += 1;
      }
    }
    CHECK(sum2 / cnt == Approx((1.0 + a * mid) / 100.0).epsilon(0.1));
  }
}

TEST_CASE("student t draws", "[simulation]") {
  Rng rng(5);
  std::vector<double> v(40000);
  for (auto& x : v) x = draw_student_t(5.0, rng);
  CHECK(sample_quantile(v, 0.975) == Approx(2.570582).epsilon(0.03));
  for (auto& x : v) x = draw_student_t(std::numeric_limits<double>::infinity(), rng);
  CHECK(sample_quantile(v, 0.975) == Approx(1.959964).epsilon(0.03));
  CHECK_THROWS_AS(draw_student_t(0.0, rng), InvalidArgument);
}

TEST_CASE("true quantiles", "[simulation]") {
  CHECK(true_quantile(ModelSpec{ModelId::m4}, 0.5, 0.3) == Approx(1.3).epsilon(1e-15));
  const ModelSpec m4b{ModelId::m4, 0.0, 0.0, 2.0, 0.45};
  CHECK(true_quantile(m4b, 0.5, 0.5) == Approx(1.5 - 0.45).epsilon(1e-15));
  CHECK(true_quantile(ModelSpec{ModelId::m5}, 0.5, 0.5) == Approx(0.25).epsilon(1e-15));
  CHECK(true_quantile(ModelSpec{ModelId::m5}, 0.9, 0.0) ==
        Approx(0.3 * 1.2815515655446004).epsilon(1e-12));
  CHECK_THROWS_AS(true_quantile(ModelSpec{ModelId::m1}, 0.5, 0.5), InvalidArgument);
}

TEST_CASE("binned sample quantiles match the true quantile", "[simulation]") {
  for (const auto& model : {ModelSpec{ModelId::m4, 0, 0, 2, 0.45}, ModelSpec{ModelId::m5}}) {
    Rng rng(6);
    const Sample s = generate(model, 80000, rng);
    for (const double mid : {0.05, 0.3, 0.5, 0.8}) {
      std::vector<double> ys;
      for (std::size_t i = 0; i < s.size(); ++i)
        if (std::abs(s.x[i] - mid) < 0.005) ys.push_back(s.y[i]);
      for (const double tau : {0.25, 0.5, 0.9}) {
        CHECK(sample_quantile(ys, tau) == Approx(true_quantile(model, tau, mid)).margin(0.06));
      }
    }
  }
}

TEST_CASE("study bookkeeping with a stub test", "[simulation]") {
  StudyConfig cfg;
  cfg.model = ModelSpec{ModelId::m1};
  cfg.n = 30;
  cfg.runs = 10;
  const TestFn always = [](const Sample& s, double tau, const BandwidthSet& bw,
                           const BootstrapConfig& boot, ModelKind kind) {
    TestReport r;
    r.kind = kind;
    r.tau = tau;
    r.bw = bw;
    r.config = boot;
    r.n = s.size();
    r.reject_ks = true;
    r.reject_cvm = false;
    r.p_ks = 0.01;
    r.p_cvm = 0.5;
    return r;
  };
  const auto res = run_study(cfg, always);
  CHECK(res.completed == 10);
  CHECK(res.reject_rate_ks == 1.0);
  CHECK(res.reject_rate_cvm == 0.0);
  CHECK(res.p_ks == std::vector<double>(10, 0.01));

  int calls = 0;
  const TestFn flaky = [&](const Sample& s, double tau, const BandwidthSet& bw,
                           const BootstrapConfig& boot, ModelKind kind) -> TestReport {
    if (boot.seed % 2 == 0) throw DegenerateSample("stub");
    ++calls;
    return always(s, tau, bw, boot, kind);
  };
  const auto mixed = run_study(cfg, flaky);
  CHECK(mixed.completed + mixed.failures == 10);
  CHECK(mixed.completed == static_cast<std::size_t>(calls));
  if (mixed.completed > 0) CHECK(mixed.reject_rate_ks == 1.0);

  const TestFn broken = [](const Sample&, double, const BandwidthSet&, const BootstrapConfig&,
                           ModelKind) -> TestReport { throw InvalidArgument("stub"); };
  CHECK_THROWS_AS(run_study(cfg, broken), InvalidArgument);

  cfg.runs = 0;
  CHECK_THROWS_AS(run_study(cfg, always), InvalidArgument);
}

TEST_CASE("study results do not depend on the worker count", "[simulation]") {
  StudyConfig cfg;
  cfg.model = ModelSpec{ModelId::m3, 0.0, 2.0};
  cfg.n = 40;
  cfg.runs = 4;
  cfg.B = 5;
  cfg.root_seed = 11;
  cfg.workers = 1;
  const auto a = run_study(cfg);
  cfg.workers = 4;
  const auto b = run_study(cfg);
  CHECK(a.completed == b.completed);
  CHECK(a.rejections_ks == b.rejections_ks);
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    CHECK((a.p_ks[r] == b.p_ks[r] || (std::isnan(a.p_ks[r]) && std::isnan(b.p_ks[r]))));
    CHECK((a.p_cvm[r] == b.p_cvm[r] || (std::isnan(a.p_cvm[r]) && std::isnan(b.p_cvm[r]))));
  }
}

TEST_CASE("study output formats", "[simulation]") {
  StudyResult r;
  r.config.model = ModelSpec{ModelId::m3, 0.0, 5.0};
  r.config.n = 100;
  r.config.runs = 200;
  r.completed = 200;
  r.reject_rate_ks = 0.5;
  r.reject_rate_cvm = 0.75;
  CHECK(study_csv_header().rfind("model,n,runs,B", 0) == 0);
  const std::string row = study_csv_row(r);
  CHECK(row.rfind("\"m3(b=5)\",100,200,200,", 0) == 0);
  CHECK(row.find("0.500000,0.750000") != std::string::npos);
  const std::string table = format_study_table({r});
  CHECK(table.find("m3(b=5)") != std::string::npos);
  CHECK(table.find("KS   n=100") != std::string::npos);
  CHECK(table.find("CvM  n=100") != std::string::npos);
  CHECK(table.find("0.750") != std::string::npos);
}

#include <cmath>

#include "doctest.h"
#include "grbm/config.hpp"
#include "grbm/experiments.hpp"
#include "grbm/whitening.hpp"
#include "test_util.hpp"

using namespace grbm;

namespace {

TrialRecord record(int trial, const std::string& method, double ll) {
  TrialRecord r;
  r.trial = trial;
  r.seed = 1000 + static_cast<std::uint64_t>(trial);
  r.method = method;
  r.ll_train = ll + 0.01;
  r.ll_test = ll;
  return r;
}

}  // namespace

TEST_CASE("summary is recomputable from records") {
  ExperimentReport rep;
  rep.command = "bss";
  const std::vector<double> lls{-2.80, -2.83, -2.79, -2.85};
  for (int t = 0; t < 4; ++t) {
    TrialRecord r = record(t, "GRBM-2-2", lls[t]);
    r.recovered = t % 2 == 0;
    r.order_mass = {0.97 - 0.01 * t, 0.03 + 0.01 * t, 0.0};
    rep.records.push_back(r);
    rep.records.push_back(record(t, "Gaussian", -2.84));
  }
  TrialRecord failed = record(4, "GRBM-2-2", 0.0);
  failed.error = "numeric failure";
  rep.records.push_back(failed);

  const auto ll = rep.find("GRBM-2-2", "ll_test");
  REQUIRE(ll);
  CHECK(ll->count == 4);
  double mean = 0.0;
  for (double v : lls) mean += v;
  mean /= 4.0;
  double ss = 0.0;
  for (double v : lls) ss += (v - mean) * (v - mean);
  CHECK(std::abs(ll->mean - mean) < 1e-12);
  CHECK(std::abs(ll->std - std::sqrt(ss / 3.0)) < 1e-12);
  CHECK(rep.find("GRBM-2-2", "recovered")->mean == doctest::Approx(0.5));
  CHECK(rep.find("GRBM-2-2", "order_mass_1")->mean == doctest::Approx(0.045));
  CHECK(rep.find("Gaussian", "ll_test")->std == 0.0);
  CHECK_FALSE(rep.find("Gaussian", "recovered"));
  // Summary rows keep first-appearance method order.
  CHECK(rep.summary().front().method == "GRBM-2-2");

  const std::string csv = rep.summary_csv();
  CHECK(csv.rfind("method,metric,count,mean,std\n", 0) == 0);
}

TEST_CASE("JSON lines round trip") {
  ExperimentReport rep;
  rep.command = "bss";
  TrialRecord a = record(0, "GRBM-2-2", -2.8123456789012345);
  a.amari_error = 0.125;
  a.recovered = true;
  a.order_mass = {0.98, 0.02, 1e-7};
  a.curve = {-3.0, -2.9};
  TrialRecord b = record(1, "ICA", std::numeric_limits<double>::quiet_NaN());
  b.diverged = true;
  b.error = "did not converge";
  b.seconds_per_epoch = 0.5;
  rep.records = {a, b};
  const std::string text = rep.to_jsonl();
  CHECK(text.find("NaN") == std::string::npos);
  CHECK(text.find("null") != std::string::npos);
  const ExperimentReport back = ExperimentReport::from_jsonl(text);
  CHECK(back.command == "bss");
  REQUIRE(back.records.size() == 2u);
  CHECK(back.records[0] == a);
  CHECK(back.records[1] == b);
  CHECK(back.to_jsonl() == text);
  CHECK_THROWS_AS(ExperimentReport::from_jsonl("{\"trial\": 1}\n"), DataError);
}

TEST_CASE("config file parsing") {
  const ConfigFile f = ConfigFile::parse(
      "# training\n"
      "method = PT\n"
      "pt_temperatures = 0.25, 0.5, 1.0   # inverse temperatures\n"
      "learning_rate_w = 0.05\n"
      "momentum.initial = 0.5\n"
      "learn_sigma = true\n"
      "epochs = 7\n"
      "monitor = none\n"
      "ais.num_chains = 33\n"
      "ais.schedule = geometric_tail\n");
  TrainConfig cfg;
  apply_config(f, cfg);
  CHECK(cfg.method == Method::pt);
  CHECK(cfg.pt_temperatures == std::vector<double>{0.25, 0.5, 1.0});
  CHECK(cfg.learning_rate_w == 0.05);
  CHECK(cfg.momentum.initial == 0.5);
  CHECK(cfg.learn_sigma);
  CHECK(cfg.epochs == 7);
  CHECK(cfg.monitor == Monitor::none);
  CHECK(f.unused_keys() == std::vector<std::string>{"ais.num_chains", "ais.schedule"});
  AisConfig ais;
  apply_config(f, ais);
  CHECK(ais.num_chains == 33);
  CHECK(ais.schedule == BetaSchedule::geometric_tail);
  CHECK(f.unused_keys().empty());

  CHECK_THROWS_AS(ConfigFile::parse("epochs 3\n"), ContractError);
  CHECK_THROWS_AS(ConfigFile::parse("a = 1\na = 2\n"), ContractError);
  TrainConfig c2;
  CHECK_THROWS_AS(apply_config(ConfigFile::parse("epochs = three\n"), c2), ContractError);
  CHECK_THROWS_AS(apply_config(ConfigFile::parse("learn_sigma = maybe\n"), c2), ContractError);
}

TEST_CASE("config text round trip") {
  TrainConfig cfg;
  cfg.method = Method::pcd;
  cfg.k_steps = 3;
  cfg.learning_rate_c = 0.0123456789;
  cfg.grad_norm_cap = 0.5;
  cfg.seed = 99;
  TrainConfig back;
  const ConfigFile f = ConfigFile::parse(config_to_text(cfg));
  apply_config(f, back);
  CHECK(f.unused_keys().empty());
  CHECK(config_to_text(back) == config_to_text(cfg));
  CHECK(back.lr_c() == cfg.lr_c());
  CHECK(back.grad_norm_cap == cfg.grad_norm_cap);
}

TEST_CASE("number formatting and parsing") {
  for (double x : {0.1, 1.0 / 3.0, -2.807, 1e-300, 123456789.0}) CHECK(parse_double(format_double(x), "x") == x);
  CHECK(parse_int("42", "n") == 42);
  CHECK_THROWS_AS(parse_int("4.2", "n"), ContractError);
  CHECK(parse_bool("yes", "b"));
  CHECK_FALSE(parse_bool("0", "b"));
  CHECK(parse_double_list("1, 2,3", "l") == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("sampler labels") {
  const SamplerSpec pt = parse_sampler("PT-4");
  CHECK(pt.method == Method::pt);
  CHECK(pt.betas == std::vector<double>{0.25, 0.5, 0.75, 1.0});
  const SamplerSpec cd = parse_sampler("CD-10");
  CHECK(cd.method == Method::cd);
  CHECK(cd.k_steps == 10);
  CHECK(parse_sampler("PCD-1").method == Method::pcd);
  CHECK_THROWS_AS(parse_sampler("Gibbs-1"), ContractError);
  CHECK_THROWS_AS(parse_sampler("CD-0"), ContractError);
  CHECK_THROWS_AS(parse_sampler("CD"), ContractError);
}

TEST_CASE("epochs to converge") {
  CHECK(epochs_to_converge({}, 0.05) == 0);
  CHECK(epochs_to_converge({-3.0, -1.99, -1.96, -1.98, -1.95}, 0.05) == 2);
  CHECK(epochs_to_converge({-3.0, -1.9, -2.5, -1.95}, 0.05) == 4);
  CHECK(epochs_to_converge({-1.0, -1.0}, 0.05) == 1);
}

TEST_CASE("small BSS experiment is deterministic and independent of workers") {
  BssExperimentConfig cfg;
  cfg.trials = 3;
  cfg.n_train = 2000;
  cfg.n_test = 1000;
  cfg.hidden_sizes = {2, 3};
  cfg.train.epochs = 3;
  cfg.mog.restarts = 1;
  cfg.seed = 4;
  const ExperimentReport a = run_bss(cfg);
  cfg.workers = 3;
  const ExperimentReport b = run_bss(cfg);
  CHECK(a.to_jsonl() == b.to_jsonl());
  REQUIRE(a.records.size() == 3u * 6u);
  CHECK(a.records[0].method == "GRBM-2-2");
  CHECK(a.records[1].method == "GRBM-2-3");
  CHECK(a.records[2].method == "Gaussian");
  CHECK(a.records[5].method == "True");
  for (const auto& r : a.records) {
    CHECK(r.error.empty());
    CHECK(std::isfinite(r.ll_test));
    CHECK_FALSE(r.seconds_per_epoch.has_value());
  }
  CHECK(a.records[0].amari_error.has_value());
  CHECK(a.records[0].order_mass.size() == 3u);
  CHECK(a.records[0].seed == trial_seed(4, 0));
  CHECK(trial_seed(4, 0) != trial_seed(4, 1));
  CHECK(grbm_method_label(2, 4) == "GRBM-2-4");
}

TEST_CASE("bench data from images is whitened") {
  BenchConfig cfg;
  cfg.n_train = 3000;
  cfg.n_test = 500;
  cfg.images.push_back(Image::NullaryExpr(40, 40, [](Index r, Index c) {
    return std::sin(0.3 * static_cast<double>(r)) + std::cos(0.2 * static_cast<double>(c * r % 17)) +
           static_cast<double>((r * 31 + c * 17) % 7);
  }));
  const BenchData d = bench_data(cfg);
  CHECK(d.train.cols() == 16);
  CHECK(d.test.rows() == 500);
  CHECK((sample_covariance(d.train) - Matrix::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-6);
  cfg.dims = 15;
  CHECK_THROWS_AS(bench_data(cfg), ContractError);
}

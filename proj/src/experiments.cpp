#include "grbm/experiments.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "grbm/bss.hpp"
#include "grbm/config.hpp"
#include "grbm/exact.hpp"
#include "grbm/whitening.hpp"

namespace grbm {

namespace {

bool same_value(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

bool same_values(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_value(a[i], b[i])) return false;
  }
  return true;
}

nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

nlohmann::json numbers(const std::vector<double>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (double x : v) out.push_back(number_or_null(x));
  return out;
}

double number_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::vector<double> numbers_from(const nlohmann::json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(number_from(x));
  return out;
}

struct Accumulator {
  std::string method;
  std::string metric;
  std::vector<double> values;
};

void add_metric(std::vector<Accumulator>& acc, const std::string& method, const std::string& metric,
                double value) {
  if (!std::isfinite(value)) return;
  for (auto& a : acc) {
    if (a.method == method && a.metric == metric) {
      a.values.push_back(value);
      return;
    }
  }
  acc.push_back({method, metric, {value}});
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

bool TrialRecord::operator==(const TrialRecord& o) const {
  auto same_opt = [](const std::optional<double>& a, const std::optional<double>& b) {
    return a.has_value() == b.has_value() && (!a || same_value(*a, *b));
  };
  return trial == o.trial && seed == o.seed && method == o.method && same_value(ll_train, o.ll_train) &&
         same_value(ll_test, o.ll_test) && same_opt(amari_error, o.amari_error) &&
         same_values(order_mass, o.order_mass) && recovered == o.recovered &&
         same_opt(seconds_per_epoch, o.seconds_per_epoch) && same_values(curve, o.curve) &&
         diverged == o.diverged && error == o.error;
}

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records) {
  std::vector<Accumulator> acc;
  for (const auto& r : records) {
    if (!r.error.empty()) continue;
    add_metric(acc, r.method, "ll_train", r.ll_train);
    add_metric(acc, r.method, "ll_test", r.ll_test);
    if (r.amari_error) add_metric(acc, r.method, "amari_error", *r.amari_error);
    if (r.recovered) add_metric(acc, r.method, "recovered", *r.recovered ? 1.0 : 0.0);
    if (r.seconds_per_epoch) add_metric(acc, r.method, "seconds_per_epoch", *r.seconds_per_epoch);
    for (std::size_t k = 0; k < r.order_mass.size(); ++k) {
      add_metric(acc, r.method, "order_mass_" + std::to_string(k), r.order_mass[k]);
    }
  }
  std::vector<SummaryRow> rows;
  for (const auto& a : acc) {
    SummaryRow row;
    row.method = a.method;
    row.metric = a.metric;
    row.count = static_cast<int>(a.values.size());
    double sum = 0.0;
    for (double v : a.values) sum += v;
    row.mean = sum / static_cast<double>(row.count);
    if (row.count > 1) {
      double ss = 0.0;
      for (double v : a.values) ss += (v - row.mean) * (v - row.mean);
      row.std = std::sqrt(ss / static_cast<double>(row.count - 1));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SummaryRow> ExperimentReport::summary() const { return summarize(records); }

std::optional<SummaryRow> ExperimentReport::find(const std::string& method,
                                                 const std::string& metric) const {
  for (auto& row : summary()) {
    if (row.method == method && row.metric == metric) return row;
  }
  return std::nullopt;
}

std::string ExperimentReport::to_jsonl() const {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["trial"] = r.trial;
    j["seed"] = r.seed;
    j["method"] = r.method;
    j["ll_train"] = number_or_null(r.ll_train);
    j["ll_test"] = number_or_null(r.ll_test);
    j["amari_error"] = r.amari_error ? number_or_null(*r.amari_error) : nlohmann::json(nullptr);
    j["order_mass"] = numbers(r.order_mass);
    j["recovered"] = r.recovered ? nlohmann::json(*r.recovered) : nlohmann::json(nullptr);
    if (r.seconds_per_epoch) j["seconds_per_epoch"] = number_or_null(*r.seconds_per_epoch);
    j["curve"] = numbers(r.curve);
    j["diverged"] = r.diverged;
    j["error"] = r.error;
    out += j.dump();
    out += '\n';
  }
  return out;
}

ExperimentReport ExperimentReport::from_jsonl(const std::string& text) {
  ExperimentReport report;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TrialRecord r;
      report.command = j.at("command").get<std::string>();
      r.trial = j.at("trial").get<int>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.method = j.at("method").get<std::string>();
      r.ll_train = number_from(j.at("ll_train"));
      r.ll_test = number_from(j.at("ll_test"));
      if (!j.at("amari_error").is_null()) r.amari_error = j.at("amari_error").get<double>();
      r.order_mass = numbers_from(j.at("order_mass"));
      if (!j.at("recovered").is_null()) r.recovered = j.at("recovered").get<bool>();
      if (j.contains("seconds_per_epoch")) r.seconds_per_epoch = number_from(j.at("seconds_per_epoch"));
      r.curve = numbers_from(j.at("curve"));
      r.diverged = j.at("diverged").get<bool>();
      r.error = j.at("error").get<std::string>();
      report.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("report line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return report;
}

std::string ExperimentReport::summary_csv() const {
  std::string out = "method,metric,count,mean,std\n";
  for (const auto& row : summary()) {
    out += csv_field(row.method) + "," + row.metric + "," + std::to_string(row.count) + "," +
           format_double(row.mean) + "," + format_double(row.std) + "\n";
  }
  return out;
}

std::string ExperimentReport::records_csv() const {
  std::string out =
      "trial,seed,method,ll_train,ll_test,amari_error,recovered,order_mass,diverged,error\n";
  for (const auto& r : records) {
    std::string mass;
    for (std::size_t k = 0; k < r.order_mass.size(); ++k) {
      if (k) mass += ';';
      mass += format_double(r.order_mass[k]);
    }
    out += std::to_string(r.trial) + "," + std::to_string(r.seed) + "," + csv_field(r.method) + "," +
           format_double(r.ll_train) + "," + format_double(r.ll_test) + "," +
           (r.amari_error ? format_double(*r.amari_error) : "") + "," +
           (r.recovered ? (*r.recovered ? "1" : "0") : "") + "," + mass + "," +
           (r.diverged ? "1" : "0") + "," + csv_field(r.error) + "\n";
  }
  return out;
}

// ---- blind source separation -------------------------------------------------

TrainConfig bss_train_config() {
  TrainConfig cfg;
  cfg.method = Method::cd;
  cfg.k_steps = 1;
  cfg.learning_rate_w = 0.1;
  cfg.learning_rate_b = 0.1;
  cfg.epochs = 100;
  cfg.batch_size = 100;
  cfg.grad_norm_cap_data_fraction = 0.01;
  cfg.monitor = Monitor::none;
  return cfg;
}

std::uint64_t trial_seed(std::uint64_t master, int trial) {
  return mix_seed(master, static_cast<std::uint64_t>(trial));
}

std::string grbm_method_label(Index num_visible, Index num_hidden) {
  return "GRBM-" + std::to_string(num_visible) + "-" + std::to_string(num_hidden);
}

std::vector<TrialRecord> run_bss_trial(const BssExperimentConfig& cfg, int trial) {
  const std::uint64_t seed = trial_seed(cfg.seed, trial);
  const Rng root(seed);
  std::vector<TrialRecord> out;
  auto record = [&](const std::string& method) {
    TrialRecord r;
    r.trial = trial;
    r.seed = seed;
    r.method = method;
    return r;
  };

  BssData bss;
  try {
    Rng data_rng = root.split(0);
    bss = generate_laplacian_bss(cfg.n_train + cfg.n_test, data_rng, std::nullopt, cfg.n_train);
  } catch (const std::exception& e) {
    TrialRecord r = record("data");
    r.error = e.what();
    out.push_back(std::move(r));
    return out;
  }
  const DataBatch train_set = bss.data.topRows(cfg.n_train);
  const DataBatch test_set = bss.data.bottomRows(cfg.n_test);
  const Index m = train_set.cols();

  for (std::size_t s = 0; s < cfg.hidden_sizes.size(); ++s) {
    TrialRecord r = record(grbm_method_label(m, cfg.hidden_sizes[s]));
    try {
      TrainConfig tc = cfg.train;
      tc.seed = mix_seed(seed, 16 + s);
      const TrainResult res = train(train_set, cfg.hidden_sizes[s], tc);
      r.diverged = res.history.diverged;
      if (!r.diverged) {
        const double log_z = log_partition_exact(res.params, tc.enumeration_cap);
        r.ll_train = avg_log_likelihood(train_set, res.params, log_z);
        r.ll_test = avg_log_likelihood(test_set, res.params, log_z);
        const Vector mass = order_mass(res.params, tc.enumeration_cap);
        r.order_mass.assign(mass.data(), mass.data() + mass.size());
        const RecoveryResult rec =
            classify_recovery(res.params.weights, bss.truth.unmixing_true, cfg.recovery_threshold_deg);
        r.recovered = rec.recovered;
        if (res.params.num_hidden() == m) {
          r.amari_error = amari_error(res.params.weights.transpose(), bss.truth.unmixing_true);
        }
      }
      if (cfg.timings && !res.history.epochs.empty()) {
        double total = 0.0;
        for (const auto& e : res.history.epochs) total += e.seconds;
        r.seconds_per_epoch = total / static_cast<double>(res.history.epochs.size());
      }
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }

  if (!cfg.baselines) return out;

  {
    TrialRecord r = record("Gaussian");
    try {
      const IsotropicGaussian g = fit_isotropic_gaussian(train_set);
      r.ll_train = gaussian_avg_ll(train_set, g);
      r.ll_test = gaussian_avg_ll(test_set, g);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  {
    TrialRecord r = record("ICA");
    try {
      Rng ica_rng = root.split(1);
      const IcaModel ica = fast_ica(train_set, cfg.ica, ica_rng);
      r.ll_train = ica_avg_ll(train_set, ica);
      r.ll_test = ica_avg_ll(test_set, ica);
      r.amari_error = amari_error(ica.unmixing, bss.truth.unmixing_true);
      r.recovered = classify_recovery(ica.unmixing.transpose(), bss.truth.unmixing_true,
                                      cfg.recovery_threshold_deg)
                        .recovered;
      if (!ica.converged) r.error = "FastICA did not converge";
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  if (cfg.mog_components > 0) {
    TrialRecord r = record("MoG-" + std::to_string(cfg.mog_components));
    try {
      Rng mog_rng = root.split(2);
      const MogResult mog = em_isotropic_mog(train_set, cfg.mog_components, cfg.mog, mog_rng);
      r.ll_train = mog_avg_ll(train_set, mog.model);
      r.ll_test = mog_avg_ll(test_set, mog.model);
      const Vector mass = mog_order_mass(mog.model);
      r.order_mass.assign(mass.data(), mass.data() + mass.size());
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  {
    TrialRecord r = record("True");
    try {
      r.ll_train = true_bss_avg_ll(train_set, bss.truth);
      r.ll_test = true_bss_avg_ll(test_set, bss.truth);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

ExperimentReport run_bss(const BssExperimentConfig& cfg) {
  if (cfg.trials < 1) throw ContractError("need at least one trial");
  if (cfg.n_train < 2 || cfg.n_test < 1) throw ContractError("invalid train/test sizes");
  if (cfg.hidden_sizes.empty()) throw ContractError("no GRBM sizes requested");
  cfg.train.validate(cfg.n_train);

  std::vector<std::vector<TrialRecord>> per_trial(static_cast<std::size_t>(cfg.trials));
  const int workers = std::max(1, std::min(cfg.workers, cfg.trials));
  if (workers == 1) {
    for (int t = 0; t < cfg.trials; ++t) per_trial[t] = run_bss_trial(cfg, t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int t = next++; t < cfg.trials; t = next++) per_trial[t] = run_bss_trial(cfg, t);
      });
    }
    for (auto& th : pool) th.join();
  }

  ExperimentReport report;
  report.command = "bss";
  for (auto& recs : per_trial) {
    for (auto& r : recs) report.records.push_back(std::move(r));
  }
  return report;
}

// ---- sampler benchmark ---------------------------------------------------------

SamplerSpec parse_sampler(const std::string& label) {
  const auto dash = label.find('-');
  if (dash == std::string::npos) throw ContractError("sampler must look like CD-1, PCD-10 or PT-10");
  const std::string kind = label.substr(0, dash);
  const long long count = parse_int(label.substr(dash + 1), "sampler " + label);
  if (count < 1) throw ContractError("sampler " + label + ": count must be positive");
  SamplerSpec s;
  s.label = label;
  if (kind == "CD" || kind == "cd") {
    s.method = Method::cd;
    s.k_steps = static_cast<int>(count);
  } else if (kind == "PCD" || kind == "pcd") {
    s.method = Method::pcd;
    s.k_steps = static_cast<int>(count);
  } else if (kind == "PT" || kind == "pt") {
    s.method = Method::pt;
    s.k_steps = 1;
    for (long long r = 1; r <= count; ++r) {
      s.betas.push_back(static_cast<double>(r) / static_cast<double>(count));
    }
  } else {
    throw ContractError("unknown sampler kind in " + label);
  }
  return s;
}

TrainConfig bench_train_config() {
  TrainConfig tc = bss_train_config();
  tc.learning_rate_w = 0.05;
  tc.learning_rate_b = 0.05;
  tc.epochs = 40;
  return tc;
}

BenchData bench_data(const BenchConfig& cfg) {
  if (cfg.dims < 1 || cfg.n_train < 2 || cfg.n_test < 1) throw ContractError("invalid bench sizes");
  Rng data_rng = Rng(cfg.seed).split(0);
  const Index total = cfg.n_train + cfg.n_test;
  BenchData out;
  if (cfg.images.empty()) {
    const BssData bss = generate_laplacian_bss(total, data_rng, std::nullopt, cfg.n_train, cfg.dims);
    out.train = bss.data.topRows(cfg.n_train);
    out.test = bss.data.bottomRows(cfg.n_test);
    return out;
  }
  const auto side = static_cast<Index>(std::lround(std::sqrt(static_cast<double>(cfg.dims))));
  if (side * side != cfg.dims) throw ContractError("patch benchmarks need a square number of dims");
  const DataBatch patches = extract_patches(cfg.images, side, total, data_rng);
  const WhiteningTransform zca = fit_whitening(patches.topRows(cfg.n_train), WhiteningKind::zca);
  const DataBatch white = apply_whitening(zca, patches);
  out.train = white.topRows(cfg.n_train);
  out.test = white.bottomRows(cfg.n_test);
  return out;
}

int epochs_to_converge(const std::vector<double>& curve, double tolerance) {
  if (curve.empty()) return 0;
  const double final_value = curve.back();
  std::size_t first = curve.size();
  for (std::size_t e = curve.size(); e-- > 0;) {
    if (!(std::abs(curve[e] - final_value) <= tolerance)) break;
    first = e;
  }
  return static_cast<int>(first) + 1;
}

std::vector<BenchRun> run_sampler_bench(const BenchConfig& cfg) {
  if (cfg.samplers.empty()) throw ContractError("no samplers to benchmark");
  std::vector<SamplerSpec> specs;
  for (const auto& label : cfg.samplers) specs.push_back(parse_sampler(label));

  const BenchData data = bench_data(cfg);
  const DataBatch& train_set = data.train;
  const DataBatch& test_set = data.test;

  std::vector<BenchRun> runs;
  for (const auto& spec : specs) {
    TrainConfig tc = cfg.train;
    tc.method = spec.method;
    tc.k_steps = spec.k_steps;
    if (spec.method == Method::pt) tc.pt_temperatures = spec.betas;
    tc.seed = mix_seed(cfg.seed, 1);  // same initial model and batch order for every sampler
    tc.monitor = Monitor::exact;
    tc.monitor_every = 1;
    const TrainResult res = train(train_set, cfg.num_hidden, tc, &test_set);

    BenchRun run;
    run.label = spec.label;
    run.diverged = res.history.diverged;
    for (const auto& e : res.history.epochs) {
      run.curve.push_back(e.avg_log_likelihood);
      run.epoch_seconds.push_back(e.seconds);
    }
    double total = 0.0;
    for (double s : run.epoch_seconds) total += s;
    run.seconds_per_epoch = run.epoch_seconds.empty() ? 0.0 : total / static_cast<double>(run.epoch_seconds.size());
    run.epochs_to_converge = run.diverged ? 0 : epochs_to_converge(run.curve, cfg.convergence_tolerance);
    runs.push_back(std::move(run));
  }
  return runs;
}

ExperimentReport bench_report(const std::vector<BenchRun>& runs, std::uint64_t seed, bool timings) {
  ExperimentReport report;
  report.command = "bench";
  for (const auto& run : runs) {
    TrialRecord r;
    r.trial = 0;
    r.seed = seed;
    r.method = run.label;
    r.curve = run.curve;
    if (!run.curve.empty()) r.ll_test = run.curve.back();
    r.diverged = run.diverged;
    if (timings) r.seconds_per_epoch = run.seconds_per_epoch;
    report.records.push_back(std::move(r));
  }
  return report;
}

std::string bench_timings_csv(const std::vector<BenchRun>& runs) {
  std::string out = "method,seconds_per_epoch,epochs_to_converge,diverged\n";
  for (const auto& run : runs) {
    out += csv_field(run.label) + "," + format_double(run.seconds_per_epoch) + "," +
           std::to_string(run.epochs_to_converge) + "," + (run.diverged ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace grbm

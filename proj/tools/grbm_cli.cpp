// Command-line front end for the GRBM library.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "grbm/ais.hpp"
#include "grbm/baselines.hpp"
#include "grbm/config.hpp"
#include "grbm/exact.hpp"
#include "grbm/experiments.hpp"
#include "grbm/io.hpp"
#include "grbm/kernels.hpp"
#include "grbm/patches.hpp"
#include "grbm/training.hpp"
#include "grbm/whitening.hpp"

namespace fs = std::filesystem;
using namespace grbm;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

enum class Format { json, csv };

struct Common {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  std::string config_path;
  int workers = 1;
  Format format = Format::json;
};

// Train flags that override the config file when given.
struct TrainFlags {
  std::optional<std::string> method;
  std::optional<int> k_steps;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> lr;
  std::optional<double> lr_c;
  std::optional<double> cap;
  std::optional<double> cap_fraction;
  std::optional<bool> learn_sigma;
  std::optional<std::string> temperatures;
  std::optional<int> chains;

  void add(CLI::App* app) {
    app->add_option("--method", method, "cd, pcd or pt");
    app->add_option("--k", k_steps, "Gibbs steps per update");
    app->add_option("--epochs", epochs, "training epochs");
    app->add_option("--batch-size", batch_size, "mini-batch size");
    app->add_option("--lr", lr, "learning rate for W and b");
    app->add_option("--lr-c", lr_c, "learning rate for c (default 0.1 * lr)");
    app->add_option("--cap", cap, "absolute cap on weight-update column norms");
    app->add_option("--cap-fraction", cap_fraction, "cap as a fraction of the max data norm");
    app->add_flag("--learn-sigma{true}", learn_sigma, "also learn sigma");
    app->add_option("--temperatures", temperatures, "comma-separated PT inverse temperatures");
    app->add_option("--chains", chains, "persistent chains (default: batch size)");
  }

  void apply(TrainConfig& cfg) const {
    if (method) cfg.method = parse_method(*method);
    if (k_steps) cfg.k_steps = *k_steps;
    if (epochs) cfg.epochs = *epochs;
    if (batch_size) cfg.batch_size = *batch_size;
    if (lr) {
      cfg.learning_rate_w = *lr;
      cfg.learning_rate_b = *lr;
    }
    if (lr_c) cfg.learning_rate_c = *lr_c;
    if (cap) cfg.grad_norm_cap = *cap;
    if (cap_fraction) cfg.grad_norm_cap_data_fraction = *cap_fraction;
    if (learn_sigma) cfg.learn_sigma = *learn_sigma;
    if (temperatures) cfg.pt_temperatures = parse_double_list(*temperatures, "--temperatures");
    if (chains) cfg.num_chains = *chains;
  }
};

ConfigFile load_config(const Common& c) {
  return c.config_path.empty() ? ConfigFile{} : ConfigFile::load(c.config_path);
}

void reject_unused(const ConfigFile& file) {
  const auto unused = file.unused_keys();
  if (unused.empty()) return;
  std::string keys;
  for (const auto& k : unused) keys += (keys.empty() ? "" : ", ") + k;
  throw ContractError("unknown config keys: " + keys);
}

// Writes to the file, or to stdout when the path is empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

std::string json_line(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

nlohmann::json finite_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

void write_report(const ExperimentReport& report, const Common& c) {
  if (c.out.empty()) {
    std::cout << (c.format == Format::json ? report.to_jsonl() : report.records_csv());
    return;
  }
  if (c.format == Format::json) {
    write_text_file(c.out + ".jsonl", report.to_jsonl());
  } else {
    write_text_file(c.out + ".records.csv", report.records_csv());
  }
  write_text_file(c.out + ".summary.csv", report.summary_csv());
}

// ---- bss ----------------------------------------------------------------------

struct BssArgs {
  std::optional<int> trials;
  std::optional<Index> n_train;
  std::optional<Index> n_test;
  std::vector<Index> hidden{2};
  bool no_baselines = false;
  Index mog_components = 3;
  bool timings = false;
  TrainFlags train;
};

int cmd_bss(const BssArgs& a, const Common& c) {
  BssExperimentConfig cfg;
  ConfigFile file = load_config(c);
  apply_config(file, cfg.train);
  if (auto v = file.get_int("trials")) cfg.trials = static_cast<int>(*v);
  if (auto v = file.get_int("train_samples")) cfg.n_train = static_cast<Index>(*v);
  if (auto v = file.get_int("test_samples")) cfg.n_test = static_cast<Index>(*v);
  reject_unused(file);
  a.train.apply(cfg.train);
  if (a.trials) cfg.trials = *a.trials;
  if (a.n_train) cfg.n_train = *a.n_train;
  if (a.n_test) cfg.n_test = *a.n_test;
  cfg.hidden_sizes = a.hidden;
  cfg.baselines = !a.no_baselines;
  cfg.mog_components = a.mog_components;
  cfg.timings = a.timings;
  cfg.seed = c.seed;
  cfg.workers = c.workers;
  const ExperimentReport report = run_bss(cfg);
  write_report(report, c);
  if (!c.out.empty()) std::cout << report.summary_csv();
  return 0;
}

// ---- train --------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string monitor_data;
  Index hidden = 2;
  std::string monitor;
  std::string history;
  bool timings = false;
  TrainFlags train;
};

int cmd_train(const TrainArgs& a, const Common& c) {
  if (c.out.empty()) throw ContractError("train needs --out for the model file");
  TrainConfig cfg;
  ConfigFile file = load_config(c);
  apply_config(file, cfg);
  reject_unused(file);
  a.train.apply(cfg);
  if (!a.monitor.empty()) cfg.monitor = parse_monitor(a.monitor);
  if (c.seed_given) cfg.seed = c.seed;

  const DataBatch data = load_batch_any(a.data);
  std::optional<DataBatch> monitor_data;
  if (!a.monitor_data.empty()) {
    monitor_data = load_batch_any(a.monitor_data);
    if (monitor_data->cols() != data.cols()) throw DataError("monitor data dimension does not match the training data");
  }
  const TrainResult res = train(data, a.hidden, cfg, monitor_data ? &*monitor_data : nullptr);
  if (res.history.diverged) throw NumericError("training diverged (non-finite parameters)");
  save_model(res.params, c.out);

  std::string text;
  if (c.format == Format::json) {
    for (const auto& e : res.history.epochs) {
      nlohmann::ordered_json j;
      j["epoch"] = e.epoch;
      j["avg_log_likelihood"] = finite_or_null(e.avg_log_likelihood);
      j["log_partition"] = finite_or_null(e.log_partition);
      j["momentum"] = e.momentum;
      j["max_update_column_norm"] = e.max_update_column_norm;
      if (a.timings) j["seconds"] = e.seconds;
      text += j.dump() + "\n";
    }
  } else {
    text = a.timings ? "epoch,avg_log_likelihood,log_partition,momentum,max_update_column_norm,seconds\n"
                     : "epoch,avg_log_likelihood,log_partition,momentum,max_update_column_norm\n";
    for (const auto& e : res.history.epochs) {
      text += std::to_string(e.epoch) + "," + format_double(e.avg_log_likelihood) + "," +
              format_double(e.log_partition) + "," + format_double(e.momentum) + "," +
              format_double(e.max_update_column_norm);
      if (a.timings) text += "," + format_double(e.seconds);
      text += "\n";
    }
  }
  emit(a.history, text);
  return 0;
}

// ---- eval ---------------------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string data;
  bool use_ais = false;
  int ais_chains = 100;
  int ais_betas = 1000;
};

int cmd_eval(const EvalArgs& a, const Common& c) {
  const GrbmParams p = load_model(a.model);
  const DataBatch d = load_batch_any(a.data);
  if (d.cols() != p.num_visible()) {
    throw DataError("data has " + std::to_string(d.cols()) + " columns but the model has " +
                    std::to_string(p.num_visible()) + " visible units");
  }
  double log_z = 0.0;
  double std_err = 0.0;
  if (a.use_ais) {
    AisConfig ac;
    ConfigFile file = load_config(c);
    apply_config(file, ac);
    reject_unused(file);
    ac.num_chains = a.ais_chains;
    ac.num_betas = a.ais_betas;
    ac.seed = c.seed;
    const AisResult r = ais_log_partition(p, ac);
    log_z = r.log_partition;
    std_err = r.std_err;
  } else {
    log_z = log_partition_exact(p);
  }
  const double ll = avg_log_likelihood(d, p, log_z);
  if (!std::isfinite(ll)) throw NumericError("log-likelihood is not finite");
  std::string text;
  if (c.format == Format::json) {
    nlohmann::ordered_json j;
    j["avg_log_likelihood"] = ll;
    j["log_partition"] = log_z;
    j["partition_method"] = a.use_ais ? "ais" : "exact";
    if (a.use_ais) j["log_partition_std_err"] = std_err;
    j["samples"] = d.rows();
    text = json_line(j);
  } else {
    text = "avg_log_likelihood,log_partition,partition_method,samples\n" + format_double(ll) + "," +
           format_double(log_z) + "," + (a.use_ais ? "ais" : "exact") + "," + std::to_string(d.rows()) + "\n";
  }
  emit(c.out, text);
  return 0;
}

// ---- mixture ------------------------------------------------------------------

struct MixtureArgs {
  std::string model;
};

int cmd_mixture(const MixtureArgs& a, const Common& c) {
  const GrbmParams p = load_model(a.model);
  const MixtureView view = mixture_view(p);
  std::string text;
  if (c.format == Format::json) {
    nlohmann::ordered_json j;
    j["log_partition"] = view.log_partition;
    j["sigma"] = view.sigma;
    j["order_mass"] = std::vector<double>(view.order_mass.data(), view.order_mass.data() + view.order_mass.size());
    nlohmann::ordered_json comps = nlohmann::ordered_json::array();
    for (const auto& comp : view.components) {
      nlohmann::ordered_json cj;
      cj["hidden"] = std::vector<double>(comp.hidden_state.data(), comp.hidden_state.data() + comp.hidden_state.size());
      cj["order"] = static_cast<int>(comp.hidden_state.sum());
      cj["log_weight"] = comp.log_weight;
      cj["weight"] = std::exp(comp.log_weight);
      cj["mean"] = std::vector<double>(comp.mean.data(), comp.mean.data() + comp.mean.size());
      comps.push_back(std::move(cj));
    }
    j["components"] = std::move(comps);
    text = json_line(j);
  } else {
    text = "order,mass\n";
    for (Index k = 0; k < view.order_mass.size(); ++k) {
      text += std::to_string(k) + "," + format_double(view.order_mass[k]) + "\n";
    }
    text += "\nhidden,order,weight,mean\n";
    for (const auto& comp : view.components) {
      std::string h;
      for (Index j = 0; j < comp.hidden_state.size(); ++j) h += comp.hidden_state[j] > 0.5 ? '1' : '0';
      std::string mean;
      for (Index i = 0; i < comp.mean.size(); ++i) mean += (i ? ";" : "") + format_double(comp.mean[i]);
      text += h + "," + std::to_string(static_cast<int>(comp.hidden_state.sum())) + "," + format_double(std::exp(comp.log_weight)) + "," +
              mean + "\n";
    }
  }
  emit(c.out, text);
  return 0;
}

// ---- ais ----------------------------------------------------------------------

struct AisArgs {
  std::string model;
  std::optional<int> chains;
  std::optional<int> betas;
  std::optional<std::string> schedule;
};

int cmd_ais(const AisArgs& a, const Common& c) {
  const GrbmParams p = load_model(a.model);
  AisConfig cfg;
  ConfigFile file = load_config(c);
  apply_config(file, cfg);
  reject_unused(file);
  if (a.chains) cfg.num_chains = *a.chains;
  if (a.betas) cfg.num_betas = *a.betas;
  if (a.schedule) cfg.schedule = parse_beta_schedule(*a.schedule);
  if (c.seed_given) cfg.seed = c.seed;
  const AisResult r = ais_log_partition(p, cfg);
  if (!std::isfinite(r.log_partition)) throw NumericError("AIS estimate is not finite");
  std::optional<double> exact;
  if (p.num_hidden() <= kDefaultEnumerationCap) exact = log_partition_exact(p);
  std::string text;
  if (c.format == Format::json) {
    nlohmann::ordered_json j;
    j["log_partition"] = r.log_partition;
    j["std_err"] = r.std_err;
    j["chains"] = cfg.num_chains;
    j["betas"] = cfg.num_betas;
    j["schedule"] = std::string(beta_schedule_name(cfg.schedule));
    j["exact_log_partition"] = exact ? nlohmann::json(*exact) : nlohmann::json(nullptr);
    text = json_line(j);
  } else {
    text = "log_partition,std_err,chains,betas,schedule,exact_log_partition\n" + format_double(r.log_partition) +
           "," + format_double(r.std_err) + "," + std::to_string(cfg.num_chains) + "," +
           std::to_string(cfg.num_betas) + "," + std::string(beta_schedule_name(cfg.schedule)) + "," +
           (exact ? format_double(*exact) : "") + "\n";
  }
  emit(c.out, text);
  return 0;
}

// ---- sample -------------------------------------------------------------------

struct SampleArgs {
  std::string model;
  Index count = 1000;
  int burn_in = 100;
  int thin = 1;
};

int cmd_sample(const SampleArgs& a, const Common& c) {
  if (c.out.empty()) throw ContractError("sample needs --out for the samples");
  if (a.count < 1 || a.burn_in < 0 || a.thin < 1) throw ContractError("invalid sampling schedule");
  const GrbmParams p = load_model(a.model);
  Rng rng(c.seed);
  std::vector<double> x(p.visible_bias.data(), p.visible_bias.data() + p.visible_bias.size());
  std::vector<double> h(static_cast<std::size_t>(p.num_hidden()));
  auto step = [&] {
    detail::sample_hidden(x, p, rng, h);
    detail::sample_visible(h, p, rng, x);
  };
  for (int s = 0; s < a.burn_in; ++s) step();
  DataBatch out(a.count, p.num_visible());
  for (Index r = 0; r < a.count; ++r) {
    for (int s = 0; s < a.thin; ++s) step();
    for (Index i = 0; i < p.num_visible(); ++i) out(r, i) = x[i];
  }
  if (c.format == Format::csv || fs::path(c.out).extension() == ".csv") {
    save_batch_csv(out, c.out);
  } else {
    save_batch(out, c.out);
  }
  return 0;
}

// ---- whiten -------------------------------------------------------------------

struct WhitenArgs {
  std::string data;
  std::string kind = "pca";
  std::string transform_out;
  std::string apply;
};

int cmd_whiten(const WhitenArgs& a, const Common& c) {
  if (c.out.empty()) throw ContractError("whiten needs --out for the whitened data");
  const DataBatch d = load_batch_any(a.data);
  const WhiteningTransform t =
      a.apply.empty() ? fit_whitening(d, parse_whitening_kind(a.kind)) : load_whitening(a.apply);
  if (t.dims() != d.cols()) throw DataError("whitening transform dimension does not match the data");
  const DataBatch w = apply_whitening(t, d);
  if (c.format == Format::csv || fs::path(c.out).extension() == ".csv") {
    save_batch_csv(w, c.out);
  } else {
    save_batch(w, c.out);
  }
  if (!a.transform_out.empty()) save_whitening(t, a.transform_out);
  return 0;
}

// ---- patches ------------------------------------------------------------------

struct PatchesArgs {
  std::vector<std::string> images;
  Index size = 8;
  Index count = 10000;
  std::string whiten;
  std::string transform_out;
};

int cmd_patches(const PatchesArgs& a, const Common& c) {
  if (c.out.empty()) throw ContractError("patches needs --out for the patch data");
  std::vector<Image> images;
  for (const auto& path : a.images) images.push_back(load_image(path));
  Rng rng(c.seed);
  DataBatch d = extract_patches(images, a.size, a.count, rng);
  if (!a.whiten.empty()) {
    const WhiteningTransform t = fit_whitening(d, parse_whitening_kind(a.whiten));
    d = apply_whitening(t, d);
    if (!a.transform_out.empty()) save_whitening(t, a.transform_out);
  }
  if (c.format == Format::csv || fs::path(c.out).extension() == ".csv") {
    save_batch_csv(d, c.out);
  } else {
    save_batch(d, c.out);
  }
  return 0;
}

// ---- bench --------------------------------------------------------------------

struct BenchArgs {
  std::vector<std::string> samplers{"CD-1", "PCD-1", "CD-10", "PCD-10", "PT-10"};
  Index dims = 16;
  Index hidden = 8;
  Index n_train = 5000;
  Index n_test = 5000;
  double tolerance = 0.05;
  bool timings = false;
  std::vector<std::string> images;
  TrainFlags train;
};

int cmd_bench(const BenchArgs& a, const Common& c) {
  BenchConfig cfg;
  ConfigFile file = load_config(c);
  apply_config(file, cfg.train);
  reject_unused(file);
  a.train.apply(cfg.train);
  cfg.samplers = a.samplers;
  cfg.dims = a.dims;
  cfg.num_hidden = a.hidden;
  cfg.n_train = a.n_train;
  cfg.n_test = a.n_test;
  cfg.convergence_tolerance = a.tolerance;
  cfg.seed = c.seed;
  for (const auto& path : a.images) cfg.images.push_back(load_image(path));
  const auto runs = run_sampler_bench(cfg);
  const ExperimentReport report = bench_report(runs, c.seed, a.timings);
  write_report(report, c);
  // Wall-clock numbers vary between runs, so they go to stderr unless requested.
  std::cerr << bench_timings_csv(runs);
  if (a.timings && !c.out.empty()) write_text_file(c.out + ".timings.csv", bench_timings_csv(runs));
  return 0;
}

void add_common(CLI::App* app, Common& c, bool seeded) {
  if (seeded) app->add_option("--seed", c.seed, "random seed")->each([&c](const std::string&) { c.seed_given = true; });
  app->add_option("--out", c.out, "output path (prefix for multi-file reports)");
  app->add_option("--config", c.config_path, "key = value config file")->check(CLI::ExistingFile);
  app->add_option("--workers", c.workers, "worker threads for independent trials")->check(CLI::PositiveNumber);
  app->add_option("--format", c.format, "output format")
      ->transform(CLI::CheckedTransformer(std::map<std::string, Format>{{"json", Format::json}, {"csv", Format::csv}}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-binary restricted Boltzmann machines: training, exact analysis and benchmarks"};
  app.require_subcommand(1);
  std::string simd;
  app.add_option("--simd", simd, "kernel set: scalar or avx2 (default: best available)");

  Common common;

  BssArgs bss;
  auto* bss_cmd = app.add_subcommand("bss", "blind source separation study with baselines");
  add_common(bss_cmd, common, true);
  bss_cmd->add_option("--trials", bss.trials)->check(CLI::PositiveNumber);
  bss_cmd->add_option("--train-samples", bss.n_train)->check(CLI::PositiveNumber);
  bss_cmd->add_option("--test-samples", bss.n_test)->check(CLI::PositiveNumber);
  bss_cmd->add_option("--hidden", bss.hidden, "GRBM hidden sizes")->delimiter(',');
  bss_cmd->add_flag("--no-baselines", bss.no_baselines);
  bss_cmd->add_option("--mog-components", bss.mog_components);
  bss_cmd->add_flag("--timings", bss.timings, "record wall-clock seconds per epoch");
  bss.train.add(bss_cmd);

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train a GRBM on a dataset");
  add_common(train_cmd, common, true);
  train_cmd->add_option("--data", tr.data)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--hidden", tr.hidden)->check(CLI::PositiveNumber);
  train_cmd->add_option("--monitor-data", tr.monitor_data)->check(CLI::ExistingFile);
  train_cmd->add_option("--monitor", tr.monitor, "none, exact or ais");
  train_cmd->add_option("--history", tr.history, "training history output (default stdout)");
  train_cmd->add_flag("--timings", tr.timings);
  tr.train.add(train_cmd);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "average log-likelihood of data under a model");
  add_common(eval_cmd, common, true);
  eval_cmd->add_option("--model", ev.model)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", ev.data)->required()->check(CLI::ExistingFile);
  eval_cmd->add_flag("--ais", ev.use_ais, "estimate ln Z by AIS instead of enumeration");
  eval_cmd->add_option("--chains", ev.ais_chains)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--betas", ev.ais_betas)->check(CLI::Range(2, 100000000));

  MixtureArgs mix;
  auto* mix_cmd = app.add_subcommand("mixture", "mixture-of-Gaussians view of a model");
  add_common(mix_cmd, common, false);
  mix_cmd->add_option("--model", mix.model)->required()->check(CLI::ExistingFile);

  AisArgs ais;
  auto* ais_cmd = app.add_subcommand("ais", "annealed importance sampling estimate of ln Z");
  add_common(ais_cmd, common, true);
  ais_cmd->add_option("--model", ais.model)->required()->check(CLI::ExistingFile);
  ais_cmd->add_option("--chains", ais.chains)->check(CLI::PositiveNumber);
  ais_cmd->add_option("--betas", ais.betas)->check(CLI::Range(2, 100000000));
  ais_cmd->add_option("--schedule", ais.schedule, "linear or geometric_tail");

  SampleArgs smp;
  auto* sample_cmd = app.add_subcommand("sample", "draw visible samples from a Gibbs chain");
  add_common(sample_cmd, common, true);
  sample_cmd->add_option("--model", smp.model)->required()->check(CLI::ExistingFile);
  sample_cmd->add_option("--count", smp.count)->check(CLI::PositiveNumber);
  sample_cmd->add_option("--burn-in", smp.burn_in)->check(CLI::NonNegativeNumber);
  sample_cmd->add_option("--thin", smp.thin)->check(CLI::PositiveNumber);

  WhitenArgs wh;
  auto* whiten_cmd = app.add_subcommand("whiten", "PCA or ZCA whitening of a dataset");
  add_common(whiten_cmd, common, false);
  whiten_cmd->add_option("--data", wh.data)->required()->check(CLI::ExistingFile);
  whiten_cmd->add_option("--kind", wh.kind, "pca or zca");
  whiten_cmd->add_option("--transform-out", wh.transform_out, "write the fitted transform as JSON");
  whiten_cmd->add_option("--apply", wh.apply, "apply a saved transform instead of fitting")->check(CLI::ExistingFile);

  PatchesArgs pa;
  auto* patches_cmd = app.add_subcommand("patches", "extract random square patches from grayscale images");
  add_common(patches_cmd, common, true);
  patches_cmd->add_option("--image", pa.images, "PGM or CSV image (repeatable)")->required()->check(CLI::ExistingFile);
  patches_cmd->add_option("--size", pa.size)->check(CLI::PositiveNumber);
  patches_cmd->add_option("--count", pa.count)->check(CLI::PositiveNumber);
  patches_cmd->add_option("--whiten", pa.whiten, "pca or zca");
  patches_cmd->add_option("--transform-out", pa.transform_out);

  BenchArgs be;
  auto* bench_cmd = app.add_subcommand("bench", "equal-epoch comparison of CD, PCD and PT");
  add_common(bench_cmd, common, true);
  bench_cmd->add_option("--samplers", be.samplers, "e.g. CD-1,CD-10,PT-10")->delimiter(',');
  bench_cmd->add_option("--dims", be.dims)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--hidden", be.hidden)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--train-samples", be.n_train)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--test-samples", be.n_test)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--tolerance", be.tolerance);
  bench_cmd->add_option("--image", be.images, "train on whitened patches of these images (repeatable)")
      ->check(CLI::ExistingFile);
  bench_cmd->add_flag("--timings", be.timings, "also write <out>.timings.csv");
  be.train.add(bench_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (simd == "scalar") {
      kernels::set_active_isa(kernels::Isa::scalar);
    } else if (simd == "avx2") {
      kernels::set_active_isa(kernels::Isa::avx2);
    } else if (!simd.empty()) {
      throw ContractError("unknown --simd value: " + simd);
    }
    if (*bss_cmd) return cmd_bss(bss, common);
    if (*train_cmd) return cmd_train(tr, common);
    if (*eval_cmd) return cmd_eval(ev, common);
    if (*mix_cmd) return cmd_mixture(mix, common);
    if (*ais_cmd) return cmd_ais(ais, common);
    if (*sample_cmd) return cmd_sample(smp, common);
    if (*whiten_cmd) return cmd_whiten(wh, common);
    if (*patches_cmd) return cmd_patches(pa, common);
    if (*bench_cmd) return cmd_bench(be, common);
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const EnumerationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}

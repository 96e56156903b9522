#include "dynef/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dynef/checkpoint.hpp"
#include "dynef/common.hpp"
#include "dynef/config.hpp"
#include "dynef/kernels.hpp"
#include "dynef/learning.hpp"
#include "dynef/rng.hpp"
#include "dynef/series_io.hpp"
#include "dynef/tasks.hpp"

namespace dynef {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";
constexpr double kGradcheckThreshold = 1e-4;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_manifest(const ExperimentConfig& cfg, const std::string& command) {
  std::uint64_t hash = fnv1a64(cfg.source_text);
  char hex[20];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  json manifest;
  manifest["command"] = command;
  manifest["config_hash"] = hex;
  manifest["seed"] = cfg.seed;
  manifest["dynef_version"] = kVersion;
  manifest["kernel_backend"] = kernels::backend_name(kernels::active());
  manifest["config"] = json::parse(cfg.source_text);
  std::ofstream out(fs::path(cfg.out_dir) / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + cfg.out_dir);
  out << manifest.dump(1) << "\n";
}

void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& metrics) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics file: " + path);
  out << "epoch,train_loglik,test_loglik,wall_ms\n";
  for (const auto& e : metrics) {
    out << e.epoch << ',' << fmt_double(e.train_loglik) << ','
        << (std::isnan(e.test_loglik) ? std::string("nan") : fmt_double(e.test_loglik)) << ','
        << fmt_double(e.wall_ms) << '\n';
  }
}

struct LoadedData {
  std::vector<TimeSeries> train;
  std::vector<TimeSeries> test;
  // task mode keeps the examples around for labels
  std::vector<ImageExample> train_examples;
  std::vector<ImageExample> test_examples;
};

std::vector<ImageExample> load_task_examples(const std::string& path, const TaskCfg& task,
                                             std::uint64_t seed) {
  std::vector<ImageExample> examples = load_dataset(path, task.height, task.width);
  if (task.augment_rotation)
    examples = augment_rotations(std::move(examples), task.rotation_range, seed);
  return examples;
}

LoadedData load_training_data(const ExperimentConfig& cfg, const Model& m) {
  LoadedData data;
  if (cfg.task) {
    if (cfg.data.train_images.empty())
      throw ConfigError("task mode needs data.train_images");
    const TwoLayerSpec spec = make_task_spec(*cfg.task);
    data.train_examples =
        load_task_examples(cfg.data.train_images, *cfg.task, derive_seed(cfg.seed, "augment-train"));
    for (std::size_t q = 0; q < data.train_examples.size(); ++q)
      data.train.push_back(encode_example(data.train_examples[q], spec,
                                          derive_seed(cfg.seed, "encode-train", q)));
    if (!cfg.data.test_images.empty()) {
      data.test_examples =
          load_task_examples(cfg.data.test_images, *cfg.task, derive_seed(cfg.seed, "augment-test"));
      for (std::size_t q = 0; q < data.test_examples.size(); ++q)
        data.test.push_back(encode_example(data.test_examples[q], spec,
                                           derive_seed(cfg.seed, "encode-test", q)));
    }
  } else {
    if (cfg.data.train_series.empty())
      throw ConfigError("graph mode needs data.train_series (list of series CSV files)");
    for (const auto& path : cfg.data.train_series) {
      data.train.push_back(read_series_csv(path));
      validate_series(data.train.back(), m.alphabet);
      if (data.train.back().n_units != m.n_units())
        throw ConfigError(path + ": series has " + std::to_string(data.train.back().n_units) +
                          " units, model has " + std::to_string(m.n_units()));
    }
    for (const auto& path : cfg.data.test_series) {
      data.test.push_back(read_series_csv(path));
      validate_series(data.test.back(), m.alphabet);
    }
  }
  return data;
}

int cmd_train_ml(const ExperimentConfig& cfg) {
  Model m = build_model(cfg);
  LoadedData data = load_training_data(cfg, m);
  fs::create_directories(cfg.out_dir);
  write_manifest(cfg, "train-ml");
  TrainResult result =
      train_ml(m, data.train, data.test.empty() ? nullptr : &data.test, cfg.train);
  write_metrics_csv((fs::path(cfg.out_dir) / "metrics.csv").string(), result.metrics);
  save_checkpoint((fs::path(cfg.out_dir) / "checkpoint.json").string(), m);
  if (!result.metrics.empty())
    std::cout << "train-ml done: final train loglik " << result.metrics.back().train_loglik
              << "\n";
  else
    std::cout << "train-ml done\n";
  return 0;
}

void write_histogram_csv(const std::string& path, const std::vector<double>& values, int bins) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write histogram file: " + path);
  out << "bin_lo,bin_hi,count\n";
  if (values.empty()) return;
  double lo = values.front(), hi = values.front();
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) hi = lo + 1e-12;
  std::vector<long long> counts(bins, 0);
  for (double v : values) {
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    counts[std::min(b, bins - 1)] += 1;
  }
  for (int b = 0; b < bins; ++b) {
    out << fmt_double(lo + (hi - lo) * b / bins) << ','
        << fmt_double(lo + (hi - lo) * (b + 1) / bins) << ',' << counts[b] << '\n';
  }
}

int cmd_train_bayes(const ExperimentConfig& cfg) {
  Model m = build_model(cfg);
  LoadedData data = load_training_data(cfg, m);
  fs::create_directories(cfg.out_dir);
  write_manifest(cfg, "train-bayes");
  BayesResult result =
      train_bayes(m, data.train, data.test.empty() ? nullptr : &data.test, cfg.train);
  write_metrics_csv((fs::path(cfg.out_dir) / "metrics.csv").string(), result.metrics);
  save_checkpoint((fs::path(cfg.out_dir) / "checkpoint.json").string(), m);

  const fs::path snap_dir = fs::path(cfg.out_dir) / "snapshots";
  fs::create_directories(snap_dir);
  Model snap_model = m;
  for (std::size_t s = 0; s < result.snapshots.size(); ++s) {
    char name[32];
    std::snprintf(name, sizeof(name), "snapshot_%06zu.json", s);
    snap_model.params = result.snapshots[s];
    save_checkpoint((snap_dir / name).string(), snap_model);
  }

  // causal-parameter evolution (up to 80 coordinates) and final histogram
  const std::size_t n_v = m.params.v.size();
  Rng pick_rng(derive_seed(cfg.seed, "trace-pick"));
  std::vector<std::size_t> coords;
  if (n_v <= 80) {
    for (std::size_t q = 0; q < n_v; ++q) coords.push_back(q);
  } else {
    std::vector<std::size_t> all(n_v);
    for (std::size_t q = 0; q < n_v; ++q) all[q] = q;
    for (int q = 0; q < 80; ++q) {
      const std::size_t j = q + pick_rng.uniform_int(static_cast<int>(n_v - q));
      std::swap(all[q], all[j]);
      coords.push_back(all[q]);
    }
  }
  {
    std::ofstream out(fs::path(cfg.out_dir) / "param_trace.csv");
    out << "snapshot,coord,value\n";
    for (std::size_t s = 0; s < result.snapshots.size(); ++s)
      for (std::size_t qc : coords)
        out << s << ',' << qc << ',' << fmt_double(result.snapshots[s].v[qc]) << '\n';
  }
  std::vector<double> final_v =
      result.snapshots.empty() ? m.params.v : result.snapshots.back().v;
  write_histogram_csv((fs::path(cfg.out_dir) / "param_hist.csv").string(), final_v, 60);
  std::cout << "train-bayes done: " << result.snapshots.size() << " snapshots\n";
  return 0;
}

int cmd_sample(const ExperimentConfig& cfg) {
  if (cfg.data.checkpoint.empty()) throw ConfigError("sample needs data.checkpoint");
  Model m = load_checkpoint(cfg.data.checkpoint);
  fs::create_directories(cfg.out_dir);
  write_manifest(cfg, "sample");
  for (int s = 0; s < cfg.sample.n_sequences; ++s) {
    const TimeSeries x =
        sample_sequence(m, cfg.sample.t_len, derive_seed(cfg.seed, "sample-cmd", s));
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%03d.csv", s);
    write_series_csv((fs::path(cfg.out_dir) / name).string(), x);
  }
  std::cout << "sample done: " << cfg.sample.n_sequences << " file(s), T=" << cfg.sample.t_len
            << "\n";
  return 0;
}

int cmd_eval(const ExperimentConfig& cfg) {
  if (cfg.data.checkpoint.empty()) throw ConfigError("eval needs data.checkpoint");
  if (!cfg.task) throw ConfigError("eval needs a task section");
  if (cfg.data.test_images.empty()) throw ConfigError("eval needs data.test_images");
  Model m = load_checkpoint(cfg.data.checkpoint);
  const TwoLayerSpec spec = make_task_spec(*cfg.task);
  if (m.n_units() != spec.n_units())
    throw ConfigError("checkpoint does not match the task topology");
  const std::vector<ImageExample> examples =
      load_task_examples(cfg.data.test_images, *cfg.task, derive_seed(cfg.seed, "augment-test"));
  fs::create_directories(cfg.out_dir);
  write_manifest(cfg, "eval");

  std::vector<std::vector<int>> predicted(examples.size());
  parallel_for(static_cast<int>(examples.size()), [&](int q) {
    const TimeSeries inputs = rate_encode(examples[q].pixels, spec.t_len,
                                          derive_seed(cfg.seed, "encode-eval", q));
    predicted[q] = classify(m, inputs, spec, derive_seed(cfg.seed, "classify", q));
  });

  json acc;
  acc["n_examples"] = examples.size();
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    long long hits = 0;
    for (std::size_t q = 0; q < examples.size(); ++q)
      if (predicted[q][g] == class_of(examples[q], spec.groups[g])) ++hits;
    acc[spec.groups[g].name] =
        examples.empty() ? 0.0 : static_cast<double>(hits) / examples.size();
  }
  std::ofstream out(fs::path(cfg.out_dir) / "accuracy.json");
  out << acc.dump(1) << "\n";
  std::cout << "eval done: " << acc.dump() << "\n";
  return 0;
}

int cmd_gradcheck(const ExperimentConfig& cfg) {
  if (!cfg.graph)
    throw ConfigError("gradcheck needs an explicit graph section (small model)");
  Model m = build_model(cfg);
  init_params(m, cfg.train);
  const TimeSeries x = sample_sequence(m, cfg.sample.t_len, derive_seed(cfg.seed, "gradcheck"));
  GradCheckReport report = finite_diff_check(m, x);
  fs::create_directories(cfg.out_dir);
  write_manifest(cfg, "gradcheck");
  const bool pass = report.max_rel() <= kGradcheckThreshold;
  json doc;
  doc["max_rel_theta"] = report.max_rel_theta;
  doc["max_rel_v"] = report.max_rel_v;
  doc["max_rel_u"] = report.max_rel_u;
  doc["threshold"] = kGradcheckThreshold;
  doc["pass"] = pass;
  std::ofstream out(fs::path(cfg.out_dir) / "gradcheck.json");
  out << doc.dump(1) << "\n";
  std::cout << "gradcheck " << (pass ? "PASS" : "FAIL") << ": max rel err " << report.max_rel()
            << "\n";
  return pass ? 0 : 1;
}

int cmd_encode(const ExperimentConfig& cfg) {
  if (!cfg.task) throw ConfigError("encode needs a task section");
  if (cfg.data.train_images.empty()) throw ConfigError("encode needs data.train_images");
  const TwoLayerSpec spec = make_task_spec(*cfg.task);
  const std::vector<ImageExample> examples = load_task_examples(
      cfg.data.train_images, *cfg.task, derive_seed(cfg.seed, "augment-train"));
  fs::create_directories(cfg.out_dir);
  write_manifest(cfg, "encode");
  std::ofstream enc(fs::path(cfg.out_dir) / "encoded.csv");
  enc << "example,unit,t,symbol\n";
  std::ofstream lab(fs::path(cfg.out_dir) / "labels.csv");
  lab << "example";
  for (const auto& g : spec.groups) lab << ',' << g.name;
  lab << '\n';
  for (std::size_t q = 0; q < examples.size(); ++q) {
    const TimeSeries x = encode_example(examples[q], spec, derive_seed(cfg.seed, "encode-train", q));
    for (int i = 0; i < x.n_units; ++i)
      for (int t = 1; t <= x.t_len; ++t)
        enc << q << ',' << i << ',' << t << ',' << int(x.at(i, t)) << '\n';
    lab << q;
    for (const auto& g : spec.groups) lab << ',' << class_of(examples[q], g);
    lab << '\n';
  }
  std::cout << "encode done: " << examples.size() << " examples\n";
  return 0;
}

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<double> lr;
  std::optional<int> epochs;
  std::optional<std::string> neg_phase;
  std::optional<int> gibbs_samples;
  std::optional<int> gibbs_burnin;
  std::optional<std::string> prior;
  std::vector<double> gmm_means;
  std::optional<double> gmm_std;
  std::optional<int> snapshot_stride;
  std::optional<int> t_len;
  std::vector<double> rotation_range;
  bool no_lateral = false;
  std::optional<std::string> checkpoint;
  std::optional<int> sample_t;
};

void apply_overrides(ExperimentConfig& cfg, const CliOverrides& ov) {
  if (ov.seed) {
    cfg.seed = *ov.seed;
    cfg.train.seed = *ov.seed;
  }
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  if (ov.lr) cfg.train.learning_rate = *ov.lr;
  if (ov.epochs) cfg.train.epochs = *ov.epochs;
  if (ov.neg_phase) {
    if (*ov.neg_phase == "exact") cfg.train.neg_phase = NegPhaseMode::exact;
    else if (*ov.neg_phase == "gibbs") cfg.train.neg_phase = NegPhaseMode::gibbs;
    else if (*ov.neg_phase == "auto") cfg.train.neg_phase = NegPhaseMode::auto_select;
    else throw ConfigError("--neg-phase must be exact|gibbs|auto");
  }
  if (ov.gibbs_samples) cfg.train.gibbs.n_samples = *ov.gibbs_samples;
  if (ov.gibbs_burnin) cfg.train.gibbs.burn_in = *ov.gibbs_burnin;
  if (ov.prior) {
    if (*ov.prior == "uniform") {
      cfg.train.prior = Prior::flat();
    } else if (*ov.prior == "gmm") {
      std::vector<double> means =
          ov.gmm_means.empty() ? std::vector<double>{0.0, -1.0} : ov.gmm_means;
      cfg.train.prior =
          Prior::gaussian_mixture_prior(means, ov.gmm_std.value_or(0.15));
    } else {
      throw ConfigError("--prior must be uniform|gmm");
    }
  } else if (ov.gmm_std || !ov.gmm_means.empty()) {
    if (cfg.train.prior.kind != PriorKind::gaussian_mixture)
      throw ConfigError("--gmm-means/--gmm-std need --prior gmm or a gmm prior in the config");
    if (!ov.gmm_means.empty()) cfg.train.prior.means = ov.gmm_means;
    if (ov.gmm_std) cfg.train.prior.stddev = *ov.gmm_std;
    cfg.train.prior.weights.assign(cfg.train.prior.means.size(),
                                   1.0 / cfg.train.prior.means.size());
    cfg.train.prior.validate();
  }
  if (ov.snapshot_stride) cfg.train.snapshot_stride = *ov.snapshot_stride;
  if (ov.t_len && cfg.task) cfg.task->t_len = *ov.t_len;
  if (!ov.rotation_range.empty()) {
    if (ov.rotation_range.size() != 2 || !cfg.task)
      throw ConfigError("--rotation-range needs two values and a task config");
    cfg.task->rotation_range = {ov.rotation_range[0], ov.rotation_range[1]};
  }
  if (ov.no_lateral && cfg.task) cfg.task->no_lateral = true;
  if (ov.checkpoint) cfg.data.checkpoint = *ov.checkpoint;
  if (ov.sample_t) cfg.sample.t_len = *ov.sample_t;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"dynef: dynamic exponential family models over discrete time series"};
  app.require_subcommand(1);

  std::string config_path;
  CliOverrides ov;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "experiment config JSON")->required();
    sub->add_option("--seed", ov.seed, "override the root seed");
    sub->add_option("--out-dir", ov.out_dir, "override the output directory");
  };
  auto add_train = [&](CLI::App* sub) {
    sub->add_option("--lr", ov.lr, "learning rate");
    sub->add_option("--epochs", ov.epochs, "training epochs");
    sub->add_option("--neg-phase", ov.neg_phase, "negative phase: exact|gibbs|auto");
    sub->add_option("--gibbs-samples", ov.gibbs_samples, "Gibbs samples per expectation");
    sub->add_option("--gibbs-burnin", ov.gibbs_burnin, "Gibbs burn-in sweeps");
    sub->add_option("--t-len", ov.t_len, "encoding length T (task mode)");
    sub->add_option("--rotation-range", ov.rotation_range, "augmentation degrees lo hi")
        ->expected(2);
    sub->add_flag("--no-lateral", ov.no_lateral, "drop lateral connections (task mode)");
  };

  CLI::App* train_ml_cmd = app.add_subcommand("train-ml", "maximum-likelihood training");
  add_common(train_ml_cmd);
  add_train(train_ml_cmd);

  CLI::App* train_bayes_cmd = app.add_subcommand("train-bayes", "SGLD Bayesian training");
  add_common(train_bayes_cmd);
  add_train(train_bayes_cmd);
  train_bayes_cmd->add_option("--prior", ov.prior, "prior: uniform|gmm");
  train_bayes_cmd->add_option("--gmm-means", ov.gmm_means, "mixture means")->expected(-1);
  train_bayes_cmd->add_option("--gmm-std", ov.gmm_std, "mixture stddev");
  train_bayes_cmd->add_option("--snapshot-stride", ov.snapshot_stride,
                              "updates between parameter snapshots");

  CLI::App* sample_cmd = app.add_subcommand("sample", "draw sequences from a checkpoint");
  add_common(sample_cmd);
  sample_cmd->add_option("--checkpoint", ov.checkpoint, "checkpoint JSON");
  sample_cmd->add_option("-T,--t-len", ov.sample_t, "sequence length");

  CLI::App* eval_cmd = app.add_subcommand("eval", "classification accuracy of a checkpoint");
  add_common(eval_cmd);
  eval_cmd->add_option("--checkpoint", ov.checkpoint, "checkpoint JSON");
  eval_cmd->add_option("--t-len", ov.t_len, "encoding length T");
  eval_cmd->add_flag("--no-lateral", ov.no_lateral, "drop lateral connections");

  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference check of the gradients");
  add_common(gradcheck_cmd);
  gradcheck_cmd->add_option("-T,--t-len", ov.sample_t, "length of the probe sequence");

  CLI::App* encode_cmd = app.add_subcommand("encode", "dump encoded spike trains for a dataset");
  add_common(encode_cmd);
  encode_cmd->add_option("--t-len", ov.t_len, "encoding length T");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = load_config(config_path);
    apply_overrides(cfg, ov);
    if (train_ml_cmd->parsed()) return cmd_train_ml(cfg);
    if (train_bayes_cmd->parsed()) return cmd_train_bayes(cfg);
    if (sample_cmd->parsed()) return cmd_sample(cfg);
    if (eval_cmd->parsed()) return cmd_eval(cfg);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(cfg);
    if (encode_cmd->parsed()) return cmd_encode(cfg);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace dynef

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynef/checkpoint.hpp"
#include "dynef/config.hpp"
#include "dynef/learning.hpp"
#include "dynef/series_io.hpp"

using namespace dynef;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "dynef_cli_tests";

int run_cli(const std::string& args, const std::string& log_name = "cli.log") {
  const std::string cmd = std::string(DYNEF_CLI_PATH) + " " + args + " > " +
                          (kWork / log_name).string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

/// toy graph-mode experiment: writes config + training series, returns the
/// config path
fs::path write_toy_experiment(const std::string& tag, int epochs, std::uint64_t seed) {
  const fs::path dir = kWork / tag;
  fs::create_directories(dir);
  // generator model for the training series
  Model gen(AlphabetSpec(2), BasisBank::custom({{1.0, 0.4}}),
            CausalGraph(3, {{0, 1}, {1, 2}, {2, 2}}), LateralGraph(3, {{1, 2}}));
  gen.params.theta = {-0.3, 0.2, 0.1};
  gen.params.v = {0.8, -0.5, 0.3, 0.2, 0.4, -0.2};
  gen.params.u = {0.6};
  std::vector<std::string> series_paths;
  for (int q = 0; q < 4; ++q) {
    const fs::path p = dir / ("train_" + std::to_string(q) + ".csv");
    write_series_csv(p.string(), sample_sequence(gen, 5, 1000 + q));
    series_paths.push_back(p.string());
  }
  json cfg;
  cfg["seed"] = seed;
  cfg["out_dir"] = (dir / "out").string();
  cfg["alphabet"] = {{"C", 2}};
  cfg["graph"] = {{"n_units", 3},
                  {"causal_edges", json::array({json::array({0, 1}), json::array({1, 2}),
                                                json::array({2, 2})})},
                  {"lateral_edges", json::array({json::array({1, 2})})}};
  cfg["basis"] = {{"kind", "custom"}, {"values", json::array({json::array({1.0, 0.4})})}};
  cfg["train"] = {{"lr", 0.05}, {"epochs", epochs}, {"neg_phase", "exact"}};
  cfg["data"] = {{"train_series", series_paths}};
  cfg["sample"] = {{"T", 5}};
  const fs::path cfg_path = dir / "config.json";
  std::ofstream out(cfg_path);
  out << cfg.dump(1);
  return cfg_path;
}

}  // namespace

TEST_CASE("cli: missing config file exits with code 2") {
  fs::create_directories(kWork);
  CHECK(run_cli("train-ml /nonexistent/config.json") == 2);
  CHECK(slurp(kWork / "cli.log").find("/nonexistent/config.json") != std::string::npos);
  CHECK(run_cli("") == 2);  // missing subcommand is a usage error
}

TEST_CASE("cli: toy train-ml writes metrics, checkpoint and manifest") {
  const fs::path cfg = write_toy_experiment("train_ml", 10, 7);
  REQUIRE(run_cli("train-ml " + cfg.string()) == 0);
  const fs::path out = cfg.parent_path() / "out";
  CHECK(count_lines(out / "metrics.csv") == 11);  // header + 10 epochs
  CHECK(slurp(out / "metrics.csv").substr(0, 38) == "epoch,train_loglik,test_loglik,wall_ms");
  CHECK(fs::exists(out / "checkpoint.json"));
  const json manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest.at("command") == "train-ml");
  CHECK(manifest.at("seed") == 7);
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest.at("config").contains("graph"));
  // the checkpoint is loadable
  const Model loaded = load_checkpoint((out / "checkpoint.json").string());
  CHECK(loaded.n_units() == 3);
}

TEST_CASE("cli: identical config and seed give byte-identical checkpoints") {
  const fs::path cfg = write_toy_experiment("determinism", 5, 99);
  const fs::path dir = cfg.parent_path();
  REQUIRE(run_cli("train-ml " + cfg.string() + " --out-dir " + (dir / "o1").string()) == 0);
  REQUIRE(run_cli("train-ml " + cfg.string() + " --out-dir " + (dir / "o2").string()) == 0);
  const std::string a = slurp(dir / "o1" / "checkpoint.json");
  const std::string b = slurp(dir / "o2" / "checkpoint.json");
  CHECK(!a.empty());
  CHECK(a == b);
}

TEST_CASE("cli: DYNEF_KERNEL forces the backend recorded in the manifest") {
  const fs::path cfg = write_toy_experiment("kernel_env", 2, 4);
  const fs::path dir = cfg.parent_path();
  const std::string cmd = "DYNEF_KERNEL=scalar " + std::string(DYNEF_CLI_PATH) + " train-ml " +
                          cfg.string() + " --out-dir " + (dir / "scalar").string() + " > " +
                          (kWork / "cli.log").string() + " 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  const json manifest = json::parse(slurp(dir / "scalar" / "manifest.json"));
  CHECK(manifest.at("kernel_backend") == "scalar");
}

TEST_CASE("cli: sample and gradcheck") {
  const fs::path cfg = write_toy_experiment("sample", 2, 5);
  const fs::path dir = cfg.parent_path();
  REQUIRE(run_cli("train-ml " + cfg.string()) == 0);
  const std::string ckpt = (dir / "out" / "checkpoint.json").string();

  // empty sample still writes a header
  REQUIRE(run_cli("sample " + cfg.string() + " --checkpoint " + ckpt + " -T 0 --out-dir " +
                  (dir / "s0").string()) == 0);
  CHECK(slurp(dir / "s0" / "sample_000.csv") == "unit,t,symbol\n");

  REQUIRE(run_cli("sample " + cfg.string() + " --checkpoint " + ckpt + " -T 12 --out-dir " +
                  (dir / "s1").string()) == 0);
  const TimeSeries x = read_series_csv((dir / "s1" / "sample_000.csv").string());
  CHECK(x.n_units == 3);
  CHECK(x.t_len == 12);

  // sampling without a checkpoint is a config error
  CHECK(run_cli("sample " + cfg.string() + " --out-dir " + (dir / "s2").string()) == 2);

  REQUIRE(run_cli("gradcheck " + cfg.string() + " -T 4 --out-dir " + (dir / "gc").string()) ==
          0);
  const json report = json::parse(slurp(dir / "gc" / "gradcheck.json"));
  CHECK(report.at("pass") == true);
  CHECK(report.at("max_rel_v").get<double>() < 1e-4);
}

TEST_CASE("cli: train-bayes with uniform and bimodal priors") {
  const fs::path cfg = write_toy_experiment("bayes", 4, 3);
  const fs::path dir = cfg.parent_path();
  // rewrite the train section for SGLD with a small constant rate
  json doc = json::parse(slurp(cfg));
  doc["train"] = {{"lr", 0.000625},
                  {"epochs", 4},
                  {"neg_phase", "exact"},
                  {"snapshot_stride", 2},
                  {"snapshot_burn_in", 0.25},
                  {"prior", {{"kind", "gmm"}, {"means", {0.0, -1.0}}, {"std", 0.15}}}};
  {
    std::ofstream out(cfg);
    out << doc.dump(1);
  }
  REQUIRE(run_cli("train-bayes " + cfg.string() + " --out-dir " + (dir / "gmm").string()) == 0);
  // 16 updates, burn-in 4, stride 2: snapshots at 4,6,8,10,12,14
  const fs::path snaps = dir / "gmm" / "snapshots";
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(snaps))
    names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  REQUIRE(names.size() == 6);
  CHECK(names.front() == "snapshot_000000.json");
  CHECK(names.back() == "snapshot_000005.json");
  CHECK(fs::exists(dir / "gmm" / "param_hist.csv"));
  CHECK(fs::exists(dir / "gmm" / "param_trace.csv"));

  REQUIRE(run_cli("train-bayes " + cfg.string() + " --prior uniform --out-dir " +
                  (dir / "uni").string()) == 0);
  CHECK(fs::exists(dir / "uni" / "param_hist.csv"));
  // distinct priors, distinct runs
  CHECK(slurp(dir / "uni" / "checkpoint.json") != slurp(dir / "gmm" / "checkpoint.json"));
}

TEST_CASE("cli: eval on an untrained model sits at chance level") {
  const fs::path dir = kWork / "eval";
  fs::create_directories(dir);
  // balanced 2-class task on a 1x2 image grid
  const fs::path images = dir / "test.csv";
  {
    std::ofstream out(images);
    out << "p0,p1,label\n";
    for (int q = 0; q < 200; ++q) {
      if (q % 2 == 0)
        out << "0.9,0.1,0\n";
      else
        out << "0.1,0.9,1\n";
    }
  }
  json cfg;
  cfg["seed"] = 11;
  cfg["out_dir"] = (dir / "out").string();
  cfg["alphabet"] = {{"C", 2}};
  cfg["task"] = {{"height", 1},
                 {"width", 2},
                 {"groups", json::array({json::array({"digit", 2})})},
                 {"t_len", 30},
                 {"augment_rotation", false}};
  cfg["basis"] = {{"kind", "custom"}, {"values", json::array({json::array({1.0})})}};
  cfg["data"] = {{"test_images", images.string()}, {"checkpoint", (dir / "ckpt.json").string()}};
  const fs::path cfg_path = dir / "config.json";
  {
    std::ofstream out(cfg_path);
    out << cfg.dump(1);
  }
  // untrained random params
  ExperimentConfig parsed = load_config(cfg_path.string());
  Model m = build_model(parsed);
  TrainConfig tc;
  tc.seed = 1234;
  init_params(m, tc);
  save_checkpoint((dir / "ckpt.json").string(), m);

  REQUIRE(run_cli("eval " + cfg_path.string()) == 0);
  const json acc = json::parse(slurp(dir / "out" / "accuracy.json"));
  CHECK(acc.at("n_examples") == 200);
  const double digit_acc = acc.at("digit").get<double>();
  CHECK(digit_acc > 0.4);
  CHECK(digit_acc < 0.6);
}

TEST_CASE("cli: encode dumps spike trains and labels") {
  const fs::path dir = kWork / "encode";
  fs::create_directories(dir);
  const fs::path images = dir / "train.csv";
  {
    std::ofstream out(images);
    out << "0.5,0.5,0\n1.0,0.0,1\n";
  }
  json cfg;
  cfg["seed"] = 2;
  cfg["out_dir"] = (dir / "out").string();
  cfg["task"] = {{"height", 1},
                 {"width", 2},
                 {"groups", json::array({json::array({"digit", 2})})},
                 {"t_len", 6},
                 {"augment_rotation", true},
                 {"rotation_range", json::array({30.0, 150.0})}};
  cfg["basis"] = {{"kind", "custom"}, {"values", json::array({json::array({1.0})})}};
  cfg["data"] = {{"train_images", images.string()}};
  const fs::path cfg_path = dir / "config.json";
  {
    std::ofstream out(cfg_path);
    out << cfg.dump(1);
  }
  REQUIRE(run_cli("encode " + cfg_path.string()) == 0);
  // 2 examples doubled by augmentation, 4 units (2 in + 2 out), T=6
  CHECK(count_lines(dir / "out" / "encoded.csv") == 1 + 4 * 4 * 6);
  CHECK(count_lines(dir / "out" / "labels.csv") == 1 + 4);
  const std::string labels = slurp(dir / "out" / "labels.csv");
  CHECK(labels.substr(0, 13) == "example,digit");
}

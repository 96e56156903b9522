#include "dynef/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dynef/common.hpp"

namespace dynef {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& msg) {
  throw ConfigError(origin + ": " + msg);
}

std::vector<Edge> parse_edges(const json& arr, const std::string& origin, const char* key) {
  if (!arr.is_array()) fail(origin, std::string(key) + " must be an array of [j,i] pairs");
  std::vector<Edge> edges;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      fail(origin, std::string(key) + " entries must be [j,i] integer pairs");
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return edges;
}

NegPhaseMode parse_neg_phase(const std::string& s, const std::string& origin) {
  if (s == "exact") return NegPhaseMode::exact;
  if (s == "gibbs") return NegPhaseMode::gibbs;
  if (s == "auto") return NegPhaseMode::auto_select;
  fail(origin, "train.neg_phase must be one of exact|gibbs|auto, got '" + s + "'");
}

Prior parse_prior(const json& p, const std::string& origin) {
  const std::string kind = p.value("kind", "uniform");
  if (kind == "uniform") return Prior::flat();
  if (kind == "gmm" || kind == "gaussian_mixture") {
    std::vector<double> means = p.value("means", std::vector<double>{0.0, -1.0});
    const double stddev = p.value("std", 0.15);
    std::vector<double> weights = p.value("weights", std::vector<double>{});
    try {
      return Prior::gaussian_mixture_prior(std::move(means), stddev, std::move(weights));
    } catch (const std::exception& e) {
      fail(origin, std::string("train.prior: ") + e.what());
    }
  }
  fail(origin, "train.prior.kind must be uniform|gmm, got '" + kind + "'");
}

template <typename T>
T get_checked(const json& obj, const char* key, T fallback, const std::string& origin) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(origin, std::string("bad value for '") + key + "'");
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(origin, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(origin, "top level must be a JSON object");

  ExperimentConfig cfg;
  cfg.source_text = text;
  cfg.seed = get_checked<std::uint64_t>(doc, "seed", 0, origin);
  cfg.out_dir = get_checked<std::string>(doc, "out_dir", "run-out", origin);
  if (doc.contains("alphabet"))
    cfg.alphabet_c = get_checked<int>(doc.at("alphabet"), "C", 2, origin);

  if (doc.contains("graph") && doc.contains("task"))
    fail(origin, "provide either 'graph' or 'task', not both");
  if (doc.contains("graph")) {
    const json& g = doc.at("graph");
    GraphSpecCfg gs;
    gs.n_units = get_checked<int>(g, "n_units", 0, origin);
    if (gs.n_units < 1) fail(origin, "graph.n_units must be >= 1");
    if (g.contains("causal_edges"))
      gs.causal_edges = parse_edges(g.at("causal_edges"), origin, "graph.causal_edges");
    if (g.contains("lateral_edges"))
      gs.lateral_edges = parse_edges(g.at("lateral_edges"), origin, "graph.lateral_edges");
    cfg.graph = std::move(gs);
  }
  if (doc.contains("task")) {
    const json& t = doc.at("task");
    TaskCfg tc;
    tc.height = get_checked<int>(t, "height", 16, origin);
    tc.width = get_checked<int>(t, "width", 16, origin);
    tc.t_len = get_checked<int>(t, "t_len", 40, origin);
    tc.no_lateral = get_checked<bool>(t, "no_lateral", false, origin);
    tc.augment_rotation = get_checked<bool>(t, "augment_rotation", true, origin);
    if (t.contains("rotation_range")) {
      const auto r = t.at("rotation_range");
      if (!r.is_array() || r.size() != 2)
        fail(origin, "task.rotation_range must be [lo, hi] degrees");
      tc.rotation_range = {r[0].get<double>(), r[1].get<double>()};
    }
    if (!t.contains("groups") || !t.at("groups").is_array() || t.at("groups").empty())
      fail(origin, "task.groups must be a nonempty array of [name, classes] pairs");
    for (const auto& g : t.at("groups")) {
      if (!g.is_array() || g.size() != 2 || !g[0].is_string() || !g[1].is_number_integer())
        fail(origin, "task.groups entries must be [name, classes] pairs");
      tc.groups.push_back({g[0].get<std::string>(), g[1].get<int>()});
    }
    if (tc.height < 1 || tc.width < 1) fail(origin, "task.height/width must be >= 1");
    cfg.task = std::move(tc);
  }
  if (!cfg.graph && !cfg.task) fail(origin, "one of 'graph' or 'task' is required");

  if (doc.contains("basis")) {
    const json& b = doc.at("basis");
    cfg.basis.kind = get_checked<std::string>(b, "kind", "raised_cosine", origin);
    cfg.basis.k = get_checked<int>(b, "K", 1, origin);
    cfg.basis.tau = get_checked<int>(b, "tau", 1, origin);
    if (cfg.basis.kind == "custom") {
      if (!b.contains("values")) fail(origin, "basis.kind=custom requires basis.values");
      try {
        cfg.basis.values = b.at("values").get<std::vector<std::vector<double>>>();
      } catch (const json::exception&) {
        fail(origin, "basis.values must be a rectangular array of numbers");
      }
    } else if (cfg.basis.kind != "raised_cosine") {
      fail(origin, "basis.kind must be raised_cosine|custom, got '" + cfg.basis.kind + "'");
    }
  }

  if (doc.contains("train")) {
    const json& t = doc.at("train");
    cfg.train.learning_rate = get_checked<double>(t, "lr", 0.05, origin);
    cfg.train.epochs = get_checked<int>(t, "epochs", 1, origin);
    if (t.contains("neg_phase"))
      cfg.train.neg_phase = parse_neg_phase(t.at("neg_phase").get<std::string>(), origin);
    if (t.contains("gibbs")) {
      const json& g = t.at("gibbs");
      cfg.train.gibbs.n_samples = get_checked<int>(g, "samples", 2000, origin);
      cfg.train.gibbs.burn_in = get_checked<int>(g, "burn_in", 200, origin);
      cfg.train.gibbs.thin = get_checked<int>(g, "thin", 1, origin);
      if (cfg.train.gibbs.n_samples < 1 || cfg.train.gibbs.burn_in < 0 ||
          cfg.train.gibbs.thin < 1)
        fail(origin, "train.gibbs needs samples >= 1, burn_in >= 0, thin >= 1");
    }
    if (t.contains("init_theta_v_range")) {
      const auto r = t.at("init_theta_v_range");
      if (!r.is_array() || r.size() != 2) fail(origin, "init_theta_v_range must be [lo, hi]");
      cfg.train.init_theta_v_min = r[0].get<double>();
      cfg.train.init_theta_v_max = r[1].get<double>();
    }
    if (t.contains("init_u_range")) {
      const auto r = t.at("init_u_range");
      if (!r.is_array() || r.size() != 2) fail(origin, "init_u_range must be [lo, hi]");
      cfg.train.init_u_min = r[0].get<double>();
      cfg.train.init_u_max = r[1].get<double>();
    }
    if (t.contains("prior")) cfg.train.prior = parse_prior(t.at("prior"), origin);
    cfg.train.snapshot_stride = get_checked<int>(t, "snapshot_stride", 10, origin);
    cfg.train.snapshot_burn_in = get_checked<double>(t, "snapshot_burn_in", 0.1, origin);
    cfg.train.metrics_stride = get_checked<int>(t, "metrics_stride", 1, origin);
    if (!(cfg.train.learning_rate >= 0.0)) fail(origin, "train.lr must be >= 0");
    if (cfg.train.epochs < 1) fail(origin, "train.epochs must be >= 1");
    if (cfg.train.snapshot_stride < 1) fail(origin, "train.snapshot_stride must be >= 1");
    if (cfg.train.snapshot_burn_in < 0.0 || cfg.train.snapshot_burn_in >= 1.0)
      fail(origin, "train.snapshot_burn_in must be in [0, 1)");
  }
  cfg.train.seed = cfg.seed;

  if (doc.contains("data")) {
    const json& d = doc.at("data");
    cfg.data.train_series =
        get_checked<std::vector<std::string>>(d, "train_series", {}, origin);
    cfg.data.test_series = get_checked<std::vector<std::string>>(d, "test_series", {}, origin);
    cfg.data.train_images = get_checked<std::string>(d, "train_images", "", origin);
    cfg.data.test_images = get_checked<std::string>(d, "test_images", "", origin);
    cfg.data.checkpoint = get_checked<std::string>(d, "checkpoint", "", origin);
  }

  if (doc.contains("sample")) {
    const json& s = doc.at("sample");
    cfg.sample.t_len = get_checked<int>(s, "T", 100, origin);
    cfg.sample.n_sequences = get_checked<int>(s, "n_sequences", 1, origin);
    if (cfg.sample.t_len < 0 || cfg.sample.n_sequences < 0)
      fail(origin, "sample.T and sample.n_sequences must be >= 0");
  }

  try {
    AlphabetSpec check(cfg.alphabet_c);
    (void)check;
  } catch (const std::exception& e) {
    fail(origin, e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

BasisBank make_bank(const BasisCfg& cfg) {
  if (cfg.kind == "custom") return BasisBank::custom(cfg.values);
  return BasisBank::raised_cosine(cfg.k, cfg.tau);
}

TwoLayerSpec make_task_spec(const TaskCfg& cfg) {
  TwoLayerSpec spec;
  spec.n_inputs = cfg.height * cfg.width;
  spec.groups = cfg.groups;
  spec.t_len = cfg.t_len;
  spec.lateral = !cfg.no_lateral;
  return spec;
}

Model build_model(const ExperimentConfig& cfg) {
  AlphabetSpec alphabet(cfg.alphabet_c);
  BasisBank bank = make_bank(cfg.basis);
  if (cfg.graph) {
    try {
      return Model(alphabet, std::move(bank),
                   CausalGraph(cfg.graph->n_units, cfg.graph->causal_edges),
                   LateralGraph(cfg.graph->n_units, cfg.graph->lateral_edges));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("graph: ") + e.what());
    }
  }
  const TwoLayerSpec spec = make_task_spec(*cfg.task);
  if (cfg.alphabet_c != 2)
    throw ConfigError("task mode uses spike trains; alphabet.C must be 2");
  auto [causal, lateral] = build_two_layer_graphs(spec);
  return Model(alphabet, std::move(bank), std::move(causal), std::move(lateral));
}

}  // namespace dynef

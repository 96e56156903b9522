#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dynef/learning.hpp"
#include "dynef/model.hpp"
#include "dynef/tasks.hpp"

namespace dynef {

struct GraphSpecCfg {
  int n_units = 0;
  std::vector<Edge> causal_edges;
  std::vector<Edge> lateral_edges;
};

struct BasisCfg {
  std::string kind = "raised_cosine";
  int k = 1;
  int tau = 1;
  std::vector<std::vector<double>> values;  // custom banks only
};

struct TaskCfg {
  int height = 16;
  int width = 16;
  std::vector<OutputGroup> groups;
  int t_len = 40;
  bool no_lateral = false;
  bool augment_rotation = true;
  std::pair<double, double> rotation_range{30.0, 150.0};
};

struct DataCfg {
  std::vector<std::string> train_series;
  std::vector<std::string> test_series;
  std::string train_images;
  std::string test_images;
  std::string checkpoint;
};

struct SampleCfg {
  int t_len = 100;
  int n_sequences = 1;
};

/// One experiment, one JSON file. Exactly one of `graph` or `task` defines
/// the model topology.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "run-out";
  int alphabet_c = 2;
  std::optional<GraphSpecCfg> graph;
  std::optional<TaskCfg> task;
  BasisCfg basis;
  TrainConfig train;
  DataCfg data;
  SampleCfg sample;
  std::string source_text;  // raw file content, for the manifest hash
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<text>");

BasisBank make_bank(const BasisCfg& cfg);
TwoLayerSpec make_task_spec(const TaskCfg& cfg);

/// Model with zero parameters from the config's topology (graph or task).
Model build_model(const ExperimentConfig& cfg);

}  // namespace dynef

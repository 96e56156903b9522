#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dynef/graph.hpp"
#include "dynef/model.hpp"

namespace dynef {

struct ImageExample {
  enum class Orientation : std::uint8_t { vertical, rotated };

  int height = 0;
  int width = 0;
  std::vector<double> pixels;  // row-major gray values in [0, 1]
  int digit_label = 0;
  Orientation orientation = Orientation::vertical;
};

struct OutputGroup {
  std::string name;
  int n_classes = 2;
};

/// Two-layer SNN topology: one input neuron per pixel, one output group per
/// task. Units are numbered inputs first, then the groups in order.
struct TwoLayerSpec {
  int n_inputs = 0;
  std::vector<OutputGroup> groups;
  int t_len = 0;
  bool lateral = true;

  int n_outputs() const {
    int n = 0;
    for (const auto& g : groups) n += g.n_classes;
    return n;
  }
  int n_units() const { return n_inputs + n_outputs(); }
  /// unit id of the first neuron of group g
  int group_base(int g) const {
    int base = n_inputs;
    for (int q = 0; q < g; ++q) base += groups[q].n_classes;
    return base;
  }
};

/// Causal edges from every input to every output plus a self-loop on every
/// output; lateral cliques within each output group (none when
/// spec.lateral is false).
std::pair<CausalGraph, LateralGraph> build_two_layer_graphs(const TwoLayerSpec& spec);

/// Rate-coding rule: spike probability 0.5 * pixel, capped at 0.5.
inline double spike_probability(double pixel) { return 0.5 * pixel; }

/// i.i.d. Bernoulli spike trains, one unit per pixel. Deterministic given
/// seed.
TimeSeries rate_encode(std::span<const double> pixels, int t_len, std::uint64_t seed);

/// Desired output trains of one group: the neuron for `cls` spikes at
/// t = 1, 5, 9, ... (one spike every three non-spike samples); the others
/// stay silent.
TimeSeries label_encode(int cls, int group_size, int t_len);

/// Per-group argmax of output spike counts; ties go to the lowest neuron
/// index. counts covers all output units of the groups, in order.
std::vector<int> rate_decode(std::span<const long long> counts,
                             std::span<const OutputGroup> groups);

/// Class index this example carries for a given group: groups named
/// "orientation" read the orientation flag, everything else the digit label.
int class_of(const ImageExample& ex, const OutputGroup& group);

/// Full training series for one example: inputs rate-encoded with the given
/// seed, output groups label-encoded.
TimeSeries encode_example(const ImageExample& ex, const TwoLayerSpec& spec, std::uint64_t seed);

/// Clamps the input neurons to the encoded trains, samples the output
/// neurons forward in time, counts their spikes and rate-decodes. Returns
/// one predicted class per group. Deterministic given seed.
std::vector<int> classify(const Model& m, const TimeSeries& input_trains,
                          const TwoLayerSpec& spec, std::uint64_t seed);

/// CSV ingestion: each row holds height*width pixel values in [0, 1]
/// followed by an integer digit label; a leading header line is skipped.
/// Parse failures report the offending line.
std::vector<ImageExample> load_dataset(const std::string& path, int height, int width);

/// Appends a rotated copy of every example (angle uniform in degree_range,
/// bilinear resampling, clipped back to [0, 1]) labeled `rotated`, doubling
/// the dataset. Deterministic given seed.
std::vector<ImageExample> augment_rotations(std::vector<ImageExample> examples,
                                            std::pair<double, double> degree_range,
                                            std::uint64_t seed);

std::vector<double> rotate_bilinear(std::span<const double> pixels, int height, int width,
                                    double degrees);

}  // namespace dynef

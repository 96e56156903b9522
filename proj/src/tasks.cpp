#include "dynef/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "dynef/common.hpp"
#include "dynef/rng.hpp"

namespace dynef {

std::pair<CausalGraph, LateralGraph> build_two_layer_graphs(const TwoLayerSpec& spec) {
  if (spec.n_inputs < 1) throw std::invalid_argument("two-layer spec needs n_inputs >= 1");
  for (const auto& g : spec.groups)
    if (g.n_classes < 2)
      throw std::invalid_argument("output group '" + g.name + "' needs at least 2 classes");
  const int n = spec.n_units();
  std::vector<Edge> causal;
  std::vector<Edge> lateral;
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    const int base = spec.group_base(static_cast<int>(g));
    for (int q = 0; q < spec.groups[g].n_classes; ++q) {
      const UnitId out = base + q;
      for (UnitId in = 0; in < spec.n_inputs; ++in) causal.emplace_back(in, out);
      causal.emplace_back(out, out);  // self-loop
      if (spec.lateral) {
        for (int p = q + 1; p < spec.groups[g].n_classes; ++p)
          lateral.emplace_back(out, base + p);
      }
    }
  }
  return {CausalGraph(n, std::move(causal)), LateralGraph(n, std::move(lateral))};
}

TimeSeries rate_encode(std::span<const double> pixels, int t_len, std::uint64_t seed) {
  for (double p : pixels)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("pixel value " + std::to_string(p) + " outside [0, 1]");
  TimeSeries out(static_cast<int>(pixels.size()), t_len);
  Rng rng(seed);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const double q = spike_probability(pixels[i]);
    for (int t = 1; t <= t_len; ++t)
      out.set(static_cast<int>(i), t, rng.bernoulli(q) ? 1 : 0);
  }
  return out;
}

TimeSeries label_encode(int cls, int group_size, int t_len) {
  if (cls < 0 || cls >= group_size)
    throw std::out_of_range("class " + std::to_string(cls) + " outside group of size " +
                            std::to_string(group_size));
  TimeSeries out(group_size, t_len);
  for (int t = 1; t <= t_len; ++t)
    if ((t - 1) % 4 == 0) out.set(cls, t, 1);
  return out;
}

std::vector<int> rate_decode(std::span<const long long> counts,
                             std::span<const OutputGroup> groups) {
  std::vector<int> predicted;
  predicted.reserve(groups.size());
  std::size_t base = 0;
  for (const auto& g : groups) {
    if (base + g.n_classes > counts.size())
      throw std::invalid_argument("spike counts shorter than the output groups");
    int best = 0;
    for (int q = 1; q < g.n_classes; ++q)
      if (counts[base + q] > counts[base + best]) best = q;
    predicted.push_back(best);
    base += g.n_classes;
  }
  return predicted;
}

int class_of(const ImageExample& ex, const OutputGroup& group) {
  if (group.name == "orientation")
    return ex.orientation == ImageExample::Orientation::vertical ? 0 : 1;
  return ex.digit_label;
}

TimeSeries encode_example(const ImageExample& ex, const TwoLayerSpec& spec, std::uint64_t seed) {
  if (static_cast<int>(ex.pixels.size()) != spec.n_inputs)
    throw std::invalid_argument("example pixel count does not match the input layer");
  TimeSeries full(spec.n_units(), spec.t_len);
  const TimeSeries inputs = rate_encode(ex.pixels, spec.t_len, seed);
  for (int i = 0; i < spec.n_inputs; ++i)
    for (int t = 1; t <= spec.t_len; ++t) full.set(i, t, inputs.at(i, t));
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    const int cls = class_of(ex, spec.groups[g]);
    const int base = spec.group_base(static_cast<int>(g));
    const TimeSeries trains = label_encode(cls, spec.groups[g].n_classes, spec.t_len);
    for (int q = 0; q < spec.groups[g].n_classes; ++q)
      for (int t = 1; t <= spec.t_len; ++t) full.set(base + q, t, trains.at(q, t));
  }
  return full;
}

std::vector<int> classify(const Model& m, const TimeSeries& input_trains,
                          const TwoLayerSpec& spec, std::uint64_t seed) {
  if (m.n_units() != spec.n_units())
    throw std::invalid_argument("model does not match the two-layer spec");
  if (input_trains.n_units != spec.n_inputs)
    throw std::invalid_argument("input trains do not match the input layer");
  const int t_len = input_trains.t_len;
  TimeSeries clamped(spec.n_units(), t_len);
  for (int i = 0; i < spec.n_inputs; ++i)
    for (int t = 1; t <= t_len; ++t) clamped.set(i, t, input_trains.at(i, t));
  std::vector<std::uint8_t> mask(spec.n_units(), 0);
  for (int i = 0; i < spec.n_inputs; ++i) mask[i] = 1;
  const TimeSeries sampled = sample_clamped(m, t_len, seed, mask, clamped);
  std::vector<long long> counts(spec.n_outputs(), 0);
  for (int q = 0; q < spec.n_outputs(); ++q) {
    const int unit = spec.n_inputs + q;
    for (int t = 1; t <= t_len; ++t)
      if (sampled.at(unit, t) != 0) ++counts[q];
  }
  return rate_decode(counts, spec.groups);
}

std::vector<ImageExample> load_dataset(const std::string& path, int height, int width) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);
  const std::size_t n_pixels = static_cast<std::size_t>(height) * width;
  std::vector<ImageExample> examples;
  std::string line;
  int line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (first) {
      first = false;
      char* end = nullptr;
      std::strtod(fields.front().c_str(), &end);
      if (end == fields.front().c_str()) continue;  // header line
    }
    if (fields.size() != n_pixels + 1)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(n_pixels) + " pixels + label, got " +
                        std::to_string(fields.size()) + " fields");
    ImageExample ex;
    ex.height = height;
    ex.width = width;
    ex.pixels.reserve(n_pixels);
    for (std::size_t q = 0; q < n_pixels; ++q) {
      char* end = nullptr;
      const double v = std::strtod(fields[q].c_str(), &end);
      if (end == fields[q].c_str() || !(v >= 0.0 && v <= 1.0))
        throw ConfigError(path + ":" + std::to_string(line_no) + ": bad pixel value '" +
                          fields[q] + "' in column " + std::to_string(q + 1));
      ex.pixels.push_back(v);
    }
    char* end = nullptr;
    const long label = std::strtol(fields.back().c_str(), &end, 10);
    if (end == fields.back().c_str() || label < 0)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": bad label '" + fields.back() +
                        "'");
    ex.digit_label = static_cast<int>(label);
    examples.push_back(std::move(ex));
  }
  if (examples.empty())
    std::cerr << "warning: dataset file " << path << " contains no examples\n";
  return examples;
}

std::vector<double> rotate_bilinear(std::span<const double> pixels, int height, int width,
                                    double degrees) {
  const double rad = degrees * 3.14159265358979323846 / 180.0;
  const double cy = (height - 1) / 2.0;
  const double cx = (width - 1) / 2.0;
  const double c = std::cos(rad), s = std::sin(rad);
  std::vector<double> out(pixels.size(), 0.0);
  for (int r = 0; r < height; ++r) {
    for (int q = 0; q < width; ++q) {
      // inverse map: where does the output pixel come from
      const double sy = c * (r - cy) + s * (q - cx) + cy;
      const double sx = -s * (r - cy) + c * (q - cx) + cx;
      const int y0 = static_cast<int>(std::floor(sy));
      const int x0 = static_cast<int>(std::floor(sx));
      const double fy = sy - y0, fx = sx - x0;
      double acc = 0.0;
      for (int dy = 0; dy <= 1; ++dy) {
        for (int dx = 0; dx <= 1; ++dx) {
          const int yy = y0 + dy, xx = x0 + dx;
          if (yy < 0 || yy >= height || xx < 0 || xx >= width) continue;
          const double w = (dy ? fy : 1.0 - fy) * (dx ? fx : 1.0 - fx);
          acc += w * pixels[static_cast<std::size_t>(yy) * width + xx];
        }
      }
      out[static_cast<std::size_t>(r) * width + q] = std::min(1.0, std::max(0.0, acc));
    }
  }
  return out;
}

std::vector<ImageExample> augment_rotations(std::vector<ImageExample> examples,
                                            std::pair<double, double> degree_range,
                                            std::uint64_t seed) {
  const std::size_t n = examples.size();
  examples.reserve(2 * n);
  for (std::size_t q = 0; q < n; ++q) {
    Rng rng(derive_seed(seed, "augment", q));
    ImageExample rotated = examples[q];
    rotated.pixels = rotate_bilinear(examples[q].pixels, examples[q].height, examples[q].width,
                                     rng.uniform(degree_range.first, degree_range.second));
    rotated.orientation = ImageExample::Orientation::rotated;
    examples.push_back(std::move(rotated));
  }
  return examples;
}

}  // namespace dynef

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "dynef/learning.hpp"
#include "dynef/tasks.hpp"
#include "oracles.hpp"

using namespace dynef;

namespace {

std::set<Edge> edge_set(const std::vector<Edge>& edges) { return {edges.begin(), edges.end()}; }

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("two-layer graph construction: single digit group") {
  TwoLayerSpec spec;
  spec.n_inputs = 2;
  spec.groups = {{"digit", 2}};
  spec.t_len = 8;
  const auto [causal, lateral] = build_two_layer_graphs(spec);
  CHECK(edge_set(causal.edges()) ==
        std::set<Edge>{{0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 2}, {3, 3}});
  CHECK(edge_set(lateral.edges()) == std::set<Edge>{{2, 3}});
}

TEST_CASE("two-layer graph construction: one lateral clique per group") {
  TwoLayerSpec spec;
  spec.n_inputs = 4;
  spec.groups = {{"digit", 2}, {"orientation", 2}};
  const auto [causal, lateral] = build_two_layer_graphs(spec);
  CHECK(lateral.n_edges() == 2);
  CHECK(edge_set(lateral.edges()) == std::set<Edge>{{4, 5}, {6, 7}});
  // no input participates in a lateral edge, no cross-group edges
  const ReachableSets reach = reachable_sets(lateral);
  CHECK(reach.components[reach.component_of[4]] == std::vector<UnitId>{4, 5});
  CHECK(reach.components[reach.component_of[6]] == std::vector<UnitId>{6, 7});
  for (UnitId i = 0; i < 4; ++i) CHECK(reach.reachable[i].empty());

  // every input feeds every output, outputs have self-loops, inputs do not
  for (UnitId out = 4; out < 8; ++out) {
    const auto p = causal.parents(out);
    CHECK(p.size() == 5);  // 4 inputs + self
  }
  for (UnitId in = 0; in < 4; ++in) CHECK(causal.parents(in).empty());
}

TEST_CASE("two-layer graph without lateral connections") {
  TwoLayerSpec spec;
  spec.n_inputs = 3;
  spec.groups = {{"digit", 2}, {"orientation", 2}};
  spec.lateral = false;
  const auto [causal, lateral] = build_two_layer_graphs(spec);
  CHECK(lateral.n_edges() == 0);
  CHECK(causal.n_edges() == 4 * 3 + 4);
}

TEST_CASE("rate encoding") {
  CHECK(spike_probability(0.4) == doctest::Approx(0.2));
  CHECK(spike_probability(1.0) == doctest::Approx(0.5));

  const std::vector<double> dark = {0.0, 0.0};
  const TimeSeries silent = rate_encode(dark, 50, 1);
  for (std::uint8_t s : silent.symbols) CHECK(s == 0);

  const std::vector<double> bright = {1.0};
  const TimeSeries full = rate_encode(bright, 100000, 2);
  double rate = 0.0;
  for (std::uint8_t s : full.symbols) rate += s;
  rate /= static_cast<double>(full.symbols.size());
  CHECK(std::abs(rate - 0.5) < 0.005);

  // empirical rates concentrate around 0.5 * p (3 sigma)
  for (double p : {0.2, 0.4, 0.9}) {
    const int t_len = 20000;
    const TimeSeries x = rate_encode(std::vector<double>{p}, t_len, 7);
    double mean = 0.0;
    for (std::uint8_t s : x.symbols) mean += s;
    mean /= t_len;
    const double q = 0.5 * p;
    CHECK(std::abs(mean - q) < 3.0 * std::sqrt(q * (1 - q) / t_len));
  }

  CHECK_THROWS_AS(rate_encode(std::vector<double>{1.2}, 10, 3), std::invalid_argument);
  CHECK(rate_encode(std::vector<double>{0.5}, 10, 4).symbols ==
        rate_encode(std::vector<double>{0.5}, 10, 4).symbols);
}

TEST_CASE("label encoding: one spike every three non-spike samples") {
  const auto row_vec = [](const TimeSeries& x, int unit) {
    return std::vector<std::uint8_t>(x.row(unit).begin(), x.row(unit).end());
  };
  const TimeSeries x = label_encode(0, 2, 8);
  CHECK(row_vec(x, 0) == std::vector<std::uint8_t>{1, 0, 0, 0, 1, 0, 0, 0});
  for (std::uint8_t s : x.row(1)) CHECK(s == 0);

  const TimeSeries truncated = label_encode(1, 3, 3);
  CHECK(row_vec(truncated, 1) == std::vector<std::uint8_t>{1, 0, 0});

  const TimeSeries empty = label_encode(0, 2, 0);
  CHECK(empty.t_len == 0);

  CHECK_THROWS_AS(label_encode(2, 2, 8), std::out_of_range);
}

TEST_CASE("rate decoding and the label round trip") {
  const std::vector<OutputGroup> one_group = {{"digit", 2}};
  CHECK(rate_decode(std::vector<long long>{5, 2}, one_group) == std::vector<int>{0});
  CHECK(rate_decode(std::vector<long long>{3, 3}, one_group) == std::vector<int>{0});  // tie

  const std::vector<OutputGroup> two_groups = {{"digit", 2}, {"orientation", 2}};
  CHECK(rate_decode(std::vector<long long>{1, 4, 7, 0}, two_groups) ==
        std::vector<int>{1, 0});

  // decode inverts encode for any T >= 1: the correct neuron has ceil(T/4)
  // spikes, all others zero
  for (int t_len : {1, 3, 4, 8, 13}) {
    for (int cls : {0, 1, 2}) {
      const TimeSeries x = label_encode(cls, 3, t_len);
      std::vector<long long> counts(3, 0);
      for (int q = 0; q < 3; ++q)
        for (int t = 1; t <= t_len; ++t) counts[q] += x.at(q, t);
      CHECK(counts[cls] == (t_len + 3) / 4);
      const std::vector<OutputGroup> group = {{"g", 3}};
      CHECK(rate_decode(counts, group) == std::vector<int>{cls});
    }
  }
}

TEST_CASE("classify: saturated output wins for any input") {
  TwoLayerSpec spec;
  spec.n_inputs = 1;
  spec.groups = {{"digit", 2}};
  spec.t_len = 16;
  const auto [causal, lateral] = build_two_layer_graphs(spec);
  Model m(AlphabetSpec(2), BasisBank::custom({{1.0}}), causal, lateral);
  m.params.theta = {0.0, 40.0, -40.0};  // output 0 saturated on, output 1 off
  const TimeSeries inputs = rate_encode(std::vector<double>{0.6}, spec.t_len, 5);
  CHECK(classify(m, inputs, spec, 8) == std::vector<int>{0});
  CHECK(classify(m, inputs, spec, 9) == std::vector<int>{0});
}

TEST_CASE("classify: strong lateral inhibition allows one winner per step") {
  TwoLayerSpec spec;
  spec.n_inputs = 1;
  spec.groups = {{"digit", 2}};
  spec.t_len = 400;
  const auto [causal, lateral] = build_two_layer_graphs(spec);
  Model m(AlphabetSpec(2), BasisBank::custom({{1.0}}), causal, lateral);
  m.params.theta = {0.0, 3.0, 3.0};
  m.params.u = {-1e9};
  TimeSeries clamped(3, spec.t_len);
  std::vector<std::uint8_t> mask = {1, 0, 0};
  const TimeSeries sampled = sample_clamped(m, spec.t_len, 4, mask, clamped);
  for (int t = 1; t <= spec.t_len; ++t) CHECK(sampled.at(1, t) + sampled.at(2, t) <= 1);
}

TEST_CASE("classify is deterministic given the seed") {
  TwoLayerSpec spec;
  spec.n_inputs = 2;
  spec.groups = {{"digit", 2}};
  spec.t_len = 12;
  const auto [causal, lateral] = build_two_layer_graphs(spec);
  Model m(AlphabetSpec(2), BasisBank::custom({{1.0}}), causal, lateral);
  Rng rng(66);
  for (double& w : m.params.theta) w = rng.uniform(-1.0, 1.0);
  for (double& w : m.params.v) w = rng.uniform(-1.0, 1.0);
  for (double& w : m.params.u) w = rng.uniform(-2.0, 2.0);
  const TimeSeries inputs = rate_encode(std::vector<double>{0.7, 0.2}, spec.t_len, 10);
  CHECK(classify(m, inputs, spec, 55) == classify(m, inputs, spec, 55));
}

TEST_CASE("end-to-end: linearly separable two-pixel task trains to high accuracy") {
  TwoLayerSpec spec;
  spec.n_inputs = 2;
  spec.groups = {{"digit", 2}};
  spec.t_len = 24;
  const auto [causal, lateral] = build_two_layer_graphs(spec);
  Model m(AlphabetSpec(2), BasisBank::custom({{1.0, 0.5}}), causal, lateral);

  // class 0 lights pixel 0, class 1 lights pixel 1
  std::vector<ImageExample> examples;
  Rng noise(21);
  for (int q = 0; q < 24; ++q) {
    ImageExample ex;
    ex.height = 1;
    ex.width = 2;
    ex.digit_label = q % 2;
    const double hot = noise.uniform(0.85, 1.0);
    const double cold = noise.uniform(0.0, 0.1);
    ex.pixels = ex.digit_label == 0 ? std::vector<double>{hot, cold}
                                    : std::vector<double>{cold, hot};
    examples.push_back(ex);
  }
  std::vector<TimeSeries> train;
  for (std::size_t q = 0; q < examples.size(); ++q)
    train.push_back(encode_example(examples[q], spec, derive_seed(3, "encode", q)));

  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 60;
  cfg.seed = 7;
  cfg.metrics_stride = 0;
  train_ml(m, train, nullptr, cfg);

  int hits = 0;
  for (std::size_t q = 0; q < examples.size(); ++q) {
    const TimeSeries inputs =
        rate_encode(examples[q].pixels, spec.t_len, derive_seed(4, "encode-eval", q));
    const auto pred = classify(m, inputs, spec, derive_seed(4, "classify", q));
    hits += pred[0] == examples[q].digit_label;
  }
  CHECK(static_cast<double>(hits) / examples.size() >= 0.95);
}

TEST_CASE("dataset loading and rotation augmentation") {
  const auto path = temp_file("dynef_test_dataset.csv");
  {
    std::ofstream out(path);
    out << "p0,p1,p2,p3,label\n";
    out << "0.0,1.0,0.25,0.5,1\n";
    out << "1.0,0.0,0.75,0.5,0\n";
  }
  const auto examples = load_dataset(path.string(), 2, 2);
  REQUIRE(examples.size() == 2);
  CHECK(examples[0].pixels == std::vector<double>{0.0, 1.0, 0.25, 0.5});
  CHECK(examples[0].digit_label == 1);
  CHECK(examples[0].orientation == ImageExample::Orientation::vertical);
  CHECK(examples[1].digit_label == 0);

  const auto augmented = augment_rotations(examples, {30.0, 150.0}, 17);
  REQUIRE(augmented.size() == 4);
  CHECK(augmented[2].orientation == ImageExample::Orientation::rotated);
  CHECK(augmented[3].orientation == ImageExample::Orientation::rotated);
  CHECK(augmented[2].digit_label == 1);  // digit label survives rotation
  for (double p : augmented[2].pixels) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
  // deterministic given the seed
  const auto again = augment_rotations(examples, {30.0, 150.0}, 17);
  CHECK(again[2].pixels == augmented[2].pixels);

  std::filesystem::remove(path);
}

TEST_CASE("dataset loader diagnostics") {
  const auto empty_path = temp_file("dynef_test_empty.csv");
  { std::ofstream out(empty_path); }
  CHECK(load_dataset(empty_path.string(), 2, 2).empty());
  std::filesystem::remove(empty_path);

  const auto bad_path = temp_file("dynef_test_bad.csv");
  {
    std::ofstream out(bad_path);
    out << "0.0,1.0,0.25,0.5,1\n";
    out << "0.0,2.5,0.25,0.5,1\n";  // pixel out of range
  }
  CHECK_THROWS_WITH_AS(load_dataset(bad_path.string(), 2, 2),
                       doctest::Contains(":2:"), ConfigError);
  std::filesystem::remove(bad_path);

  const auto short_path = temp_file("dynef_test_short.csv");
  {
    std::ofstream out(short_path);
    out << "0.0,1.0,1\n";
  }
  CHECK_THROWS_AS(load_dataset(short_path.string(), 2, 2), ConfigError);
  std::filesystem::remove(short_path);

  CHECK_THROWS_AS(load_dataset("/nonexistent/nope.csv", 2, 2), ConfigError);
}

TEST_CASE("bilinear rotation basics") {
  // center pixel of an odd grid is a fixed point
  std::vector<double> img(9, 0.0);
  img[4] = 1.0;
  const auto rot = rotate_bilinear(img, 3, 3, 73.0);
  CHECK(rot[4] == doctest::Approx(1.0).epsilon(1e-9));

  // rotating by 0 degrees is the identity
  Rng rng(88);
  std::vector<double> noise(16);
  for (double& v : noise) v = rng.uniform();
  const auto same = rotate_bilinear(noise, 4, 4, 0.0);
  for (std::size_t q = 0; q < noise.size(); ++q)
    CHECK(same[q] == doctest::Approx(noise[q]).epsilon(1e-12));
}

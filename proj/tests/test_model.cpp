#include <doctest.h>

#include <cmath>

#include "dynef/inference.hpp"
#include "dynef/model.hpp"
#include "oracles.hpp"

using namespace dynef;

namespace {

Model binary_units(int n, std::vector<Edge> causal = {}, std::vector<Edge> lateral = {},
                   std::vector<std::vector<double>> bank = {{1.0}}) {
  return Model(AlphabetSpec(2), BasisBank::custom(std::move(bank)), CausalGraph(n, causal),
               LateralGraph(n, lateral));
}

}  // namespace

TEST_CASE("sufficient statistics are the one-hot encoding without symbol 0") {
  const AlphabetSpec binary(2);
  CHECK(sufficient_stats(1, binary) == std::vector<double>{1.0});
  CHECK(sufficient_stats(0, binary) == std::vector<double>{0.0});
  const AlphabetSpec quaternary(4);
  CHECK(sufficient_stats(0, quaternary) == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(sufficient_stats(2, quaternary) == std::vector<double>{0.0, 1.0, 0.0});
  CHECK_THROWS_AS(sufficient_stats(4, quaternary), std::out_of_range);
  CHECK_THROWS_AS(AlphabetSpec(1), std::invalid_argument);
}

TEST_CASE("filtered traces: unit impulse bank reproduces the signal") {
  const AlphabetSpec binary(2);
  const BasisBank bank = BasisBank::custom({{1.0}});
  TimeSeries x(1, 3);
  x.set(0, 1, 1);
  x.set(0, 2, 0);
  x.set(0, 3, 1);
  CHECK(filtered_traces(x, 1, bank, binary) == std::vector<double>{1.0});
  CHECK(filtered_traces(x, 2, bank, binary) == std::vector<double>{0.0});
  CHECK(filtered_traces(x, 3, bank, binary) == std::vector<double>{1.0});
}

TEST_CASE("filtered traces: all-zero series gives zero traces") {
  const TimeSeries x(3, 4);
  const auto alpha =
      filtered_traces(x, 4, BasisBank::custom({{0.3, 0.6}, {1.0, 0.0}}), AlphabetSpec(2));
  for (double v : alpha) CHECK(v == 0.0);
}

TEST_CASE("filtered traces: two-tap convolution by hand") {
  const AlphabetSpec binary(2);
  const BasisBank bank = BasisBank::custom({{0.5, 0.25}});
  TimeSeries x(1, 2);
  x.set(0, 1, 1);
  x.set(0, 2, 1);
  CHECK(filtered_traces(x, 2, bank, binary) == std::vector<double>{0.75});
  // at t=1 the t-1 slot is zero history
  CHECK(filtered_traces(x, 1, bank, binary) == std::vector<double>{0.5});
}

TEST_CASE("trace state matches fresh computation bit for bit") {
  Rng rng(42);
  const AlphabetSpec alphabet(3);
  const BasisBank bank = BasisBank::custom({{0.37, 0.21, 0.8}, {1.0, 0.05, 0.0}});
  const TimeSeries x = oracles::random_series(rng, 4, 12, 3);
  TraceState ts(4, alphabet, bank);
  std::vector<std::uint8_t> col(4);
  for (int t = 1; t <= x.t_len; ++t) {
    for (int i = 0; i < 4; ++i) col[i] = x.at(i, t);
    ts.push(col);
    const auto fresh = filtered_traces(x, t, bank, alphabet);
    const auto incr = ts.alpha();
    REQUIRE(fresh.size() == incr.size());
    for (std::size_t q = 0; q < fresh.size(); ++q) CHECK(fresh[q] == incr[q]);
  }
}

TEST_CASE("membrane potentials reduce to theta without causal input") {
  Model no_edges = binary_units(3);
  no_edges.params.theta = {0.3, -0.7, 2.0};
  const std::vector<double> alpha(no_edges.alpha_size(), 0.5);
  CHECK(membrane_potentials(no_edges, alpha) == no_edges.params.theta);

  Model zero_v = binary_units(3, {{0, 1}, {1, 2}, {2, 2}});
  zero_v.params.theta = {0.3, -0.7, 2.0};
  const std::vector<double> alpha2(zero_v.alpha_size(), 0.5);
  CHECK(membrane_potentials(zero_v, alpha2) == zero_v.params.theta);
}

TEST_CASE("membrane potential scalar example") {
  Model m = binary_units(2, {{0, 1}});
  m.params.theta = {0.0, 0.1};
  m.params.v = {2.0};
  const std::vector<double> alpha = {0.75, 0.0};  // alpha_{0,1}, alpha_{1,1}
  const auto r = membrane_potentials(m, alpha);
  CHECK(r[1] == doctest::Approx(1.6).epsilon(1e-15));
}

TEST_CASE("step energy") {
  Model m = binary_units(2, {}, {{0, 1}});
  m.params.u = {std::log(2.0)};
  const std::vector<double> r = {0.0, 0.0};

  CHECK(step_energy(m, std::vector<std::uint8_t>{0, 0}, r) == 0.0);
  CHECK(step_energy(m, std::vector<std::uint8_t>{1, 1}, r) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));

  Model indep = binary_units(3);
  const std::vector<double> ri = {0.4, -1.0, 2.5};
  CHECK(step_energy(indep, std::vector<std::uint8_t>{1, 0, 1}, ri) ==
        doctest::Approx(0.4 + 2.5).epsilon(1e-15));
}

TEST_CASE("step log-prob on single units") {
  Model m = binary_units(1);
  std::vector<double> r = {0.0};
  CHECK(step_log_prob(m, std::vector<std::uint8_t>{0}, r) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(step_log_prob(m, std::vector<std::uint8_t>{1}, r) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-12));

  r = {std::log(3.0)};
  CHECK(step_log_prob(m, std::vector<std::uint8_t>{1}, r) ==
        doctest::Approx(std::log(0.75)).epsilon(1e-12));
  // binary marginal equals the logistic of the potential
  CHECK(std::exp(step_log_prob(m, std::vector<std::uint8_t>{1}, r)) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-r[0]))).epsilon(1e-12));
}

TEST_CASE("step log-prob on the ln2-coupled pair") {
  Model m = binary_units(2, {}, {{0, 1}});
  m.params.u = {std::log(2.0)};
  const std::vector<double> r = {0.0, 0.0};
  CHECK(std::exp(step_log_prob(m, std::vector<std::uint8_t>{1, 1}, r)) ==
        doctest::Approx(0.4).epsilon(1e-12));
  for (auto xs : {std::vector<std::uint8_t>{0, 0}, {0, 1}, {1, 0}})
    CHECK(std::exp(step_log_prob(m, xs, r)) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("step distribution normalizes and factorizes over components") {
  Rng rng(1234);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + rng.uniform_int(3);
    const int c = 2 + rng.uniform_int(2);
    const Model m = oracles::random_model(rng, n, c, 2, 2, trial % 2 == 0, 1.5);
    std::vector<double> r(static_cast<std::size_t>(n) * m.stat_dim());
    for (double& v : r) v = rng.uniform(-2.0, 2.0);

    const auto joint = oracles::joint_logprobs_from_r(m, r);
    double total = 0.0;
    TimeSeries col(n, 1);
    for (long long cfg = 0; cfg < static_cast<long long>(joint.size()); ++cfg) {
      for (int i = 0; i < n; ++i)
        col.set(i, 1, static_cast<std::uint8_t>(oracles::config_digit(cfg, i, c)));
      const double lp = step_log_prob(m, col.symbols, r);
      // factorized step probability equals the full-joint probability
      CHECK(lp == doctest::Approx(joint[cfg]).epsilon(1e-12));
      total += std::exp(lp);
    }
    // normalization over all configurations
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("toggling one component never moves another component's share") {
  Model m = binary_units(4, {}, {{0, 1}, {2, 3}});
  m.params.u = {0.7, -0.4};
  const std::vector<double> r = {0.2, -0.1, 0.5, 0.3};
  // the log-prob delta from flipping units 2,3 must not depend on units 0,1
  const auto lp = [&](std::vector<std::uint8_t> xs) { return step_log_prob(m, xs, r); };
  const double delta_under_00 = lp({0, 0, 1, 1}) - lp({0, 0, 0, 1});
  const double delta_under_11 = lp({1, 1, 1, 1}) - lp({1, 1, 0, 1});
  CHECK(delta_under_00 == doctest::Approx(delta_under_11).epsilon(1e-15));
}

TEST_CASE("sequence log-likelihood basics") {
  Model m = binary_units(1);
  CHECK(sequence_log_likelihood(m, TimeSeries(1, 0)) == 0.0);

  TimeSeries x(1, 7);
  for (int t = 1; t <= 7; ++t) x.set(0, t, t % 2);
  CHECK(sequence_log_likelihood(m, x) == doctest::Approx(7.0 * std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("sequence log-likelihood matches the brute-force chain rule") {
  Rng rng(999);
  for (int trial = 0; trial < 10; ++trial) {
    const int c = 2 + rng.uniform_int(2);
    const Model m = oracles::random_model(rng, 3, c, 2, 3, true, 1.0);
    const TimeSeries x = oracles::random_series(rng, 3, 5, c);
    CHECK(sequence_log_likelihood(m, x) ==
          doctest::Approx(oracles::sequence_loglik(m, x)).epsilon(1e-10));
  }
}

TEST_CASE("component too large raises with a tiny budget") {
  Model m = binary_units(4, {}, {{0, 1}, {1, 2}, {2, 3}});
  m.enum_budget = 8;  // component has 16 configurations
  const std::vector<double> r(4, 0.0);
  CHECK_THROWS_AS(step_log_prob(m, std::vector<std::uint8_t>{0, 0, 0, 0}, r),
                  ComponentTooLarge);
  CHECK_THROWS_AS(sequence_log_likelihood(m, TimeSeries(4, 2)), ComponentTooLarge);
}

TEST_CASE("sampling collapses under a huge negative bias") {
  Model m = binary_units(2);
  m.params.theta = {-1e9, -1e9};
  const TimeSeries x = sample_sequence(m, 100, 3);
  for (std::uint8_t s : x.symbols) CHECK(s == 0);
}

TEST_CASE("unbiased units sample at rate one half") {
  Model m = binary_units(1);
  const TimeSeries x = sample_sequence(m, 100000, 17);
  double mean = 0.0;
  for (std::uint8_t s : x.symbols) mean += s;
  mean /= static_cast<double>(x.symbols.size());
  CHECK(std::abs(mean - 0.5) < 0.01);
}

TEST_CASE("strong lateral inhibition never fires both units") {
  Model m = binary_units(2, {}, {{0, 1}});
  m.params.theta = {3.0, 3.0};
  m.params.u = {-1e9};
  const TimeSeries x = sample_sequence(m, 10000, 5);
  int both = 0, any = 0;
  for (int t = 1; t <= x.t_len; ++t) {
    if (x.at(0, t) && x.at(1, t)) ++both;
    if (x.at(0, t) || x.at(1, t)) ++any;
  }
  CHECK(both == 0);
  CHECK(any > 9000);  // one unit should win nearly every step
}

TEST_CASE("sampling is deterministic given the seed") {
  Rng rng(31);
  const Model m = oracles::random_model(rng, 3, 2, 1, 2, true, 0.8);
  const TimeSeries a = sample_sequence(m, 50, 77);
  const TimeSeries b = sample_sequence(m, 50, 77);
  CHECK(a.symbols == b.symbols);
  const TimeSeries c = sample_sequence(m, 50, 78);
  CHECK(a.symbols != c.symbols);
}

TEST_CASE("sampled statistics follow the model on a causal chain") {
  // unit 0 drives unit 1 with a strong positive one-step kernel
  Model m = binary_units(2, {{0, 1}});
  m.params.theta = {0.0, -2.0};
  m.params.v = {4.0};
  const TimeSeries x = sample_sequence(m, 50000, 11);
  double fire_given_prev = 0.0, n_prev = 0.0;
  double fire_given_quiet = 0.0, n_quiet = 0.0;
  for (int t = 2; t <= x.t_len; ++t) {
    if (x.at(0, t - 1)) {
      n_prev += 1.0;
      fire_given_prev += x.at(1, t);
    } else {
      n_quiet += 1.0;
      fire_given_quiet += x.at(1, t);
    }
  }
  const auto logistic = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  CHECK(std::abs(fire_given_prev / n_prev - logistic(2.0)) < 0.02);
  CHECK(std::abs(fire_given_quiet / n_quiet - logistic(-2.0)) < 0.02);
}

TEST_CASE("clamped sampling keeps clamped rows and conditions free units") {
  Model m = binary_units(2, {}, {{0, 1}});
  m.params.theta = {0.0, 3.0};
  m.params.u = {-1e9};
  TimeSeries clamped(2, 2000);
  for (int t = 1; t <= 2000; ++t) clamped.set(0, t, t % 2);
  const std::vector<std::uint8_t> mask = {1, 0};
  const TimeSeries x = sample_clamped(m, 2000, 9, mask, clamped);
  int fired_when_blocked = 0, fired_when_free = 0;
  for (int t = 1; t <= 2000; ++t) {
    CHECK(x.at(0, t) == clamped.at(0, t));
    if (x.at(0, t))
      fired_when_blocked += x.at(1, t);
    else
      fired_when_free += x.at(1, t);
  }
  CHECK(fired_when_blocked == 0);  // exclusion against the clamped unit
  CHECK(fired_when_free > 900);    // otherwise fires at logistic(3) ~ 0.95
}

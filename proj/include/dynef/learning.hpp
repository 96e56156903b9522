#pragma once

#include <cstdint>
#include <vector>

#include "dynef/inference.hpp"
#include "dynef/model.hpp"

namespace dynef {

enum class PriorKind { uniform, gaussian_mixture };

/// Parameter prior for Bayesian training. `uniform` is the improper flat
/// prior (zero gradient everywhere); the Gaussian mixture applies to every
/// scalar coordinate of the parameters independently.
struct Prior {
  PriorKind kind = PriorKind::uniform;
  std::vector<double> means{0.0, -1.0};
  double stddev = 0.15;
  std::vector<double> weights{0.5, 0.5};

  static Prior flat() { return {}; }
  static Prior gaussian_mixture_prior(std::vector<double> means, double stddev,
                                      std::vector<double> weights = {});
  void validate() const;
};

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 1;
  std::uint64_t seed = 0;
  NegPhaseMode neg_phase = NegPhaseMode::auto_select;
  GibbsConfig gibbs{};
  // init ranges: theta and V uniform in [-1, 1], U uniform in [-2, 2]
  double init_theta_v_min = -1.0;
  double init_theta_v_max = 1.0;
  double init_u_min = -2.0;
  double init_u_max = 2.0;
  Prior prior{};
  int snapshot_stride = 10;       // updates between Bayesian snapshots
  double snapshot_burn_in = 0.1;  // fraction of updates discarded before snapshots
  int metrics_stride = 1;         // epochs between log-likelihood evaluations, 0 = none
};

struct EpochMetrics {
  int epoch = 0;
  double train_loglik = 0.0;
  double test_loglik = 0.0;  // NaN when no test set was given
  double wall_ms = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> metrics;
};

struct BayesResult {
  std::vector<ModelParams> snapshots;
  std::vector<EpochMetrics> metrics;
};

GradientBundle zero_gradient(const Model& m);

/// Log-likelihood gradient of one sequence, summed over t: the observed
/// sufficient statistics minus the model expectations from the inference
/// module (theta), the trace outer products (V), and the lateral pair
/// moments (U, once per canonical edge).
GradientBundle grad_log_likelihood(const Model& m, const TimeSeries& x,
                                   NegPhaseMode mode = NegPhaseMode::auto_select,
                                   const GibbsConfig& gibbs = {});

/// d/dTheta of ln p(Theta) under the prior, shape-congruent with params.
GradientBundle log_prior_grad(const ModelParams& params, const Prior& prior);

/// Draws theta/V and U uniformly from the configured init ranges, using the
/// stream (cfg.seed, "init").
void init_params(Model& m, const TrainConfig& cfg);

/// Algorithm: init params, then epochs * |dataset| single-sequence updates
/// Theta += lr * grad, drawing sequences uniformly with replacement.
/// Deterministic given cfg.seed.
TrainResult train_ml(Model& m, const std::vector<TimeSeries>& train,
                     const std::vector<TimeSeries>* test, const TrainConfig& cfg,
                     bool reinit = true);

/// Stochastic gradient Langevin dynamics:
/// Theta += lr * (grad ln p(Theta) + |D| * grad L) + sqrt(2 lr) * nu,
/// nu i.i.d. standard normal per coordinate. Snapshots are taken every
/// snapshot_stride updates after the burn-in fraction. Deterministic given
/// cfg.seed.
BayesResult train_bayes(Model& m, const std::vector<TimeSeries>& train,
                        const std::vector<TimeSeries>* test, const TrainConfig& cfg,
                        bool reinit = true);

/// Mean sequence log-likelihood over a dataset (parallelized per sequence).
double dataset_avg_loglik(const Model& m, const std::vector<TimeSeries>& data);

struct GradCheckReport {
  double max_rel_theta = 0.0;
  double max_rel_v = 0.0;
  double max_rel_u = 0.0;
  double max_rel() const;
};

/// Central finite differences of sequence_log_likelihood against the
/// analytic gradient with exact negative phase. Relative error of a
/// coordinate is |fd - g| / max(1, |fd|, |g|). Params are restored.
GradCheckReport finite_diff_check(Model& m, const TimeSeries& x, double h = 1e-5);

}  // namespace dynef

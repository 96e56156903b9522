#include "dynef/learning.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dynef/common.hpp"
#include "dynef/kernels.hpp"
#include "dynef/rng.hpp"

namespace dynef {

Prior Prior::gaussian_mixture_prior(std::vector<double> means, double stddev,
                                    std::vector<double> weights) {
  Prior p;
  p.kind = PriorKind::gaussian_mixture;
  p.means = std::move(means);
  p.stddev = stddev;
  if (weights.empty())
    p.weights.assign(p.means.size(), 1.0 / static_cast<double>(p.means.size()));
  else
    p.weights = std::move(weights);
  p.validate();
  return p;
}

void Prior::validate() const {
  if (kind == PriorKind::uniform) return;
  if (means.empty() || means.size() != weights.size())
    throw std::invalid_argument("mixture prior needs matching means and weights");
  if (!(stddev > 0.0)) throw std::invalid_argument("mixture prior needs stddev > 0");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("mixture weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("mixture weights must sum to 1");
}

GradientBundle zero_gradient(const Model& m) {
  GradientBundle g;
  g.theta.assign(m.params.theta.size(), 0.0);
  g.v.assign(m.params.v.size(), 0.0);
  g.u.assign(m.params.u.size(), 0.0);
  return g;
}

namespace {

/// Per-run scratch for the gradient loop: trace state, gathered context,
/// potentials, expectations.
struct GradWork {
  explicit GradWork(const Model& m)
      : ts(m.n_units(), m.alphabet, m.bank),
        ctx(m.ctx_size()),
        r(static_cast<std::size_t>(m.n_units()) * m.stat_dim()),
        x_t(m.n_units()) {}

  TraceState ts;
  std::vector<double> ctx;
  std::vector<double> r;
  std::vector<std::uint8_t> x_t;
  StepExpectations exps;
};

void accumulate_grad(const Model& m, const std::vector<detail::ComponentView>& views,
                     const TimeSeries& x, NegPhaseMode mode, const GibbsConfig& gibbs,
                     GradWork& w, GradientBundle& g) {
  const int na = m.stat_dim();
  const int k = m.n_basis();
  w.ts.reset();
  for (int t = 1; t <= x.t_len; ++t) {
    compute_context(m, w.ts.alpha(), w.ctx);
    compute_potentials(m, w.ctx, w.r);
    step_expectations_into(m, views, w.r, mode, gibbs, t, w.exps);
    for (int i = 0; i < x.n_units; ++i) w.x_t[i] = x.at(i, t);

    for (UnitId i = 0; i < m.n_units(); ++i) {
      const int sym = w.x_t[i];
      double* dtheta = g.theta.data() + m.theta_off(i);
      const double* node = w.exps.node.data() + m.theta_off(i);
      const auto in = m.causal.in_edges(i);
      if (na == 1) {
        const double resid = (sym > 0 ? 1.0 : 0.0) - node[0];
        dtheta[0] += resid;
        if (!in.empty()) {
          const int base = in.front();
          kernels::axpy(resid, w.ctx.data() + m.ctx_off(base), g.v.data() + m.v_off(base),
                        in.size() * static_cast<std::size_t>(k));
        }
        continue;
      }
      for (int a = 0; a < na; ++a) {
        const double resid = (sym == a + 1 ? 1.0 : 0.0) - node[a];
        dtheta[a] += resid;
        if (in.empty()) continue;
        const int base = in.front();
        // dV_{j,i,k}(a',a) += alpha_{j,k}(a') * resid(a)
        for (std::size_t s = 0; s < in.size() * static_cast<std::size_t>(k); ++s) {
          const double* tr = w.ctx.data() + m.ctx_off(base) + s * na;
          double* mat = g.v.data() + m.v_off(base) + s * na * na;
          for (int ap = 0; ap < na; ++ap) mat[static_cast<std::size_t>(ap) * na + a] += tr[ap] * resid;
        }
      }
    }

    for (int le = 0; le < m.lateral.n_edges(); ++le) {
      double* du = g.u.data() + m.u_off(le);
      const double* pair = w.exps.pair.data() + m.u_off(le);
      for (int q = 0; q < na * na; ++q) du[q] -= pair[q];
      const auto [j, i] = m.lateral.edge(le);
      const int sj = w.x_t[j], si = w.x_t[i];
      if (sj > 0 && si > 0) du[static_cast<std::size_t>(sj - 1) * na + (si - 1)] += 1.0;
    }

    w.ts.push(w.x_t);
  }
}

std::vector<detail::ComponentView> expectation_views(const Model& m) {
  std::vector<detail::ComponentView> views;
  views.reserve(m.reach.n_components());
  for (int c = 0; c < m.reach.n_components(); ++c)
    views.push_back(detail::make_component_view(m, c, {}, m.enum_budget));
  return views;
}

double elapsed_ms(std::chrono::steady_clock::time_point from) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - from)
      .count();
}

EpochMetrics make_metrics(const Model& m, int epoch, const std::vector<TimeSeries>& train,
                          const std::vector<TimeSeries>* test,
                          std::chrono::steady_clock::time_point t0) {
  EpochMetrics e;
  e.epoch = epoch;
  e.train_loglik = dataset_avg_loglik(m, train);
  e.test_loglik =
      test != nullptr ? dataset_avg_loglik(m, *test) : std::numeric_limits<double>::quiet_NaN();
  e.wall_ms = elapsed_ms(t0);
  return e;
}

void add_gaussian_noise(ModelParams& p, double scale, Rng& rng) {
  for (double& w : p.theta) w += scale * rng.normal();
  for (double& w : p.v) w += scale * rng.normal();
  for (double& w : p.u) w += scale * rng.normal();
}

}  // namespace

GradientBundle grad_log_likelihood(const Model& m, const TimeSeries& x, NegPhaseMode mode,
                                   const GibbsConfig& gibbs) {
  if (x.n_units != m.n_units())
    throw std::invalid_argument("series has wrong number of units");
  validate_series(x, m.alphabet);
  GradientBundle g = zero_gradient(m);
  GradWork w(m);
  accumulate_grad(m, expectation_views(m), x, mode, gibbs, w, g);
  return g;
}

GradientBundle log_prior_grad(const ModelParams& params, const Prior& prior) {
  GradientBundle g;
  g.theta.assign(params.theta.size(), 0.0);
  g.v.assign(params.v.size(), 0.0);
  g.u.assign(params.u.size(), 0.0);
  if (prior.kind == PriorKind::uniform) return g;
  prior.validate();
  const double inv_var = 1.0 / (prior.stddev * prior.stddev);
  const std::size_t n_comp = prior.means.size();
  std::vector<double> log_resp(n_comp);
  auto grad_at = [&](double w) {
    for (std::size_t c = 0; c < n_comp; ++c) {
      const double d = w - prior.means[c];
      log_resp[c] = std::log(prior.weights[c]) - 0.5 * d * d * inv_var;
    }
    const double log_norm = logsumexp(log_resp);
    double grad = 0.0;
    for (std::size_t c = 0; c < n_comp; ++c)
      grad += std::exp(log_resp[c] - log_norm) * (prior.means[c] - w) * inv_var;
    return grad;
  };
  for (std::size_t q = 0; q < params.theta.size(); ++q) g.theta[q] = grad_at(params.theta[q]);
  for (std::size_t q = 0; q < params.v.size(); ++q) g.v[q] = grad_at(params.v[q]);
  for (std::size_t q = 0; q < params.u.size(); ++q) g.u[q] = grad_at(params.u[q]);
  return g;
}

void init_params(Model& m, const TrainConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, "init"));
  for (double& w : m.params.theta) w = rng.uniform(cfg.init_theta_v_min, cfg.init_theta_v_max);
  for (double& w : m.params.v) w = rng.uniform(cfg.init_theta_v_min, cfg.init_theta_v_max);
  for (double& w : m.params.u) w = rng.uniform(cfg.init_u_min, cfg.init_u_max);
}

TrainResult train_ml(Model& m, const std::vector<TimeSeries>& train,
                     const std::vector<TimeSeries>* test, const TrainConfig& cfg,
                     bool reinit) {
  if (train.empty()) throw std::invalid_argument("training set is empty");
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (reinit) init_params(m, cfg);
  const auto views = expectation_views(m);
  const int d = static_cast<int>(train.size());
  Rng draw_rng(derive_seed(cfg.seed, "train"));
  GradWork work(m);
  GradientBundle g = zero_gradient(m);
  TrainResult result;
  long long update = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int step = 0; step < d; ++step, ++update) {
      const int pick = draw_rng.uniform_int(d);
      GibbsConfig gibbs = cfg.gibbs;
      gibbs.seed = derive_seed(cfg.seed, "train-gibbs", static_cast<std::uint64_t>(update));
      g.fill(0.0);
      accumulate_grad(m, views, train[pick], cfg.neg_phase, gibbs, work, g);
      param_axpy(cfg.learning_rate, g, m.params);
    }
    if (cfg.metrics_stride > 0 &&
        (epoch % cfg.metrics_stride == 0 || epoch == cfg.epochs)) {
      result.metrics.push_back(make_metrics(m, epoch, train, test, t0));
    }
  }
  return result;
}

BayesResult train_bayes(Model& m, const std::vector<TimeSeries>& train,
                        const std::vector<TimeSeries>* test, const TrainConfig& cfg,
                        bool reinit) {
  if (train.empty()) throw std::invalid_argument("training set is empty");
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (cfg.snapshot_stride < 1) throw std::invalid_argument("snapshot_stride must be >= 1");
  cfg.prior.validate();
  if (reinit) init_params(m, cfg);
  const auto views = expectation_views(m);
  const int d = static_cast<int>(train.size());
  const long long total_updates = static_cast<long long>(cfg.epochs) * d;
  const long long burn = static_cast<long long>(cfg.snapshot_burn_in * total_updates);
  const double noise_scale = std::sqrt(2.0 * cfg.learning_rate);
  Rng rng(derive_seed(cfg.seed, "train"));
  GradWork work(m);
  GradientBundle g = zero_gradient(m);
  BayesResult result;
  long long update = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int step = 0; step < d; ++step, ++update) {
      const int pick = rng.uniform_int(d);
      GibbsConfig gibbs = cfg.gibbs;
      gibbs.seed = derive_seed(cfg.seed, "train-gibbs", static_cast<std::uint64_t>(update));
      g.fill(0.0);
      accumulate_grad(m, views, train[pick], cfg.neg_phase, gibbs, work, g);
      const GradientBundle prior_g = log_prior_grad(m.params, cfg.prior);
      param_axpy(cfg.learning_rate * d, g, m.params);
      param_axpy(cfg.learning_rate, prior_g, m.params);
      if (cfg.learning_rate > 0.0) add_gaussian_noise(m.params, noise_scale, rng);
      if (update >= burn && (update - burn) % cfg.snapshot_stride == 0)
        result.snapshots.push_back(m.params);
    }
    if (cfg.metrics_stride > 0 &&
        (epoch % cfg.metrics_stride == 0 || epoch == cfg.epochs)) {
      result.metrics.push_back(make_metrics(m, epoch, train, test, t0));
    }
  }
  return result;
}

double dataset_avg_loglik(const Model& m, const std::vector<TimeSeries>& data) {
  if (data.empty()) return 0.0;
  std::vector<double> ll(data.size());
  parallel_for(static_cast<int>(data.size()),
               [&](int i) { ll[i] = sequence_log_likelihood(m, data[i]); });
  double sum = 0.0;
  for (double v : ll) sum += v;
  return sum / static_cast<double>(data.size());
}

double GradCheckReport::max_rel() const {
  return std::max(max_rel_theta, std::max(max_rel_v, max_rel_u));
}

GradCheckReport finite_diff_check(Model& m, const TimeSeries& x, double h) {
  const GradientBundle g = grad_log_likelihood(m, x, NegPhaseMode::exact);
  auto block_err = [&](std::vector<double>& block, const std::vector<double>& gblock) {
    double worst = 0.0;
    for (std::size_t q = 0; q < block.size(); ++q) {
      const double saved = block[q];
      block[q] = saved + h;
      const double up = sequence_log_likelihood(m, x);
      block[q] = saved - h;
      const double down = sequence_log_likelihood(m, x);
      block[q] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double rel =
          std::abs(fd - gblock[q]) / std::max({1.0, std::abs(fd), std::abs(gblock[q])});
      worst = std::max(worst, rel);
    }
    return worst;
  };
  GradCheckReport report;
  report.max_rel_theta = block_err(m.params.theta, g.theta);
  report.max_rel_v = block_err(m.params.v, g.v);
  report.max_rel_u = block_err(m.params.u, g.u);
  return report;
}

}  // namespace dynef

#include "dynef/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "dynef/inference.hpp"
#include "dynef/kernels.hpp"
#include "dynef/rng.hpp"

namespace dynef {

AlphabetSpec::AlphabetSpec(int n_symbols) : c_(n_symbols) {
  if (n_symbols < 2 || n_symbols > 256)
    throw std::invalid_argument("alphabet size C must be in [2, 256], got " +
                                std::to_string(n_symbols));
}

void sufficient_stats(int symbol, const AlphabetSpec& alphabet, std::span<double> out) {
  if (symbol < 0 || symbol >= alphabet.n_symbols())
    throw std::out_of_range("symbol " + std::to_string(symbol) + " outside alphabet of size " +
                            std::to_string(alphabet.n_symbols()));
  std::fill(out.begin(), out.end(), 0.0);
  if (symbol > 0) out[symbol - 1] = 1.0;
}

std::vector<double> sufficient_stats(int symbol, const AlphabetSpec& alphabet) {
  std::vector<double> out(alphabet.stat_dim());
  sufficient_stats(symbol, alphabet, out);
  return out;
}

void validate_series(const TimeSeries& x, const AlphabetSpec& alphabet) {
  for (std::uint8_t s : x.symbols) {
    if (s >= alphabet.n_symbols())
      throw std::invalid_argument("series symbol " + std::to_string(int(s)) +
                                  " outside alphabet of size " +
                                  std::to_string(alphabet.n_symbols()));
  }
}

void ParamVec::fill(double value) {
  std::fill(theta.begin(), theta.end(), value);
  std::fill(v.begin(), v.end(), value);
  std::fill(u.begin(), u.end(), value);
}

void param_axpy(double a, const ParamVec& x, ParamVec& y) {
  kernels::axpy(a, x.theta.data(), y.theta.data(), y.theta.size());
  kernels::axpy(a, x.v.data(), y.v.data(), y.v.size());
  kernels::axpy(a, x.u.data(), y.u.data(), y.u.size());
}

Model::Model(AlphabetSpec alphabet_in, BasisBank bank_in, CausalGraph causal_in,
             LateralGraph lateral_in)
    : alphabet(alphabet_in),
      bank(std::move(bank_in)),
      causal(std::move(causal_in)),
      lateral(std::move(lateral_in)),
      reach(reachable_sets(lateral)) {
  if (causal.n_units() != lateral.n_units())
    throw std::invalid_argument("causal and lateral graphs disagree on the unit count");
  const std::size_t na = stat_dim();
  params.theta.assign(static_cast<std::size_t>(n_units()) * na, 0.0);
  params.v.assign(static_cast<std::size_t>(causal.n_edges()) * n_basis() * na * na, 0.0);
  params.u.assign(static_cast<std::size_t>(lateral.n_edges()) * na * na, 0.0);
}

namespace {

/// alpha chunk of one unit from its symbol window; window[delta] = x_{t-delta}.
/// The delta-ascending order is the pinned summation order for traces.
void alpha_from_window(std::span<const std::uint8_t> window, const BasisBank& bank, int na,
                       double* out) {
  const int k = bank.n_basis();
  const int tau = bank.memory();
  std::fill(out, out + static_cast<std::size_t>(k) * na, 0.0);
  for (int delta = 0; delta < tau; ++delta) {
    const int sym = window[delta];
    if (sym == 0) continue;
    const int a = sym - 1;
    for (int b = 0; b < k; ++b) out[static_cast<std::size_t>(b) * na + a] += bank.taps(b)[delta];
  }
}

}  // namespace

TraceState::TraceState(int n_units, const AlphabetSpec& alphabet, const BasisBank& bank)
    : n_units_(n_units),
      tau_(bank.memory()),
      n_basis_(bank.n_basis()),
      na_(alphabet.stat_dim()),
      bank_(&bank),
      hist_(static_cast<std::size_t>(n_units) * bank.memory(), 0),
      head_(0),
      alpha_(static_cast<std::size_t>(n_units) * bank.n_basis() * alphabet.stat_dim(), 0.0),
      window_(bank.memory()) {}

void TraceState::reset() {
  std::fill(hist_.begin(), hist_.end(), 0);
  std::fill(alpha_.begin(), alpha_.end(), 0.0);
  head_ = 0;
}

void TraceState::push(std::span<const std::uint8_t> x_t) {
  head_ = (head_ + 1) % tau_;
  for (int j = 0; j < n_units_; ++j) {
    std::uint8_t* h = hist_.data() + static_cast<std::size_t>(j) * tau_;
    h[head_] = x_t[j];
    for (int delta = 0; delta < tau_; ++delta) window_[delta] = h[(head_ - delta + tau_) % tau_];
    alpha_from_window(window_, *bank_, na_,
                      alpha_.data() + static_cast<std::size_t>(j) * n_basis_ * na_);
  }
}

std::vector<double> filtered_traces(const TimeSeries& x, int t, const BasisBank& bank,
                                    const AlphabetSpec& alphabet) {
  if (t < 0 || t > x.t_len) throw std::out_of_range("trace time index out of range");
  const int na = alphabet.stat_dim();
  const int tau = bank.memory();
  std::vector<double> alpha(static_cast<std::size_t>(x.n_units) * bank.n_basis() * na);
  std::vector<std::uint8_t> window(tau);
  for (int j = 0; j < x.n_units; ++j) {
    for (int delta = 0; delta < tau; ++delta)
      window[delta] = (t - delta >= 1) ? x.at(j, t - delta) : 0;
    alpha_from_window(window, bank, na,
                      alpha.data() + static_cast<std::size_t>(j) * bank.n_basis() * na);
  }
  return alpha;
}

void compute_context(const Model& m, std::span<const double> alpha, std::span<double> ctx) {
  const std::size_t chunk = static_cast<std::size_t>(m.n_basis()) * m.stat_dim();
  for (int e = 0; e < m.causal.n_edges(); ++e) {
    const UnitId src = m.causal.edge(e).first;
    std::memcpy(ctx.data() + static_cast<std::size_t>(e) * chunk,
                alpha.data() + static_cast<std::size_t>(src) * chunk, chunk * sizeof(double));
  }
}

void compute_potentials(const Model& m, std::span<const double> ctx, std::span<double> r) {
  const int na = m.stat_dim();
  const int k = m.n_basis();
  std::copy(m.params.theta.begin(), m.params.theta.end(), r.begin());
  for (UnitId i = 0; i < m.n_units(); ++i) {
    const auto in = m.causal.in_edges(i);
    if (in.empty()) continue;
    const int base = in.front();
    const std::size_t n_in = in.size();
    if (na == 1) {
      r[i] += kernels::dot(m.params.v.data() + m.v_off(base), ctx.data() + m.ctx_off(base),
                           n_in * k);
    } else {
      double* ri = r.data() + m.theta_off(i);
      for (std::size_t s = 0; s < n_in * static_cast<std::size_t>(k); ++s) {
        const double* mat = m.params.v.data() + m.v_off(base) + s * na * na;
        const double* tr = ctx.data() + m.ctx_off(base) + s * na;
        for (int ap = 0; ap < na; ++ap) {
          const double w = tr[ap];
          if (w == 0.0) continue;
          const double* row = mat + static_cast<std::size_t>(ap) * na;
          for (int a = 0; a < na; ++a) ri[a] += w * row[a];
        }
      }
    }
  }
}

std::vector<double> membrane_potentials(const Model& m, std::span<const double> alpha) {
  std::vector<double> ctx(m.ctx_size());
  std::vector<double> r(static_cast<std::size_t>(m.n_units()) * m.stat_dim());
  compute_context(m, alpha, ctx);
  compute_potentials(m, ctx, r);
  return r;
}

double step_energy(const Model& m, std::span<const std::uint8_t> x_t,
                   std::span<const double> r) {
  const int na = m.stat_dim();
  double e = 0.0;
  for (UnitId i = 0; i < m.n_units(); ++i) {
    const int sym = x_t[i];
    if (sym > 0) e += r[m.theta_off(i) + sym - 1];
  }
  for (int le = 0; le < m.lateral.n_edges(); ++le) {
    const auto [j, i] = m.lateral.edge(le);
    const int sj = x_t[j], si = x_t[i];
    if (sj > 0 && si > 0)
      e += m.params.u[m.u_off(le) + static_cast<std::size_t>(sj - 1) * na + (si - 1)];
  }
  return e;
}

namespace detail {

ComponentView make_component_view(const Model& m, int component,
                                  std::span<const std::uint8_t> clamp_mask,
                                  long long budget_limit) {
  ComponentView view;
  view.units = m.reach.components[component];
  for (UnitId u : view.units)
    if (clamp_mask.empty() || clamp_mask[u] == 0) view.free_units.push_back(u);
  for (UnitId u : view.units) {
    for (int e : m.lateral.incident_edges(u)) {
      if (m.lateral.edge(e).first == u) view.edges.push_back(e);  // count each edge once
    }
  }
  std::sort(view.edges.begin(), view.edges.end());
  view.edge_pos.reserve(view.edges.size());
  for (int e : view.edges) {
    const auto [j, i] = m.lateral.edge(e);
    const auto pos = [&](UnitId u) {
      return static_cast<int>(std::lower_bound(view.units.begin(), view.units.end(), u) -
                              view.units.begin());
    };
    view.edge_pos.emplace_back(pos(j), pos(i));
  }
  long long count = 1;
  for (std::size_t q = 0; q < view.free_units.size(); ++q) {
    count *= m.alphabet.n_symbols();
    if (count > budget_limit) {
      count = budget_limit + 1;
      break;
    }
  }
  view.n_configs = count;
  return view;
}

namespace {

/// resolves the component's symbols (free from config, rest from base) into
/// syms, then returns the component energy
double energy_resolved(const Model& m, const ComponentView& view, long long config,
                       std::span<const std::uint8_t> base_symbols, std::span<const double> r,
                       std::vector<int>& syms) {
  const int c = m.alphabet.n_symbols();
  const int na = m.stat_dim();
  syms.resize(view.units.size());
  std::size_t f = 0;
  long long digits = config;
  for (std::size_t q = 0; q < view.units.size(); ++q) {
    if (f < view.free_units.size() && view.free_units[f] == view.units[q]) {
      syms[q] = static_cast<int>(digits % c);
      digits /= c;
      ++f;
    } else {
      syms[q] = base_symbols[view.units[q]];
    }
  }
  double e = 0.0;
  for (std::size_t q = 0; q < view.units.size(); ++q) {
    if (syms[q] > 0) e += r[m.theta_off(view.units[q]) + syms[q] - 1];
  }
  for (std::size_t le = 0; le < view.edges.size(); ++le) {
    const auto [pj, pi] = view.edge_pos[le];
    if (syms[pj] > 0 && syms[pi] > 0)
      e += m.params.u[m.u_off(view.edges[le]) +
                      static_cast<std::size_t>(syms[pj] - 1) * na + (syms[pi] - 1)];
  }
  return e;
}

}  // namespace

double component_config_energy(const Model& m, const ComponentView& view, long long config,
                               std::span<const std::uint8_t> base_symbols,
                               std::span<const double> r) {
  std::vector<int> syms;
  return energy_resolved(m, view, config, base_symbols, r, syms);
}

std::vector<double> component_energies(const Model& m, const ComponentView& view,
                                       std::span<const std::uint8_t> base_symbols,
                                       std::span<const double> r) {
  std::vector<double> energies(static_cast<std::size_t>(view.n_configs));
  std::vector<int> syms;
  for (long long cfg = 0; cfg < view.n_configs; ++cfg)
    energies[cfg] = energy_resolved(m, view, cfg, base_symbols, r, syms);
  return energies;
}

double component_observed_energy(const Model& m, const ComponentView& view,
                                 std::span<const std::uint8_t> x_t, std::span<const double> r) {
  const int na = m.stat_dim();
  double e = 0.0;
  for (UnitId u : view.units) {
    const int sym = x_t[u];
    if (sym > 0) e += r[m.theta_off(u) + sym - 1];
  }
  for (int le : view.edges) {
    const auto [j, i] = m.lateral.edge(le);
    const int sj = x_t[j], si = x_t[i];
    if (sj > 0 && si > 0)
      e += m.params.u[m.u_off(le) + static_cast<std::size_t>(sj - 1) * na + (si - 1)];
  }
  return e;
}

}  // namespace detail

namespace {

std::vector<detail::ComponentView> all_views(const Model& m,
                                             std::span<const std::uint8_t> clamp_mask = {}) {
  std::vector<detail::ComponentView> views;
  views.reserve(m.reach.n_components());
  for (int c = 0; c < m.reach.n_components(); ++c)
    views.push_back(detail::make_component_view(m, c, clamp_mask, m.enum_budget));
  return views;
}

double step_log_prob_with_views(const Model& m, const std::vector<detail::ComponentView>& views,
                                std::span<const std::uint8_t> x_t, std::span<const double> r) {
  const int na = m.stat_dim();
  double lp = 0.0;
  for (const auto& view : views) {
    if (view.n_configs > m.enum_budget)
      throw ComponentTooLarge(static_cast<int>(view.units.size()), view.n_configs, m.enum_budget);
    if (view.units.size() == 1) {
      // singleton: log Z over {0, r_1, ..., r_Na} without enumeration
      const double* ru = r.data() + m.theta_off(view.units.front());
      double mx = 0.0;
      for (int a = 0; a < na; ++a) mx = std::max(mx, ru[a]);
      double z = std::exp(0.0 - mx);
      for (int a = 0; a < na; ++a) z += std::exp(ru[a] - mx);
      const int sym = x_t[view.units.front()];
      lp += (sym > 0 ? ru[sym - 1] : 0.0) - (mx + std::log(z));
      continue;
    }
    const std::vector<double> energies = detail::component_energies(m, view, x_t, r);
    lp += detail::component_observed_energy(m, view, x_t, r) - logsumexp(energies);
  }
  return lp;
}

}  // namespace

double step_log_prob(const Model& m, std::span<const std::uint8_t> x_t,
                     std::span<const double> r) {
  return step_log_prob_with_views(m, all_views(m), x_t, r);
}

double sequence_log_likelihood(const Model& m, const TimeSeries& x) {
  if (x.n_units != m.n_units())
    throw std::invalid_argument("series has wrong number of units");
  validate_series(x, m.alphabet);
  const auto views = all_views(m);
  TraceState ts(m.n_units(), m.alphabet, m.bank);
  std::vector<double> ctx(m.ctx_size());
  std::vector<double> r(static_cast<std::size_t>(m.n_units()) * m.stat_dim());
  std::vector<std::uint8_t> x_t(m.n_units());
  double ll = 0.0;
  for (int t = 1; t <= x.t_len; ++t) {
    compute_context(m, ts.alpha(), ctx);
    compute_potentials(m, ctx, r);
    for (int i = 0; i < x.n_units; ++i) x_t[i] = x.at(i, t);
    ll += step_log_prob_with_views(m, views, x_t, r);
    ts.push(x_t);
  }
  return ll;
}

namespace {

TimeSeries sample_impl(const Model& m, int t_len, std::uint64_t seed,
                       std::span<const std::uint8_t> clamp_mask, const TimeSeries* clamped,
                       NegPhaseMode mode, const GibbsConfig* gibbs_cfg) {
  if (t_len < 0) throw std::invalid_argument("t_len must be nonnegative");
  if (mode == NegPhaseMode::contrastive_divergence)
    throw std::invalid_argument("contrastive divergence is reserved but not implemented");
  const GibbsConfig gc = gibbs_cfg ? *gibbs_cfg : GibbsConfig{};
  const int n = m.n_units();
  TimeSeries out(n, t_len);
  const auto views = all_views(m, clamp_mask);
  TraceState ts(n, m.alphabet, m.bank);
  std::vector<double> ctx(m.ctx_size());
  std::vector<double> r(static_cast<std::size_t>(n) * m.stat_dim());
  std::vector<std::uint8_t> x_t(n, 0);
  std::vector<double> probs;
  for (int t = 1; t <= t_len; ++t) {
    compute_context(m, ts.alpha(), ctx);
    compute_potentials(m, ctx, r);
    if (clamped != nullptr) {
      for (int i = 0; i < n; ++i)
        if (!clamp_mask.empty() && clamp_mask[i]) x_t[i] = clamped->at(i, t);
    }
    for (std::size_t c = 0; c < views.size(); ++c) {
      const auto& view = views[c];
      if (view.free_units.empty()) continue;
      const bool fits = view.n_configs <= m.enum_budget;
      if (mode == NegPhaseMode::exact && !fits)
        throw ComponentTooLarge(static_cast<int>(view.units.size()), view.n_configs,
                                m.enum_budget);
      if (mode != NegPhaseMode::gibbs && fits) {
        const std::vector<double> energies = detail::component_energies(m, view, x_t, r);
        const double log_z = logsumexp(energies);
        probs.resize(energies.size());
        for (std::size_t q = 0; q < energies.size(); ++q)
          probs[q] = std::exp(energies[q] - log_z);
        Rng rng(derive_seed(seed, "sample", static_cast<std::uint64_t>(t), c));
        const long long pick = rng.categorical(probs);
        for (std::size_t f = 0; f < view.free_units.size(); ++f)
          x_t[view.free_units[f]] = static_cast<std::uint8_t>(
              detail::config_symbol(m.alphabet.n_symbols(), pick, static_cast<int>(f)));
      } else {
        Rng rng(derive_seed(seed, "sample-gibbs", static_cast<std::uint64_t>(t), c));
        for (UnitId uf : view.free_units) x_t[uf] = 0;
        gibbs_component_draw(m, view, r, x_t, std::max(1, gc.burn_in), rng);
      }
    }
    for (int i = 0; i < n; ++i) out.set(i, t, x_t[i]);
    ts.push(x_t);
  }
  return out;
}

}  // namespace

TimeSeries sample_sequence(const Model& m, int t_len, std::uint64_t seed, NegPhaseMode mode,
                           const GibbsConfig* gibbs) {
  return sample_impl(m, t_len, seed, {}, nullptr, mode, gibbs);
}

TimeSeries sample_clamped(const Model& m, int t_len, std::uint64_t seed,
                          std::span<const std::uint8_t> clamp_mask, const TimeSeries& clamped,
                          NegPhaseMode mode, const GibbsConfig* gibbs) {
  if (static_cast<int>(clamp_mask.size()) != m.n_units())
    throw std::invalid_argument("clamp mask size mismatch");
  if (clamped.n_units != m.n_units() || clamped.t_len < t_len)
    throw std::invalid_argument("clamped series shape mismatch");
  return sample_impl(m, t_len, seed, clamp_mask, &clamped, mode, gibbs);
}

}  // namespace dynef

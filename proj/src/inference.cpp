#include "dynef/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dynef/common.hpp"

namespace dynef {

namespace {

using detail::ComponentView;

/// Conditional energies of unit i given its lateral neighbors' current
/// symbols: e_c = r_i . s(c) + sum_{j in L_i} s_j^T U~ s(c), with U~ the
/// canonical matrix transposed when i is the lower endpoint.
void unit_conditional_energies(const Model& m, UnitId i, std::span<const double> r,
                               std::span<const std::uint8_t> x_t, std::span<double> e) {
  const int c = m.alphabet.n_symbols();
  const int na = m.stat_dim();
  e[0] = 0.0;
  for (int s = 1; s < c; ++s) e[s] = r[m.theta_off(i) + s - 1];
  const auto nbrs = m.lateral.neighbors(i);
  const auto eids = m.lateral.incident_edges(i);
  for (std::size_t q = 0; q < nbrs.size(); ++q) {
    const int sj = x_t[nbrs[q]];
    if (sj == 0) continue;
    const double* u = m.params.u.data() + m.u_off(eids[q]);
    const bool i_is_high = m.lateral.edge(eids[q]).second == i;
    for (int s = 1; s < c; ++s) {
      e[s] += i_is_high ? u[static_cast<std::size_t>(sj - 1) * na + (s - 1)]
                        : u[static_cast<std::size_t>(s - 1) * na + (sj - 1)];
    }
  }
}

int draw_from_energies(std::span<const double> e, std::vector<double>& probs, Rng& rng) {
  const double log_z = logsumexp(e);
  probs.resize(e.size());
  for (std::size_t s = 0; s < e.size(); ++s) probs[s] = std::exp(e[s] - log_z);
  return rng.categorical(probs);
}

void check_budget(const Model& m, const ComponentView& view) {
  if (view.n_configs > m.enum_budget)
    throw ComponentTooLarge(static_cast<int>(view.units.size()), view.n_configs, m.enum_budget);
}

/// Exact moments of one component by full enumeration, written into the
/// component's slots of `out` (which must be pre-zeroed).
void exact_component_expectations(const Model& m, const ComponentView& view,
                                  std::span<const double> r, StepExpectations& out) {
  check_budget(m, view);
  const int c = m.alphabet.n_symbols();
  const int na = m.stat_dim();
  if (view.units.size() == 1) {
    // singleton: closed-form softmax over {0, r}
    const std::size_t off = m.theta_off(view.units.front());
    const double* ru = r.data() + off;
    double mx = 0.0;
    for (int a = 0; a < na; ++a) mx = std::max(mx, ru[a]);
    double z = std::exp(0.0 - mx);
    for (int a = 0; a < na; ++a) z += std::exp(ru[a] - mx);
    const double log_z = mx + std::log(z);
    for (int a = 0; a < na; ++a) out.node[off + a] += std::exp(ru[a] - log_z);
    return;
  }
  const std::vector<double> energies = detail::component_energies(m, view, {}, r);
  const double log_z = logsumexp(energies);
  std::vector<int> syms(view.units.size());
  for (long long cfg = 0; cfg < view.n_configs; ++cfg) {
    const double p = std::exp(energies[cfg] - log_z);
    long long digits = cfg;
    for (std::size_t q = 0; q < view.units.size(); ++q) {
      syms[q] = static_cast<int>(digits % c);
      digits /= c;
      if (syms[q] > 0) out.node[m.theta_off(view.units[q]) + syms[q] - 1] += p;
    }
    for (std::size_t le = 0; le < view.edges.size(); ++le) {
      const auto [pj, pi] = view.edge_pos[le];
      if (syms[pj] > 0 && syms[pi] > 0)
        out.pair[m.u_off(view.edges[le]) + static_cast<std::size_t>(syms[pj] - 1) * na +
                 (syms[pi] - 1)] += p;
    }
  }
}

void gibbs_component_expectations(const Model& m, const ComponentView& view,
                                  std::span<const double> r, const GibbsConfig& cfg,
                                  std::uint64_t stream_seed, StepExpectations& out) {
  const int na = m.stat_dim();
  Rng rng(stream_seed);
  std::vector<std::uint8_t> row(m.n_units(), 0);
  gibbs_component_draw(m, view, r, row, cfg.burn_in, rng);
  const double inv_m = 1.0 / cfg.n_samples;
  for (int s = 0; s < cfg.n_samples; ++s) {
    gibbs_component_draw(m, view, r, row, cfg.thin, rng);
    for (UnitId u : view.units) {
      if (row[u] > 0) out.node[m.theta_off(u) + row[u] - 1] += inv_m;
    }
    for (int le : view.edges) {
      const auto [j, i] = m.lateral.edge(le);
      if (row[j] > 0 && row[i] > 0)
        out.pair[m.u_off(le) + static_cast<std::size_t>(row[j] - 1) * na + (row[i] - 1)] += inv_m;
    }
  }
}

void ensure_sizes(const Model& m, StepExpectations& out) {
  out.node.assign(static_cast<std::size_t>(m.n_units()) * m.stat_dim(), 0.0);
  out.pair.assign(static_cast<std::size_t>(m.lateral.n_edges()) * m.stat_dim() * m.stat_dim(),
                  0.0);
  out.method.assign(m.reach.n_components(), StepExpectations::Method::exact);
}

}  // namespace

void gibbs_component_draw(const Model& m, const detail::ComponentView& view,
                          std::span<const double> r, std::span<std::uint8_t> x_t, int sweeps,
                          Rng& rng) {
  const int c = m.alphabet.n_symbols();
  std::vector<double> energies(c);
  std::vector<double> probs;
  for (int s = 0; s < sweeps; ++s) {
    for (UnitId u : view.free_units) {
      unit_conditional_energies(m, u, r, x_t, energies);
      x_t[u] = static_cast<std::uint8_t>(draw_from_energies(energies, probs, rng));
    }
  }
}

std::vector<double> exact_node_marginal(const Model& m, UnitId i, std::span<const double> r) {
  if (i < 0 || i >= m.n_units()) throw std::out_of_range("unit out of range");
  const int c = m.alphabet.n_symbols();
  const ComponentView view =
      detail::make_component_view(m, m.reach.component_of[i], {}, m.enum_budget);
  check_budget(m, view);
  const std::vector<double> energies = detail::component_energies(m, view, {}, r);
  const double log_z = logsumexp(energies);
  const int pos = static_cast<int>(
      std::lower_bound(view.units.begin(), view.units.end(), i) - view.units.begin());
  std::vector<double> marginal(c, 0.0);
  for (long long cfg = 0; cfg < view.n_configs; ++cfg)
    marginal[detail::config_symbol(c, cfg, pos)] += std::exp(energies[cfg] - log_z);
  return marginal;
}

std::vector<double> exact_pair_marginal(const Model& m, UnitId j, UnitId i,
                                        std::span<const double> r) {
  const int edge = m.lateral.edge_index(j, i);
  if (edge < 0)
    throw std::invalid_argument("{" + std::to_string(j) + "," + std::to_string(i) +
                                "} is not a lateral edge");
  const int c = m.alphabet.n_symbols();
  const ComponentView view =
      detail::make_component_view(m, m.reach.component_of[i], {}, m.enum_budget);
  check_budget(m, view);
  const std::vector<double> energies = detail::component_energies(m, view, {}, r);
  const double log_z = logsumexp(energies);
  const auto pos = [&](UnitId u) {
    return static_cast<int>(std::lower_bound(view.units.begin(), view.units.end(), u) -
                            view.units.begin());
  };
  const int pj = pos(j), pi = pos(i);
  std::vector<double> table(static_cast<std::size_t>(c) * c, 0.0);
  for (long long cfg = 0; cfg < view.n_configs; ++cfg) {
    const int sj = detail::config_symbol(c, cfg, pj);
    const int si = detail::config_symbol(c, cfg, pi);
    table[static_cast<std::size_t>(sj) * c + si] += std::exp(energies[cfg] - log_z);
  }
  return table;
}

void gibbs_expectations(const Model& m, int component, std::span<const double> r,
                        const GibbsConfig& cfg, std::uint64_t stream_seed,
                        StepExpectations& out) {
  if (cfg.n_samples < 1 || cfg.burn_in < 0 || cfg.thin < 1)
    throw std::invalid_argument("bad GibbsConfig");
  if (out.node.empty()) ensure_sizes(m, out);
  const ComponentView view = detail::make_component_view(m, component, {}, m.enum_budget);
  gibbs_component_expectations(m, view, r, cfg, stream_seed, out);
  out.method[component] = StepExpectations::Method::gibbs;
}

void step_expectations_into(const Model& m, const std::vector<detail::ComponentView>& views,
                            std::span<const double> r, NegPhaseMode mode, const GibbsConfig& cfg,
                            int t_index, StepExpectations& out) {
  if (mode == NegPhaseMode::contrastive_divergence)
    throw std::invalid_argument("contrastive divergence is reserved but not implemented");
  ensure_sizes(m, out);
  for (std::size_t comp = 0; comp < views.size(); ++comp) {
    const ComponentView& view = views[comp];
    const bool fits = view.n_configs <= m.enum_budget;
    const bool use_exact =
        mode == NegPhaseMode::exact || (mode == NegPhaseMode::auto_select && fits);
    if (use_exact) {
      exact_component_expectations(m, view, r, out);
      out.method[comp] = StepExpectations::Method::exact;
    } else {
      gibbs_component_expectations(
          m, view, r, cfg,
          derive_seed(cfg.seed, "gibbs", static_cast<std::uint64_t>(t_index), comp), out);
      out.method[comp] = StepExpectations::Method::gibbs;
    }
  }
}

StepExpectations step_expectations(const Model& m, std::span<const double> r, NegPhaseMode mode,
                                   const GibbsConfig& cfg, int t_index) {
  std::vector<detail::ComponentView> views;
  views.reserve(m.reach.n_components());
  for (int c = 0; c < m.reach.n_components(); ++c)
    views.push_back(detail::make_component_view(m, c, {}, m.enum_budget));
  StepExpectations out;
  step_expectations_into(m, views, r, mode, cfg, t_index, out);
  return out;
}

}  // namespace dynef

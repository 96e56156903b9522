#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dynef/basis.hpp"
#include "dynef/common.hpp"
#include "dynef/graph.hpp"

namespace dynef {

/// Shared discrete alphabet {0, ..., C-1}. Sufficient statistics are the
/// one-hot representation of the nonzero symbols, so their dimension is
/// N_a = C - 1 and symbol 0 maps to the zero vector.
class AlphabetSpec {
 public:
  explicit AlphabetSpec(int n_symbols);
  int n_symbols() const { return c_; }  // C
  int stat_dim() const { return c_ - 1; }  // N_a

 private:
  int c_;
};

/// Writes s(x) into out (length N_a): out[c-1] = 1 iff x == c.
void sufficient_stats(int symbol, const AlphabetSpec& alphabet, std::span<double> out);
std::vector<double> sufficient_stats(int symbol, const AlphabetSpec& alphabet);

/// N_x discrete-valued sequences of length T, stored row-per-unit.
/// Time indices are 1-based to match the model equations; symbols at t <= 0
/// are 0 by convention (zero history).
struct TimeSeries {
  int n_units = 0;
  int t_len = 0;
  std::vector<std::uint8_t> symbols;  // [unit * t_len + (t - 1)]

  TimeSeries() = default;
  TimeSeries(int n_units, int t_len)
      : n_units(n_units),
        t_len(t_len),
        symbols(static_cast<std::size_t>(n_units) * t_len, 0) {}

  std::uint8_t at(int unit, int t) const {
    return symbols[static_cast<std::size_t>(unit) * t_len + (t - 1)];
  }
  void set(int unit, int t, std::uint8_t v) {
    symbols[static_cast<std::size_t>(unit) * t_len + (t - 1)] = v;
  }
  std::span<const std::uint8_t> row(int unit) const {
    return {symbols.data() + static_cast<std::size_t>(unit) * t_len,
            static_cast<std::size_t>(t_len)};
  }
};

void validate_series(const TimeSeries& x, const AlphabetSpec& alphabet);

/// Flat parameter storage; also reused for gradients, which are
/// shape-congruent by construction.
///
///   theta : N_x * Na                     per-unit natural parameters
///   v     : E_P * K * Na * Na            causal weights, one Na x Na matrix
///                                        per (edge, basis); edges follow the
///                                        causal graph's canonical order, so
///                                        each destination unit owns one
///                                        contiguous block
///   u     : E_L * Na * Na                lateral weights, one matrix per
///                                        canonical edge (j < i); entry
///                                        (a', a) couples s_j[a'] with s_i[a]
struct ParamVec {
  std::vector<double> theta;
  std::vector<double> v;
  std::vector<double> u;

  std::size_t size() const { return theta.size() + v.size() + u.size(); }
  void fill(double value);
};

using ModelParams = ParamVec;
using GradientBundle = ParamVec;

/// y += a * x over all three blocks.
void param_axpy(double a, const ParamVec& x, ParamVec& y);

// contrastive_divergence is reserved; selecting it raises
enum class NegPhaseMode { exact, gibbs, auto_select, contrastive_divergence };

struct GibbsConfig;  // inference.hpp

/// A dynamic exponential family model: alphabet, basis bank, causal and
/// lateral graphs (with precomputed reachable sets) and the parameters.
/// Everything except params is immutable after construction.
struct Model {
  AlphabetSpec alphabet;
  BasisBank bank;
  CausalGraph causal;
  LateralGraph lateral;
  ReachableSets reach;
  ModelParams params;

  /// Components with more configurations than this are never enumerated
  /// exactly; the Gibbs path takes over (or ComponentTooLarge is raised
  /// where exactness is required).
  long long enum_budget = 4096;

  Model(AlphabetSpec alphabet, BasisBank bank, CausalGraph causal, LateralGraph lateral);

  int n_units() const { return causal.n_units(); }
  int stat_dim() const { return alphabet.stat_dim(); }
  int n_basis() const { return bank.n_basis(); }

  std::size_t theta_off(UnitId i) const { return static_cast<std::size_t>(i) * stat_dim(); }
  std::size_t v_off(int edge, int k = 0) const {
    return (static_cast<std::size_t>(edge) * n_basis() + k) * stat_dim() * stat_dim();
  }
  std::size_t u_off(int edge) const {
    return static_cast<std::size_t>(edge) * stat_dim() * stat_dim();
  }
  /// offset of edge e's trace chunk in a context vector (see compute_context)
  std::size_t ctx_off(int edge, int k = 0) const {
    return (static_cast<std::size_t>(edge) * n_basis() + k) * stat_dim();
  }
  std::size_t ctx_size() const {
    return static_cast<std::size_t>(causal.n_edges()) * n_basis() * stat_dim();
  }
  std::size_t alpha_size() const {
    return static_cast<std::size_t>(n_units()) * n_basis() * stat_dim();
  }
};

/// Filtered traces alpha_{j,k,t} for all units, maintained over a ring
/// buffer of the last tau symbols. reset() restores the all-zero history.
/// The trace recomputation always walks delta = 0..tau-1 in that order, so
/// an incrementally maintained state and a fresh computation from the same
/// window agree bit-for-bit.
class TraceState {
 public:
  TraceState(int n_units, const AlphabetSpec& alphabet, const BasisBank& bank);

  void reset();
  /// appends x_t for every unit and updates the traces to time t
  void push(std::span<const std::uint8_t> x_t);
  /// alpha, unit-major: [unit][basis][stat], length n_units * K * Na
  std::span<const double> alpha() const { return alpha_; }

 private:
  int n_units_, tau_, n_basis_, na_;
  const BasisBank* bank_;
  std::vector<std::uint8_t> hist_;  // n_units * tau ring buffer
  int head_;
  std::vector<double> alpha_;
  std::vector<std::uint8_t> window_;  // scratch, delta-ordered
};

/// alpha at time t computed fresh from the series (zero-padded history).
std::vector<double> filtered_traces(const TimeSeries& x, int t, const BasisBank& bank,
                                    const AlphabetSpec& alphabet);

/// Gathers per-edge trace chunks: ctx[(e*K + k)*Na + a] = alpha of edge e's
/// source unit, basis k, coordinate a. Aligned with the v layout so that for
/// Na == 1 the potential of a unit is one contiguous dot product.
void compute_context(const Model& m, std::span<const double> alpha, std::span<double> ctx);

/// r_{i,t} = theta_i + sum_{j in P_i} sum_k V_{j,i,k}^T alpha_{j,k,t-1},
/// from a context vector gathered at t-1.
void compute_potentials(const Model& m, std::span<const double> ctx, std::span<double> r);

/// Convenience wrapper: potentials from a raw trace vector.
std::vector<double> membrane_potentials(const Model& m, std::span<const double> alpha);

/// sum_i r_i . s_i + sum over canonical lateral edges of s_j^T U_{j,i} s_i
/// (each undirected edge counted once).
double step_energy(const Model& m, std::span<const std::uint8_t> x_t, std::span<const double> r);

/// log p(x_t | r_t): step energy minus the sum of per-component log
/// partition functions, each a log-sum-exp over that component's
/// configurations. Throws ComponentTooLarge over the enumeration budget.
double step_log_prob(const Model& m, std::span<const std::uint8_t> x_t, std::span<const double> r);

/// sum over t of step_log_prob with traces from the observed history.
double sequence_log_likelihood(const Model& m, const TimeSeries& x);

/// Ancestral sampling: for each t, draw x_t per lateral component; exact
/// enumeration within budget, Gibbs otherwise. Deterministic given seed.
TimeSeries sample_sequence(const Model& m, int t_len, std::uint64_t seed,
                           NegPhaseMode mode = NegPhaseMode::auto_select,
                           const GibbsConfig* gibbs = nullptr);

/// Same, but units with clamp_mask[i] != 0 are fixed to clamped.at(i, t)
/// instead of being sampled; free units in mixed components are drawn from
/// their conditional given the clamped ones.
TimeSeries sample_clamped(const Model& m, int t_len, std::uint64_t seed,
                          std::span<const std::uint8_t> clamp_mask, const TimeSeries& clamped,
                          NegPhaseMode mode = NegPhaseMode::auto_select,
                          const GibbsConfig* gibbs = nullptr);

namespace detail {

/// One lateral component prepared for enumeration or Gibbs: the units that
/// are free to vary, the lateral edges internal to the component, and the
/// number of free-unit configurations (clamped to budget_limit + 1).
struct ComponentView {
  std::vector<UnitId> units;       // all component units, ascending
  std::vector<UnitId> free_units;  // subset left free, ascending
  std::vector<int> edges;          // lateral edge ids inside the component
  std::vector<std::pair<int, int>> edge_pos;  // per edge, endpoint positions in units
  long long n_configs;
};

ComponentView make_component_view(const Model& m, int component,
                                  std::span<const std::uint8_t> clamp_mask,
                                  long long budget_limit);

/// symbol assigned to free unit q by configuration index n
inline int config_symbol(int n_symbols, long long config, int q) {
  long long d = config;
  for (int s = 0; s < q; ++s) d /= n_symbols;
  return static_cast<int>(d % n_symbols);
}

/// Component energy with free units taken from `config` and every other
/// unit taken from base_symbols.
double component_config_energy(const Model& m, const ComponentView& view, long long config,
                               std::span<const std::uint8_t> base_symbols,
                               std::span<const double> r);

/// Energies of all free-unit configurations, in config-index order.
std::vector<double> component_energies(const Model& m, const ComponentView& view,
                                       std::span<const std::uint8_t> base_symbols,
                                       std::span<const double> r);

/// Component energy of an observed symbol row (no enumeration).
double component_observed_energy(const Model& m, const ComponentView& view,
                                 std::span<const std::uint8_t> x_t, std::span<const double> r);

}  // namespace detail

}  // namespace dynef

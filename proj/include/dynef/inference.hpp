#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dynef/model.hpp"
#include "dynef/rng.hpp"

namespace dynef {

struct GibbsConfig {
  int n_samples = 2000;
  int burn_in = 200;
  int thin = 1;
  std::uint64_t seed = 0;
};

/// Negative-phase moments of one timestep: E[s_i | r_t] per unit and
/// E[s_j s_i^T | r_t] per canonical lateral edge, with the method used for
/// each lateral component.
struct StepExpectations {
  enum class Method : std::uint8_t { exact, gibbs };

  std::vector<double> node;    // N_x * Na
  std::vector<double> pair;    // E_L * Na * Na, canonical (j < i), row (a_j), col (a_i)
  std::vector<Method> method;  // per component
};

/// p(x_{i,t} = c | r_t) for c = 0..C-1, by enumerating the lateral component
/// of i. Throws ComponentTooLarge over the enumeration budget.
std::vector<double> exact_node_marginal(const Model& m, UnitId i, std::span<const double> r);

/// Joint marginal of (x_j, x_t=i) for a lateral edge {j, i}, as a C x C
/// row-major table over (x_j, x_i). Throws std::invalid_argument if {j, i}
/// is not a lateral edge, ComponentTooLarge over budget.
std::vector<double> exact_pair_marginal(const Model& m, UnitId j, UnitId i,
                                        std::span<const double> r);

/// Systematic-scan Gibbs estimates of one component's moments, written into
/// the component's slots of `out`. Deterministic given stream_seed.
void gibbs_expectations(const Model& m, int component, std::span<const double> r,
                        const GibbsConfig& cfg, std::uint64_t stream_seed,
                        StepExpectations& out);

/// Per-component dispatch over the whole graph: exact enumeration when the
/// component fits the budget (or is forced), Gibbs otherwise. `auto_select`
/// prefers exact. t_index seeds the per-(t, component) Gibbs streams.
StepExpectations step_expectations(const Model& m, std::span<const double> r, NegPhaseMode mode,
                                   const GibbsConfig& cfg, int t_index = 0);

/// In-place variant reusing prebuilt component views and output storage
/// (the training loop calls this once per timestep).
void step_expectations_into(const Model& m, const std::vector<detail::ComponentView>& views,
                            std::span<const double> r, NegPhaseMode mode, const GibbsConfig& cfg,
                            int t_index, StepExpectations& out);

/// Runs `sweeps` systematic scans over the component's free units starting
/// from the current values in x_t, then leaves the final state in x_t.
void gibbs_component_draw(const Model& m, const detail::ComponentView& view,
                          std::span<const double> r, std::span<std::uint8_t> x_t, int sweeps,
                          Rng& rng);

}  // namespace dynef

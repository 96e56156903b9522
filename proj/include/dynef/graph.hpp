#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace dynef {

using UnitId = std::int32_t;
using Edge = std::pair<UnitId, UnitId>;

/// Directed graph of causal connections. Edge (j, i) means unit j's past
/// influences unit i's present; self-loops give recurrence. Immutable after
/// construction; edges are kept in canonical order, sorted by
/// (destination, source), so the block of in-edges of each unit is a
/// contiguous range of edge ids.
class CausalGraph {
 public:
  CausalGraph(int n_units, std::vector<Edge> edges);

  int n_units() const { return n_units_; }
  int n_edges() const { return static_cast<int>(edges_.size()); }

  /// P_i: sorted source units of edges into i
  std::span<const UnitId> parents(UnitId i) const;

  /// ids of the edges into i, aligned with parents(i)
  std::span<const int> in_edges(UnitId i) const;

  int first_in_edge(UnitId i) const;

  /// (source j, destination i) of edge e, canonical order
  Edge edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
  const std::vector<Edge>& edges() const { return edges_; }

 private:
  void check_unit(UnitId i) const;

  int n_units_;
  std::vector<Edge> edges_;          // sorted by (dst, src)
  std::vector<int> in_offset_;       // per unit, offset into edges_ (size n_units+1)
  std::vector<UnitId> parent_flat_;  // sources, grouped per destination
  std::vector<int> in_edge_flat_;    // edge ids, grouped per destination
};

/// Undirected graph of lateral (same-timestep) connections. Edges are stored
/// canonically as (min, max); self-loops are rejected. Immutable after
/// construction.
class LateralGraph {
 public:
  LateralGraph(int n_units, std::vector<Edge> edges);

  int n_units() const { return n_units_; }
  int n_edges() const { return static_cast<int>(edges_.size()); }

  /// L_i: sorted lateral neighbors of i
  std::span<const UnitId> neighbors(UnitId i) const;

  /// ids of edges incident to i, aligned with neighbors(i)
  std::span<const int> incident_edges(UnitId i) const;

  /// (j, i) with j < i, canonical order sorted by (j, i)
  Edge edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// canonical edge id for {a, b}, or -1 when absent
  int edge_index(UnitId a, UnitId b) const;

 private:
  void check_unit(UnitId i) const;

  int n_units_;
  std::vector<Edge> edges_;  // canonical (min, max), sorted
  std::vector<int> adj_offset_;
  std::vector<UnitId> neighbor_flat_;
  std::vector<int> incident_flat_;
};

/// Lateral connected components and per-unit reachable sets C_i.
struct ReachableSets {
  std::vector<std::vector<UnitId>> components;  // sorted units; sorted by least unit
  std::vector<int> component_of;                // per unit
  std::vector<std::vector<UnitId>> reachable;   // C_i = component of i minus i

  int n_components() const { return static_cast<int>(components.size()); }
};

/// P_i by direct lookup.
inline std::span<const UnitId> parents(const CausalGraph& g, UnitId i) { return g.parents(i); }

/// Components via depth-first traversal of the lateral graph.
ReachableSets reachable_sets(const LateralGraph& g);

}  // namespace dynef

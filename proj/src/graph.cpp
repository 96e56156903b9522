#include "dynef/graph.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace dynef {

namespace {

void check_endpoints(int n_units, const std::vector<Edge>& edges, const char* kind) {
  for (const Edge& e : edges) {
    if (e.first < 0 || e.first >= n_units || e.second < 0 || e.second >= n_units) {
      throw std::out_of_range(std::string(kind) + " edge (" + std::to_string(e.first) + "," +
                              std::to_string(e.second) + ") out of range for " +
                              std::to_string(n_units) + " units");
    }
  }
}

}  // namespace

CausalGraph::CausalGraph(int n_units, std::vector<Edge> edges) : n_units_(n_units) {
  if (n_units < 0) throw std::invalid_argument("n_units must be nonnegative");
  check_endpoints(n_units, edges, "causal");
  // canonical order: by destination, then source
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.second, a.first) < std::tie(b.second, b.first);
  });
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw std::invalid_argument("duplicate causal edge");
  edges_ = std::move(edges);

  in_offset_.assign(static_cast<std::size_t>(n_units_) + 1, 0);
  for (const Edge& e : edges_) ++in_offset_[static_cast<std::size_t>(e.second) + 1];
  for (int i = 0; i < n_units_; ++i) in_offset_[i + 1] += in_offset_[i];
  parent_flat_.reserve(edges_.size());
  in_edge_flat_.reserve(edges_.size());
  for (int e = 0; e < n_edges(); ++e) {
    parent_flat_.push_back(edges_[e].first);
    in_edge_flat_.push_back(e);
  }
}

void CausalGraph::check_unit(UnitId i) const {
  if (i < 0 || i >= n_units_)
    throw std::out_of_range("unit " + std::to_string(i) + " out of range");
}

std::span<const UnitId> CausalGraph::parents(UnitId i) const {
  check_unit(i);
  return {parent_flat_.data() + in_offset_[i],
          static_cast<std::size_t>(in_offset_[i + 1] - in_offset_[i])};
}

std::span<const int> CausalGraph::in_edges(UnitId i) const {
  check_unit(i);
  return {in_edge_flat_.data() + in_offset_[i],
          static_cast<std::size_t>(in_offset_[i + 1] - in_offset_[i])};
}

int CausalGraph::first_in_edge(UnitId i) const {
  check_unit(i);
  return in_offset_[i];
}

LateralGraph::LateralGraph(int n_units, std::vector<Edge> edges) : n_units_(n_units) {
  if (n_units < 0) throw std::invalid_argument("n_units must be nonnegative");
  check_endpoints(n_units, edges, "lateral");
  for (Edge& e : edges) {
    if (e.first == e.second)
      throw std::invalid_argument("lateral self-loop {" + std::to_string(e.first) + "," +
                                  std::to_string(e.second) + "} is not allowed");
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw std::invalid_argument("duplicate lateral edge");
  edges_ = std::move(edges);

  adj_offset_.assign(static_cast<std::size_t>(n_units_) + 1, 0);
  for (const Edge& e : edges_) {
    ++adj_offset_[static_cast<std::size_t>(e.first) + 1];
    ++adj_offset_[static_cast<std::size_t>(e.second) + 1];
  }
  for (int i = 0; i < n_units_; ++i) adj_offset_[i + 1] += adj_offset_[i];
  neighbor_flat_.resize(edges_.size() * 2);
  incident_flat_.resize(edges_.size() * 2);
  std::vector<int> cursor(adj_offset_.begin(), adj_offset_.end() - 1);
  for (int e = 0; e < n_edges(); ++e) {
    auto [j, i] = edges_[e];
    neighbor_flat_[cursor[j]] = i;
    incident_flat_[cursor[j]++] = e;
    neighbor_flat_[cursor[i]] = j;
    incident_flat_[cursor[i]++] = e;
  }
  // sort each adjacency range by neighbor id, keeping edge ids aligned
  for (int i = 0; i < n_units_; ++i) {
    int lo = adj_offset_[i], hi = adj_offset_[i + 1];
    std::vector<std::pair<UnitId, int>> tmp;
    tmp.reserve(hi - lo);
    for (int p = lo; p < hi; ++p) tmp.emplace_back(neighbor_flat_[p], incident_flat_[p]);
    std::sort(tmp.begin(), tmp.end());
    for (int p = lo; p < hi; ++p) {
      neighbor_flat_[p] = tmp[p - lo].first;
      incident_flat_[p] = tmp[p - lo].second;
    }
  }
}

void LateralGraph::check_unit(UnitId i) const {
  if (i < 0 || i >= n_units_)
    throw std::out_of_range("unit " + std::to_string(i) + " out of range");
}

std::span<const UnitId> LateralGraph::neighbors(UnitId i) const {
  check_unit(i);
  return {neighbor_flat_.data() + adj_offset_[i],
          static_cast<std::size_t>(adj_offset_[i + 1] - adj_offset_[i])};
}

std::span<const int> LateralGraph::incident_edges(UnitId i) const {
  check_unit(i);
  return {incident_flat_.data() + adj_offset_[i],
          static_cast<std::size_t>(adj_offset_[i + 1] - adj_offset_[i])};
}

int LateralGraph::edge_index(UnitId a, UnitId b) const {
  check_unit(a);
  check_unit(b);
  if (a > b) std::swap(a, b);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{a, b});
  if (it == edges_.end() || *it != Edge{a, b}) return -1;
  return static_cast<int>(it - edges_.begin());
}

ReachableSets reachable_sets(const LateralGraph& g) {
  ReachableSets r;
  int n = g.n_units();
  r.component_of.assign(n, -1);
  r.reachable.resize(n);
  std::vector<UnitId> stack;
  for (UnitId start = 0; start < n; ++start) {
    if (r.component_of[start] >= 0) continue;
    int comp = static_cast<int>(r.components.size());
    r.components.emplace_back();
    stack.push_back(start);
    r.component_of[start] = comp;
    while (!stack.empty()) {
      UnitId u = stack.back();
      stack.pop_back();
      r.components[comp].push_back(u);
      for (UnitId v : g.neighbors(u)) {
        if (r.component_of[v] < 0) {
          r.component_of[v] = comp;
          stack.push_back(v);
        }
      }
    }
    std::sort(r.components[comp].begin(), r.components[comp].end());
  }
  for (UnitId i = 0; i < n; ++i) {
    const auto& comp = r.components[r.component_of[i]];
    auto& ci = r.reachable[i];
    ci.reserve(comp.size() - 1);
    for (UnitId u : comp)
      if (u != i) ci.push_back(u);
  }
  return r;
}

}  // namespace dynef

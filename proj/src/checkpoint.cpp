#include "dynef/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "dynef/common.hpp"

namespace dynef {

using nlohmann::json;

namespace {

json edges_to_json(const std::vector<Edge>& edges) {
  json arr = json::array();
  for (const Edge& e : edges) arr.push_back(json::array({e.first, e.second}));
  return arr;
}

std::vector<Edge> edges_from_json(const json& arr, const char* what) {
  if (!arr.is_array()) throw ConfigError(std::string(what) + " must be an array of [j,i] pairs");
  std::vector<Edge> edges;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw ConfigError(std::string(what) + " entries must be [j,i] integer pairs");
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return edges;
}

}  // namespace

json checkpoint_json(const Model& m) {
  const int na = m.stat_dim();
  json doc;
  doc["format"] = "dynef-checkpoint-v1";
  doc["alphabet"] = {{"C", m.alphabet.n_symbols()}};
  doc["graph"] = {{"n_units", m.n_units()},
                  {"causal_edges", edges_to_json(m.causal.edges())},
                  {"lateral_edges", edges_to_json(m.lateral.edges())}};
  json basis_values = json::array();
  for (int k = 0; k < m.n_basis(); ++k) {
    json row = json::array();
    for (double v : m.bank.taps(k)) row.push_back(v);
    basis_values.push_back(std::move(row));
  }
  doc["basis"] = {{"K", m.n_basis()}, {"tau", m.bank.memory()}, {"values", basis_values}};

  json theta = json::array();
  for (int i = 0; i < m.n_units(); ++i) {
    json row = json::array();
    for (int a = 0; a < na; ++a) row.push_back(m.params.theta[m.theta_off(i) + a]);
    theta.push_back(std::move(row));
  }
  doc["theta"] = std::move(theta);

  json v = json::array();
  for (int e = 0; e < m.causal.n_edges(); ++e) {
    json per_k = json::array();
    for (int k = 0; k < m.n_basis(); ++k) {
      json mat = json::array();
      for (int q = 0; q < na * na; ++q) mat.push_back(m.params.v[m.v_off(e, k) + q]);
      per_k.push_back(std::move(mat));
    }
    v.push_back(std::move(per_k));
  }
  doc["V"] = std::move(v);

  json u = json::array();
  for (int e = 0; e < m.lateral.n_edges(); ++e) {
    json mat = json::array();
    for (int q = 0; q < na * na; ++q) mat.push_back(m.params.u[m.u_off(e) + q]);
    u.push_back(std::move(mat));
  }
  doc["U"] = std::move(u);
  return doc;
}

std::string checkpoint_to_string(const Model& m) { return checkpoint_json(m).dump(1) + "\n"; }

void save_checkpoint(const std::string& path, const Model& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << checkpoint_to_string(m);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint " + path + ": " + e.what());
  }
  try {
    const int c = doc.at("alphabet").at("C").get<int>();
    const int n_units = doc.at("graph").at("n_units").get<int>();
    const auto causal_in = edges_from_json(doc.at("graph").at("causal_edges"), "causal_edges");
    const auto lateral_in = edges_from_json(doc.at("graph").at("lateral_edges"), "lateral_edges");
    std::vector<std::vector<double>> basis_rows;
    for (const auto& row : doc.at("basis").at("values"))
      basis_rows.push_back(row.get<std::vector<double>>());

    Model m(AlphabetSpec(c), BasisBank::custom(basis_rows), CausalGraph(n_units, causal_in),
            LateralGraph(n_units, lateral_in));
    const int na = m.stat_dim();

    const auto& theta = doc.at("theta");
    if (static_cast<int>(theta.size()) != n_units)
      throw ConfigError("theta has wrong unit count");
    for (int i = 0; i < n_units; ++i) {
      const auto row = theta[i].get<std::vector<double>>();
      if (static_cast<int>(row.size()) != na) throw ConfigError("theta row has wrong length");
      std::copy(row.begin(), row.end(), m.params.theta.begin() + m.theta_off(i));
    }

    const auto& v = doc.at("V");
    if (static_cast<int>(v.size()) != m.causal.n_edges())
      throw ConfigError("V has wrong edge count");
    for (std::size_t idx = 0; idx < causal_in.size(); ++idx) {
      // realign: the model's edge ids follow canonical order
      const auto& elist = m.causal.edges();
      const int e = static_cast<int>(
          std::lower_bound(elist.begin(), elist.end(), causal_in[idx],
                           [](const Edge& a, const Edge& b) {
                             return std::tie(a.second, a.first) < std::tie(b.second, b.first);
                           }) -
          elist.begin());
      const auto& per_k = v[idx];
      if (static_cast<int>(per_k.size()) != m.n_basis())
        throw ConfigError("V entry has wrong basis count");
      for (int k = 0; k < m.n_basis(); ++k) {
        const auto mat = per_k[k].get<std::vector<double>>();
        if (static_cast<int>(mat.size()) != na * na)
          throw ConfigError("V matrix has wrong size");
        std::copy(mat.begin(), mat.end(), m.params.v.begin() + m.v_off(e, k));
      }
    }

    const auto& u = doc.at("U");
    if (static_cast<int>(u.size()) != m.lateral.n_edges())
      throw ConfigError("U has wrong edge count");
    for (std::size_t idx = 0; idx < lateral_in.size(); ++idx) {
      const auto [a, b] = lateral_in[idx];
      const bool swapped = a > b;
      const int e = m.lateral.edge_index(a, b);
      const auto mat = u[idx].get<std::vector<double>>();
      if (static_cast<int>(mat.size()) != na * na) throw ConfigError("U matrix has wrong size");
      for (int row = 0; row < na; ++row)
        for (int col = 0; col < na; ++col)
          m.params.u[m.u_off(e) + static_cast<std::size_t>(row) * na + col] =
              swapped ? mat[static_cast<std::size_t>(col) * na + row]
                      : mat[static_cast<std::size_t>(row) * na + col];
    }
    return m;
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint " + path + ": " + e.what());
  }
}

}  // namespace dynef

#pragma once

// Experiment recipes: a strict JSON document describing the bandit model,
// the graph source and the run parameters. Every key is optional; unknown
// keys are errors.
//
//   {
//     "model":   { "means": [40, ...], "sigma_s": 30 },
//     "graph":   { "edge_list": "graph.edges" }            // path relative to the recipe
//              | { "edges": [[1, 2], [2, 3]], "agents": 3 }  // inline, 1-based
//              | { "erdos_renyi": { "agents": 10, "rho": 0.23, "graphs": 100,
//                                   "seed": 1, "attempt_cap": 10000 } },
//     "kappa": 0.75,            // default d_max / (d_max + 1)
//     "gamma": 1.1,
//     "horizon": 1000,
//     "runs": 500,
//     "seed": 1,
//     "schedule": "policy" | "round_robin",
//     "init": "synchronized" | "staggered",
//     "indicator": "per_component" | "diagonal_literal"
//   }
//
// Defaults reproduce the four-agent reference experiment.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "coopucb/bandit.hpp"
#include "coopucb/error.hpp"
#include "coopucb/graph.hpp"
#include "coopucb/sim.hpp"

namespace coopucb {

struct ErdosRenyiSource {
  std::size_t agents = 10;
  double rho = 0.0;
  std::size_t graphs = 1;
  std::uint64_t seed = 1;
  std::size_t attempt_cap = 10000;
};

struct SimulationRecipe {
  BanditModel model = ten_arm_benchmark();
  std::variant<Graph, ErdosRenyiSource> graph = four_agent_reference_graph();
  std::optional<double> kappa;
  double gamma = 1.1;
  std::size_t horizon = 1000;
  std::size_t runs = 500;
  std::uint64_t seed = 1;
  Schedule schedule = Schedule::policy;
  InitMode init = InitMode::synchronized;
  IndicatorReading reading = IndicatorReading::per_component;

  /// One graph for a fixed topology; `graphs` connected samples (seeds
  /// seed, seed+1, ...) for an Erdos-Renyi source.
  std::vector<Graph> graphs() const {
    if (const auto* g = std::get_if<Graph>(&graph)) return {*g};
    const auto& er = std::get<ErdosRenyiSource>(graph);
    std::vector<Graph> out;
    out.reserve(er.graphs);
    for (std::size_t g = 0; g < er.graphs; ++g)
      out.push_back(erdos_renyi(er.agents, er.rho, er.seed + g, er.attempt_cap));
    return out;
  }

  /// Graph `index` gets the run seeds seed + index * runs + r.
  ExperimentConfig experiment(const Graph& g, std::size_t index = 0) const {
    return ExperimentConfig{
        .graph = g,
        .model = model,
        .kappa = kappa,
        .gamma = gamma,
        .horizon = horizon,
        .runs = runs,
        .seed = seed + static_cast<std::uint64_t>(index) * runs,
        .schedule = schedule,
        .init = init,
        .reading = reading,
    };
  }
};

namespace detail {

using nlohmann::json;

inline void expect_keys(const json& obj, const std::string& where,
                        std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_number(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError(where + "." + key + ": expected a nonnegative integer");
  }
  return v.get<T>();
}

inline std::string get_string(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline std::variant<Graph, ErdosRenyiSource> parse_graph(const json& g,
                                                         const std::filesystem::path& base) {
  expect_keys(g, "graph", {"edge_list", "edges", "agents", "erdos_renyi"});
  const int sources = static_cast<int>(g.contains("edge_list")) +
                      static_cast<int>(g.contains("edges")) +
                      static_cast<int>(g.contains("erdos_renyi"));
  if (sources != 1)
    throw ConfigError("graph: give exactly one of 'edge_list', 'edges', 'erdos_renyi'");
  if (g.contains("agents") && !g.contains("edges"))
    throw ConfigError("graph.agents only applies to inline 'edges'");

  if (g.contains("edge_list")) {
    std::filesystem::path p = get_string(g, "edge_list", "graph");
    if (p.is_relative()) p = base / p;
    return load_edge_list(p.string());
  }
  if (g.contains("edges")) {
    const auto& edges = g.at("edges");
    if (!edges.is_array()) throw ConfigError("graph.edges: expected an array of [u, v] pairs");
    std::vector<std::pair<std::size_t, std::size_t>> list;
    std::size_t agents = g.contains("agents") ? get_number<std::size_t>(g, "agents", "graph") : 0;
    for (const auto& e : edges) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
          !e[1].is_number_integer() || e[0].get<long long>() < 1 || e[1].get<long long>() < 1)
        throw ConfigError("graph.edges: each edge must be a pair of 1-based node ids");
      const auto u = e[0].get<std::size_t>();
      const auto v = e[1].get<std::size_t>();
      agents = std::max({agents, u, v});
      list.emplace_back(u - 1, v - 1);
    }
    if (agents == 0) throw ConfigError("graph.edges: no nodes");
    return graph_from_edges(agents, list);
  }
  const auto& er = g.at("erdos_renyi");
  expect_keys(er, "graph.erdos_renyi", {"agents", "rho", "graphs", "seed", "attempt_cap"});
  ErdosRenyiSource src;
  if (!er.contains("agents") || !er.contains("rho"))
    throw ConfigError("graph.erdos_renyi: 'agents' and 'rho' are required");
  src.agents = get_number<std::size_t>(er, "agents", "graph.erdos_renyi");
  src.rho = get_number<double>(er, "rho", "graph.erdos_renyi");
  if (er.contains("graphs")) src.graphs = get_number<std::size_t>(er, "graphs", "graph.erdos_renyi");
  if (er.contains("seed")) src.seed = get_number<std::uint64_t>(er, "seed", "graph.erdos_renyi");
  if (er.contains("attempt_cap"))
    src.attempt_cap = get_number<std::size_t>(er, "attempt_cap", "graph.erdos_renyi");
  if (src.agents < 2) throw ConfigError("graph.erdos_renyi.agents must be at least 2");
  if (!(src.rho > 0.0 && src.rho <= 1.0))
    throw ConfigError("graph.erdos_renyi.rho must lie in (0, 1]");
  if (src.graphs < 1) throw ConfigError("graph.erdos_renyi.graphs must be at least 1");
  return src;
}

}  // namespace detail

inline SimulationRecipe parse_recipe(const nlohmann::json& doc,
                                     const std::filesystem::path& base_dir = ".") {
  using detail::get_number;
  using detail::get_string;
  SimulationRecipe r;
  try {
    detail::expect_keys(doc, "config",
                        {"model", "graph", "kappa", "gamma", "horizon", "runs", "seed",
                         "schedule", "init", "indicator"});
    if (doc.contains("model")) {
      const auto& m = doc.at("model");
      detail::expect_keys(m, "model", {"means", "sigma_s"});
      std::vector<double> means = r.model.means();
      double sigma = r.model.sigma();
      if (m.contains("means")) {
        const auto& arr = m.at("means");
        if (!arr.is_array() || arr.empty())
          throw ConfigError("model.means: expected a nonempty array of numbers");
        means.clear();
        for (const auto& v : arr) {
          if (!v.is_number()) throw ConfigError("model.means: expected numbers");
          means.push_back(v.get<double>());
        }
      }
      if (m.contains("sigma_s")) sigma = get_number<double>(m, "sigma_s", "model");
      r.model = BanditModel(std::move(means), sigma);
    }
    if (doc.contains("graph")) r.graph = detail::parse_graph(doc.at("graph"), base_dir);
    if (doc.contains("kappa")) r.kappa = get_number<double>(doc, "kappa", "config");
    if (doc.contains("gamma")) r.gamma = get_number<double>(doc, "gamma", "config");
    if (doc.contains("horizon")) r.horizon = get_number<std::size_t>(doc, "horizon", "config");
    if (doc.contains("runs")) r.runs = get_number<std::size_t>(doc, "runs", "config");
    if (doc.contains("seed")) r.seed = get_number<std::uint64_t>(doc, "seed", "config");
    if (doc.contains("schedule")) {
      const auto s = get_string(doc, "schedule", "config");
      if (s == "policy") r.schedule = Schedule::policy;
      else if (s == "round_robin") r.schedule = Schedule::round_robin;
      else throw ConfigError("config.schedule: expected 'policy' or 'round_robin'");
    }
    if (doc.contains("init")) {
      const auto s = get_string(doc, "init", "config");
      if (s == "synchronized") r.init = InitMode::synchronized;
      else if (s == "staggered") r.init = InitMode::staggered;
      else throw ConfigError("config.init: expected 'synchronized' or 'staggered'");
    }
    if (doc.contains("indicator")) {
      const auto s = get_string(doc, "indicator", "config");
      if (s == "per_component") r.reading = IndicatorReading::per_component;
      else if (s == "diagonal_literal") r.reading = IndicatorReading::diagonal_literal;
      else throw ConfigError("config.indicator: expected 'per_component' or 'diagonal_literal'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!(r.gamma > 1.0)) throw ConfigError("config.gamma must be strictly greater than 1");
  if (r.runs < 1) throw ConfigError("config.runs must be at least 1");
  if (r.horizon < r.model.arms())
    throw ConfigError("config.horizon must be at least the number of arms");
  if (r.kappa && !(*r.kappa > 0.0)) throw ConfigError("config.kappa must be positive");
  return r;
}

inline SimulationRecipe load_recipe(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return parse_recipe(doc, path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace coopucb

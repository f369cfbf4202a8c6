#pragma once

// Command-line front end. Kept in a header so the test suite can drive the
// exact code path the binary runs.
//
//   coopucb analyze-graph --edges <file> [--kappa <k>] [--indicator <reading>] [--eigenvectors]
//   coopucb simulate --config <file> [--out-dir <dir>] [--threads <n>] [--runs <n>]
//   coopucb bounds --config <file> [--empirical <pulls.csv>]
//
// Exit codes: 0 success, 1 validation error, 2 runtime invariant failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coopucb/config.hpp"
#include "coopucb/csv.hpp"
#include "coopucb/error.hpp"
#include "coopucb/graph.hpp"
#include "coopucb/sim.hpp"
#include "coopucb/spectral.hpp"
#include "coopucb/stats.hpp"

namespace coopucb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitInvariant = 2;

/// Environment variable naming the default --out-dir.
inline constexpr const char* kOutDirEnv = "COOPUCB_OUT_DIR";

inline IndicatorReading parse_reading(const std::string& s) {
  if (s == "per_component") return IndicatorReading::per_component;
  if (s == "diagonal_literal") return IndicatorReading::diagonal_literal;
  throw ValidationError("unknown indicator reading '" + s + "'");
}

/// eps_n row, eigenvalue row, optional eigenvector rows, then one row per
/// agent (1-based ids).
inline std::string analyze_graph_csv(const Graph& g, std::optional<double> kappa,
                                     IndicatorReading reading = IndicatorReading::per_component,
                                     bool eigenvectors = false) {
  const auto cm = build_consensus_matrix(g, kappa.value_or(default_kappa(g)));
  const auto metrics = spectral_metrics(cm, reading);
  std::ostringstream out;
  out << (csv::Row() << "eps_n" << metrics.eps_n).str() << '\n';
  csv::Row ev;
  ev << "eigenvalues";
  for (Eigen::Index p = 0; p < cm.eigenvalues().size(); ++p) ev << cm.eigenvalues()(p);
  out << ev.str() << '\n';
  if (eigenvectors) {
    for (Eigen::Index p = 0; p < cm.eigenvectors().cols(); ++p) {
      csv::Row row;
      row << "eigenvector_" + std::to_string(p + 1);
      for (Eigen::Index d = 0; d < cm.eigenvectors().rows(); ++d) row << cm.eigenvectors()(d, p);
      out << row.str() << '\n';
    }
  }
  out << "agent,degree,eps_c,varsigma,centralized_equivalent\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    out << (csv::Row() << k + 1 << g.degree(k) << metrics.eps_c[k] << metrics.varsigma[k]
                       << metrics.centralized_equivalent(k))
               .str()
        << '\n';
  }
  return out.str();
}

struct GraphOutcome {
  Graph graph;
  SpectralMetrics metrics;
  EnsembleResult ensemble;
};

inline std::vector<GraphOutcome> simulate_recipe(const SimulationRecipe& recipe,
                                                 std::size_t threads) {
  std::vector<GraphOutcome> out;
  const auto graphs = recipe.graphs();
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Experiment experiment(recipe.experiment(graphs[gi], gi));
    out.push_back({graphs[gi], experiment.metrics(), run_ensemble(experiment, threads)});
  }
  return out;
}

/// t,agent,mean_regret,stderr for a single-graph simulation.
inline std::string trajectory_csv(const EnsembleResult& e) {
  std::ostringstream out;
  out << "t,agent,mean_regret,stderr\n";
  for (std::size_t t = 1; t <= e.horizon; ++t)
    for (std::size_t k = 0; k < e.agents; ++k)
      out << (csv::Row() << t << k + 1 << e.mean_at(t, k) << e.stderr_at(t, k)).str() << '\n';
  return out.str();
}

inline std::string summary_csv(const std::vector<GraphOutcome>& outcomes) {
  std::ostringstream out;
  out << "graph,agent,degree,eps_c,varsigma,final_regret,stderr\n";
  for (std::size_t gi = 0; gi < outcomes.size(); ++gi) {
    const auto& o = outcomes[gi];
    for (std::size_t k = 0; k < o.graph.size(); ++k)
      out << (csv::Row() << gi + 1 << k + 1 << o.graph.degree(k) << o.metrics.eps_c[k]
                         << o.metrics.varsigma[k] << o.ensemble.final_mean[k]
                         << o.ensemble.final_stderr[k])
                 .str()
          << '\n';
  }
  return out.str();
}

inline std::string pulls_csv(const std::vector<GraphOutcome>& outcomes, const BanditModel& model) {
  std::ostringstream out;
  out << "graph,arm,delta,mean_group_pulls,stderr\n";
  for (std::size_t gi = 0; gi < outcomes.size(); ++gi)
    for (std::size_t i = 0; i < model.arms(); ++i)
      out << (csv::Row() << gi + 1 << i + 1 << model.gap(i)
                         << outcomes[gi].ensemble.group_pulls_mean[i]
                         << outcomes[gi].ensemble.group_pulls_stderr[i])
                 .str()
          << '\n';
  return out.str();
}

inline std::string runs_csv(const std::vector<GraphOutcome>& outcomes) {
  std::ostringstream out;
  out << "graph,run,seed,agent,final_regret,realized_regret\n";
  for (std::size_t gi = 0; gi < outcomes.size(); ++gi) {
    const auto& runs = outcomes[gi].ensemble.per_run;
    for (std::size_t r = 0; r < runs.size(); ++r)
      for (std::size_t k = 0; k < runs[r].final_regret.size(); ++k)
        out << (csv::Row() << gi + 1 << r + 1 << runs[r].seed << k + 1 << runs[r].final_regret[k]
                           << runs[r].realized_regret[k])
                   .str()
            << '\n';
  }
  return out.str();
}

/// Spearman correlation of (varsigma, final regret) over agents with finite
/// varsigma; nullopt when fewer than two such agents exist.
inline std::optional<double> certainty_regret_correlation(const std::vector<GraphOutcome>& outcomes) {
  std::vector<double> certainty;
  std::vector<double> regret;
  for (const auto& o : outcomes)
    for (std::size_t k = 0; k < o.graph.size(); ++k)
      if (std::isfinite(o.metrics.varsigma[k])) {
        certainty.push_back(o.metrics.varsigma[k]);
        regret.push_back(o.ensemble.final_mean[k]);
      }
  if (certainty.size() < 2) return std::nullopt;
  return spearman(certainty, regret);
}

/// (graph, arm) -> mean group pulls, read from a simulate pulls.csv.
inline std::map<std::pair<std::size_t, std::size_t>, double> read_empirical_pulls(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open empirical pulls '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty empirical pulls file");
  const auto header = csv::split(line);
  auto column = [&](const std::string& name) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    throw ValidationError("empirical pulls file lacks column '" + name + "'");
  };
  const auto graph_col = column("graph");
  const auto arm_col = column("arm");
  const auto pulls_col = column("mean_group_pulls");
  std::map<std::pair<std::size_t, std::size_t>, double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != header.size()) throw ValidationError("malformed empirical pulls row: " + line);
    out[{static_cast<std::size_t>(csv::parse_number(f[graph_col])),
         static_cast<std::size_t>(csv::parse_number(f[arm_col]))}] =
        csv::parse_number(f[pulls_col]);
  }
  return out;
}

inline std::string bounds_csv(
    const SimulationRecipe& recipe,
    const std::optional<std::map<std::pair<std::size_t, std::size_t>, double>>& empirical) {
  std::size_t suboptimal = 0;
  for (std::size_t i = 0; i < recipe.model.arms(); ++i) suboptimal += recipe.model.gap(i) > 0.0;
  if (suboptimal == 0) throw ValidationError("bounds: model has no suboptimal arm");

  std::ostringstream out;
  out << "graph,arm,delta,theorem1_bound,fusion_lower_bound,bound_over_fusion";
  if (empirical) out << ",empirical_group_pulls,empirical_over_bound";
  out << '\n';
  const auto graphs = recipe.graphs();
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Experiment experiment(recipe.experiment(graphs[gi], gi));
    for (const auto& row : bound_table(experiment)) {
      csv::Row r;
      r << gi + 1 << row.arm + 1 << row.delta << row.bound << row.fusion_lower_bound
        << row.bound / row.fusion_lower_bound;
      if (empirical) {
        const auto it = empirical->find({gi + 1, row.arm + 1});
        if (it == empirical->end())
          throw ValidationError("empirical pulls file has no row for graph " +
                                std::to_string(gi + 1) + ", arm " + std::to_string(row.arm + 1));
        r << it->second << it->second / row.bound;
      }
      out << r.str() << '\n';
    }
  }
  return out.str();
}

namespace detail {

/// Writes files into a directory and deletes everything it wrote if the
/// command fails before commit().
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : written_) std::filesystem::remove(p, ec);
  }

  std::filesystem::path write(const std::string& name, const std::string& content) {
    std::filesystem::create_directories(dir_);
    const auto path = dir_ / name;
    written_.push_back(path);
    std::ofstream file(path, std::ios::binary);
    if (!file) throw ValidationError("cannot write '" + path.string() + "'");
    file << content;
    if (!file) throw ValidationError("write failed for '" + path.string() + "'");
    return path;
  }

  void commit() { committed_ = true; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
  bool committed_ = false;
};

inline std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return ".";
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cooperative UCB on communication graphs: spectral analysis, simulation, bounds",
               "coopucb"};
  app.require_subcommand(1);

  auto* analyze = app.add_subcommand("analyze-graph", "Spectral explore-exploit measures of a graph");
  std::string edges_path;
  std::optional<double> kappa;
  std::string reading_name = "per_component";
  bool show_eigenvectors = false;
  std::string analyze_output;
  analyze->add_option("--edges", edges_path, "Edge-list file ('u v' per line, 1-based)")->required();
  analyze->add_option("--kappa", kappa, "Consensus step size (default d_max/(d_max+1))");
  analyze->add_option("--indicator", reading_name, "per_component | diagonal_literal");
  analyze->add_flag("--eigenvectors", show_eigenvectors, "Also print the eigenbasis");
  analyze->add_option("--output", analyze_output, "Write CSV here instead of stdout");

  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment recipe");
  std::string sim_config;
  std::string out_dir;
  std::size_t threads = default_thread_count();
  std::optional<std::size_t> runs_override;
  simulate->add_option("--config", sim_config, "Recipe (JSON)")->required();
  simulate->add_option("--out-dir", out_dir, std::string("Output directory (default $") +
                                                 kOutDirEnv + " or .)");
  simulate->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  simulate->add_option("--runs", runs_override, "Override the recipe's Monte Carlo run count")
      ->check(CLI::PositiveNumber);

  auto* bounds = app.add_subcommand("bounds", "Regret bound table for a recipe");
  std::string bounds_config;
  std::string empirical_path;
  bounds->add_option("--config", bounds_config, "Recipe (JSON)")->required();
  bounds->add_option("--empirical", empirical_path, "pulls.csv written by simulate");

  std::vector<const char*> argv{"coopucb"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (analyze->parsed()) {
      const auto graph = load_edge_list(edges_path);
      const auto text = analyze_graph_csv(graph, kappa, parse_reading(reading_name), show_eigenvectors);
      if (analyze_output.empty()) {
        out << text;
      } else {
        detail::OutputSet files(std::filesystem::path(analyze_output).parent_path().empty()
                                    ? std::filesystem::path(".")
                                    : std::filesystem::path(analyze_output).parent_path());
        files.write(std::filesystem::path(analyze_output).filename().string(), text);
        files.commit();
      }
      return kExitOk;
    }

    if (simulate->parsed()) {
      auto recipe = load_recipe(sim_config);
      if (runs_override) recipe.runs = *runs_override;
      detail::OutputSet files(out_dir.empty() ? detail::default_out_dir() : std::filesystem::path(out_dir));
      const auto outcomes = simulate_recipe(recipe, threads);
      if (outcomes.size() == 1) files.write("trajectory.csv", trajectory_csv(outcomes[0].ensemble));
      files.write("summary.csv", summary_csv(outcomes));
      files.write("pulls.csv", pulls_csv(outcomes, recipe.model));
      files.write("runs.csv", runs_csv(outcomes));
      files.commit();

      out << "graphs: " << outcomes.size() << ", runs per graph: " << recipe.runs
          << ", horizon: " << recipe.horizon << '\n';
      if (outcomes.size() == 1) {
        const auto& o = outcomes[0];
        out << "eps_n: " << csv::format_number(o.metrics.eps_n) << '\n';
        out << "agent,eps_c,varsigma,final_regret,stderr\n";
        for (std::size_t k = 0; k < o.graph.size(); ++k)
          out << (csv::Row() << k + 1 << o.metrics.eps_c[k] << o.metrics.varsigma[k]
                             << o.ensemble.final_mean[k] << o.ensemble.final_stderr[k])
                     .str()
              << '\n';
      }
      if (const auto rho = certainty_regret_correlation(outcomes); rho && outcomes.size() > 1)
        out << "spearman(varsigma, final_regret): " << csv::format_number(*rho) << '\n';
      return kExitOk;
    }

    if (bounds->parsed()) {
      const auto recipe = load_recipe(bounds_config);
      std::optional<std::map<std::pair<std::size_t, std::size_t>, double>> empirical;
      if (!empirical_path.empty()) empirical = read_empirical_pulls(empirical_path);
      out << bounds_csv(recipe, empirical);
      return kExitOk;
    }
  } catch (const InvariantViolation& e) {
    err << "invariant failure: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace coopucb::cli

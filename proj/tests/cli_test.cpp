#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "coopucb/cli.hpp"

using namespace coopucb;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("coopucb_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::map<std::string, std::string> golden_headers() {
  std::map<std::string, std::string> out;
  for (const auto& line : lines(slurp(fs::path(COOPUCB_SOURCE_DIR) / "tests/golden/csv_headers.txt"))) {
    const auto colon = line.find(':');
    out[line.substr(0, colon)] = line.substr(colon + 1);
  }
  return out;
}

std::string recipe_path() { return (fs::path(COOPUCB_SOURCE_DIR) / "recipes/four_agent.edges").string(); }

// Rows after the per-agent header of analyze-graph output.
std::vector<std::vector<std::string>> agent_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  bool seen = false;
  for (const auto& line : lines(text)) {
    if (seen) rows.push_back(csv::split(line));
    if (line.rfind("agent,", 0) == 0) seen = true;
  }
  return rows;
}

}  // namespace

TEST(AnalyzeGraph, ReferenceGraphGoldenValues) {
  const auto r = run_cli({"analyze-graph", "--edges", recipe_path()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto all = lines(r.out);
  ASSERT_GE(all.size(), 3u);
  EXPECT_EQ(all[0].rfind("eps_n,", 0), 0u);
  EXPECT_EQ(all[1].rfind("eigenvalues,", 0), 0u);
  EXPECT_EQ(all[2], golden_headers().at("analyze-graph"));
  const auto rows = agent_rows(r.out);
  ASSERT_EQ(rows.size(), 4u);
  const double expected[] = {2.31, 2.31, 0.0, 5.43};
  const int degrees[] = {2, 2, 3, 1};
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(rows[k][0], std::to_string(k + 1));
    EXPECT_EQ(rows[k][1], std::to_string(degrees[k]));
    EXPECT_NEAR(std::round(csv::parse_number(rows[k][2]) * 100) / 100, expected[k], 1e-12);
  }
  EXPECT_EQ(rows[2][3], "inf");
  EXPECT_EQ(rows[2][4], "true");
  EXPECT_EQ(rows[3][4], "false");
}

TEST(AnalyzeGraph, RoundTripIsExact) {
  for (const auto& g : {four_agent_reference_graph(), path_graph(5), star_graph(6), erdos_renyi(8, 0.4, 3)}) {
    const auto dir = scratch("roundtrip");
    const auto path = write_file(dir / "g.edges", to_edge_list(g));
    const auto r = run_cli({"analyze-graph", "--edges", path.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto cm = build_consensus_matrix(g);
    const auto metrics = spectral_metrics(cm);
    const auto all = lines(r.out);
    EXPECT_EQ(csv::parse_number(csv::split(all[0])[1]), metrics.eps_n);
    const auto ev = csv::split(all[1]);
    ASSERT_EQ(ev.size(), g.size() + 1);
    for (std::size_t p = 0; p < g.size(); ++p)
      EXPECT_EQ(csv::parse_number(ev[p + 1]), cm.eigenvalues()(static_cast<Eigen::Index>(p)));
    const auto rows = agent_rows(r.out);
    for (std::size_t k = 0; k < g.size(); ++k) {
      EXPECT_EQ(csv::parse_number(rows[k][2]), metrics.eps_c[k]);
      EXPECT_EQ(csv::parse_number(rows[k][3]), metrics.varsigma[k]);
    }
  }
}

TEST(AnalyzeGraph, CompleteGraphIsCentralized) {
  const auto dir = scratch("complete");
  const auto path = write_file(dir / "k4.edges", to_edge_list(complete_graph(4)));
  const auto r = run_cli({"analyze-graph", "--edges", path.string(), "--kappa", "0.75"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out)[0], "eps_n,0");
  for (const auto& row : agent_rows(r.out)) {
    EXPECT_EQ(row[2], "0");
    EXPECT_EQ(row[3], "inf");
    EXPECT_EQ(row[4], "true");
  }
}

TEST(AnalyzeGraph, SingleNode) {
  const auto dir = scratch("single");
  const auto path = write_file(dir / "one.edges", "1\n");
  const auto r = run_cli({"analyze-graph", "--edges", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out)[0], "eps_n,0");
  EXPECT_EQ(agent_rows(r.out).size(), 1u);
}

TEST(AnalyzeGraph, EigenvectorsAndOutputFile) {
  const auto dir = scratch("vectors");
  const auto out_file = dir / "analysis.csv";
  const auto r = run_cli({"analyze-graph", "--edges", recipe_path(), "--eigenvectors", "--output",
                          out_file.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  const auto all = lines(slurp(out_file));
  EXPECT_EQ(all[2].rfind("eigenvector_1,", 0), 0u);
  EXPECT_EQ(all[5].rfind("eigenvector_4,", 0), 0u);
  EXPECT_EQ(csv::split(all[2]).size(), 5u);
}

TEST(AnalyzeGraph, Errors) {
  const auto r = run_cli({"analyze-graph", "--edges",
                          (fs::path(COOPUCB_SOURCE_DIR) / "tests/data/disconnected.edges").string()});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("disconnected"), std::string::npos) << r.err;
  EXPECT_EQ(run_cli({"analyze-graph", "--edges", recipe_path(), "--kappa", "2"}).code, cli::kExitValidation);
  EXPECT_EQ(run_cli({"analyze-graph", "--edges", "/nonexistent.edges"}).code, cli::kExitValidation);
  EXPECT_EQ(run_cli({"analyze-graph", "--edges", recipe_path(), "--indicator", "kk"}).code,
            cli::kExitValidation);
  EXPECT_EQ(run_cli({"analyze-graph"}).code, cli::kExitValidation);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitValidation);
  EXPECT_EQ(run_cli({}).code, cli::kExitValidation);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
}

TEST(Simulate, OutputsAndSchema) {
  const auto dir = scratch("simulate");
  const auto cfg = write_file(dir / "r.json", R"({"graph": {"edge_list": ")" + recipe_path() +
                                                  R"("}, "horizon": 40, "runs": 6})");
  const auto out = dir / "out";
  const auto r = run_cli({"simulate", "--config", cfg.string(), "--out-dir", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto headers = golden_headers();
  for (const char* name : {"trajectory.csv", "summary.csv", "pulls.csv", "runs.csv"})
    EXPECT_EQ(lines(slurp(out / name)).at(0), headers.at(name)) << name;

  const auto traj = lines(slurp(out / "trajectory.csv"));
  ASSERT_EQ(traj.size(), 1u + 40u * 4u);
  EXPECT_EQ(traj[1].rfind("1,1,", 0), 0u);
  EXPECT_EQ(traj[4].rfind("1,4,", 0), 0u);
  EXPECT_EQ(traj[5].rfind("2,1,", 0), 0u);
  EXPECT_EQ(lines(slurp(out / "summary.csv")).size(), 5u);
  EXPECT_EQ(lines(slurp(out / "pulls.csv")).size(), 11u);
  EXPECT_EQ(lines(slurp(out / "runs.csv")).size(), 1u + 6u * 4u);
}

TEST(Simulate, InitializationOnlyRegret) {
  const auto dir = scratch("init_only");
  const auto cfg = write_file(dir / "r.json", R"({"horizon": 10, "runs": 1})");
  const auto r = run_cli({"simulate", "--config", cfg.string(), "--out-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  double init = 0.0;
  for (double d : ten_arm_benchmark().gaps()) init += d;
  const auto rows = lines(slurp(dir / "summary.csv"));
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto f = csv::split(rows[k]);
    EXPECT_EQ(csv::parse_number(f[5]), init);
    EXPECT_EQ(csv::parse_number(f[6]), 0.0);
  }
}

TEST(Simulate, ThreadCountDoesNotChangeOutput) {
  const auto dir = scratch("threads");
  const auto cfg = write_file(dir / "r.json", R"({"horizon": 150, "runs": 25})");
  ASSERT_EQ(run_cli({"simulate", "--config", cfg.string(), "--out-dir", (dir / "a").string(), "--threads", "1"}).code, 0);
  ASSERT_EQ(run_cli({"simulate", "--config", cfg.string(), "--out-dir", (dir / "b").string(), "--threads", "5"}).code, 0);
  for (const char* name : {"trajectory.csv", "summary.csv", "pulls.csv", "runs.csv"})
    EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;
}

TEST(Simulate, MultiGraphRecipe) {
  const auto dir = scratch("multi");
  const auto cfg = write_file(dir / "r.json",
                              R"({"graph": {"erdos_renyi": {"agents": 5, "rho": 0.5, "graphs": 3}},
                                  "horizon": 60, "runs": 4})");
  const auto r = run_cli({"simulate", "--config", cfg.string(), "--out-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_FALSE(fs::exists(dir / "trajectory.csv"));
  EXPECT_EQ(lines(slurp(dir / "summary.csv")).size(), 1u + 15u);
  EXPECT_NE(r.out.find("spearman"), std::string::npos);
}

TEST(Simulate, EnvironmentSetsDefaultOutDir) {
  const auto dir = scratch("env");
  const auto cfg = write_file(dir / "r.json", R"({"horizon": 12, "runs": 2})");
  ::setenv(cli::kOutDirEnv, (dir / "from_env").c_str(), 1);
  const auto r = run_cli({"simulate", "--config", cfg.string()});
  ::unsetenv(cli::kOutDirEnv);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "from_env" / "summary.csv"));
}

TEST(Simulate, FailuresLeaveNoOutputs) {
  const auto dir = scratch("fail");
  const auto out = dir / "out";
  const auto r = run_cli({"simulate", "--config",
                          (fs::path(COOPUCB_SOURCE_DIR) / "tests/data/negative_weights.json").string(),
                          "--out-dir", out.string()});
  EXPECT_EQ(r.code, cli::kExitInvariant);
  EXPECT_NE(r.err.find("invariant"), std::string::npos);
  EXPECT_TRUE(!fs::exists(out) || fs::is_empty(out));

  const auto bad = write_file(dir / "bad.json", R"({"runz": 3})");
  EXPECT_EQ(run_cli({"simulate", "--config", bad.string(), "--out-dir", out.string()}).code,
            cli::kExitValidation);
  EXPECT_TRUE(!fs::exists(out) || fs::is_empty(out));
}

TEST(OutputSet, RemovesUncommittedFiles) {
  const auto dir = scratch("outputset");
  {
    cli::detail::OutputSet files(dir);
    files.write("a.csv", "x\n");
    EXPECT_TRUE(fs::exists(dir / "a.csv"));
  }
  EXPECT_FALSE(fs::exists(dir / "a.csv"));
  {
    cli::detail::OutputSet files(dir);
    files.write("b.csv", "y\n");
    files.commit();
  }
  EXPECT_TRUE(fs::exists(dir / "b.csv"));
}

TEST(Bounds, SingleAgentWorkedExample) {
  const auto dir = scratch("bounds");
  const auto cfg = write_file(dir / "r.json", R"({"graph": {"edges": [], "agents": 1}})");
  const auto r = run_cli({"bounds", "--config", cfg.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto all = lines(r.out);
  EXPECT_EQ(all[0], golden_headers().at("bounds"));
  ASSERT_EQ(all.size(), 10u);
  // Delta = 5 is arm 8 of the benchmark.
  const auto arm8 = csv::split(all[8]);
  EXPECT_EQ(arm8[1], "8");
  EXPECT_EQ(arm8[2], "5");
  EXPECT_EQ(csv::parse_number(arm8[3]), 2200.0);
}

TEST(Bounds, RatioApproachesFourGamma) {
  const auto dir = scratch("bounds_ratio");
  for (double gamma : {1.1, 2.0}) {
    const auto cfg = write_file(dir / "r.json", R"({"graph": {"edges": [], "agents": 1}, "horizon": 1000000, "gamma": )" +
                                                    csv::format_number(gamma) + "}");
    const auto r = run_cli({"bounds", "--config", cfg.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto arm9 = csv::split(lines(r.out)[9]);
    EXPECT_EQ(arm9[1], "9");
    EXPECT_NEAR(csv::parse_number(arm9[5]) / (4 * gamma), 1.0, 0.02);
  }
}

TEST(Bounds, LargerGammaLargerBound) {
  const auto dir = scratch("bounds_gamma");
  const auto a = write_file(dir / "a.json", R"({"gamma": 1.1})");
  const auto b = write_file(dir / "b.json", R"({"gamma": 2})");
  const auto ra = lines(run_cli({"bounds", "--config", a.string()}).out);
  const auto rb = lines(run_cli({"bounds", "--config", b.string()}).out);
  ASSERT_EQ(ra.size(), rb.size());
  for (std::size_t i = 1; i < ra.size(); ++i)
    EXPECT_GT(csv::parse_number(csv::split(rb[i])[3]), csv::parse_number(csv::split(ra[i])[3]));
}

TEST(Bounds, EmpiricalColumns) {
  const auto dir = scratch("bounds_empirical");
  const auto cfg = write_file(dir / "r.json", R"({"horizon": 200, "runs": 10})");
  ASSERT_EQ(run_cli({"simulate", "--config", cfg.string(), "--out-dir", dir.string()}).code, 0);
  const auto r = run_cli({"bounds", "--config", cfg.string(), "--empirical", (dir / "pulls.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto all = lines(r.out);
  EXPECT_EQ(all[0], golden_headers().at("bounds --empirical"));
  for (std::size_t i = 1; i < all.size(); ++i) {
    const auto f = csv::split(all[i]);
    ASSERT_EQ(f.size(), 8u);
    EXPECT_LE(csv::parse_number(f[7]), 1.0);
  }
}

TEST(Bounds, SingleArmModelFails) {
  const auto dir = scratch("bounds_single_arm");
  const auto cfg = write_file(dir / "r.json", R"({"model": {"means": [1]}})");
  EXPECT_EQ(run_cli({"bounds", "--config", cfg.string()}).code, cli::kExitValidation);
}

TEST(Binary, ExitCodes) {
  const std::string cli = COOPUCB_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(s);
  };
  EXPECT_EQ(status(cli + " analyze-graph --edges " + recipe_path()), 0);
  EXPECT_EQ(status(cli + " analyze-graph --edges " + std::string(COOPUCB_SOURCE_DIR) + "/tests/data/disconnected.edges"), 1);
  const auto dir = scratch("binary");
  EXPECT_EQ(status(cli + " simulate --config " + std::string(COOPUCB_SOURCE_DIR) +
                   "/tests/data/negative_weights.json --out-dir " + dir.string()),
            2);
}

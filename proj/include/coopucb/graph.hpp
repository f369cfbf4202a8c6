#pragma once

// Communication graphs and the consensus matrix P = I - (kappa / d_max) L.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "coopucb/error.hpp"

namespace coopucb {

/// Undirected, connected, simple graph over agents 0..M-1.
class Graph {
 public:
  const Eigen::MatrixXi& adjacency() const noexcept { return adjacency_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(adjacency_.rows()); }

  int degree(std::size_t k) const { return adjacency_.row(static_cast<Eigen::Index>(k)).sum(); }
  int max_degree() const { return size() == 0 ? 0 : adjacency_.rowwise().sum().maxCoeff(); }
  std::size_t edge_count() const { return static_cast<std::size_t>(adjacency_.sum() / 2); }

  bool has_edge(std::size_t a, std::size_t b) const {
    return adjacency_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) != 0;
  }

  /// 0-based (a, b) pairs with a < b, row-major order.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t a = 0; a < size(); ++a)
      for (std::size_t b = a + 1; b < size(); ++b)
        if (has_edge(a, b)) out.emplace_back(a, b);
    return out;
  }

  friend bool operator==(const Graph& lhs, const Graph& rhs) {
    return lhs.adjacency_ == rhs.adjacency_;
  }

 private:
  explicit Graph(Eigen::MatrixXi adjacency) : adjacency_(std::move(adjacency)) {}
  friend Graph build_graph(const Eigen::MatrixXi& adjacency);

  Eigen::MatrixXi adjacency_;
};

namespace detail {

inline bool is_connected(const Eigen::MatrixXi& adjacency) {
  const auto m = adjacency.rows();
  if (m <= 1) return true;
  std::vector<char> seen(static_cast<std::size_t>(m), 0);
  std::vector<Eigen::Index> stack{0};
  seen[0] = 1;
  Eigen::Index reached = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (Eigen::Index w = 0; w < m; ++w) {
      if (adjacency(v, w) != 0 && !seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  return reached == m;
}

}  // namespace detail

/// Validates a 0/1 adjacency matrix. Each failure mode raises a GraphError
/// with its own kind.
inline Graph build_graph(const Eigen::MatrixXi& adjacency) {
  if (adjacency.rows() == 0) throw GraphError(GraphErrorKind::empty, "graph has no nodes");
  if (adjacency.rows() != adjacency.cols())
    throw GraphError(GraphErrorKind::not_square, "adjacency matrix is not square");
  const auto m = adjacency.rows();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const int v = adjacency(i, j);
      if (v != 0 && v != 1)
        throw GraphError(GraphErrorKind::not_binary, "adjacency entries must be 0 or 1");
    }
  }
  for (Eigen::Index i = 0; i < m; ++i)
    if (adjacency(i, i) != 0)
      throw GraphError(GraphErrorKind::self_loop,
                       "self-loop at node " + std::to_string(i + 1));
  if (adjacency != adjacency.transpose())
    throw GraphError(GraphErrorKind::not_symmetric, "adjacency matrix is not symmetric");
  if (!detail::is_connected(adjacency))
    throw GraphError(GraphErrorKind::disconnected, "graph is disconnected");
  return Graph(adjacency);
}

/// Builds a graph from 0-based undirected edges.
inline Graph graph_from_edges(std::size_t agents,
                              const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  Eigen::MatrixXi adjacency = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(agents),
                                                    static_cast<Eigen::Index>(agents));
  for (const auto& [a, b] : edges) {
    if (a >= agents || b >= agents)
      throw GraphError(GraphErrorKind::bad_edge_list, "edge endpoint out of range");
    if (a == b)
      throw GraphError(GraphErrorKind::self_loop, "self-loop at node " + std::to_string(a + 1));
    adjacency(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = 1;
    adjacency(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = 1;
  }
  return build_graph(adjacency);
}

inline Graph complete_graph(std::size_t agents) {
  Eigen::MatrixXi adjacency = Eigen::MatrixXi::Ones(static_cast<Eigen::Index>(agents),
                                                    static_cast<Eigen::Index>(agents));
  adjacency.diagonal().setZero();
  return build_graph(adjacency);
}

inline Graph path_graph(std::size_t agents) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t a = 0; a + 1 < agents; ++a) edges.emplace_back(a, a + 1);
  return graph_from_edges(agents, edges);
}

inline Graph star_graph(std::size_t agents) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t a = 1; a < agents; ++a) edges.emplace_back(0, a);
  return graph_from_edges(agents, edges);
}

/// Triangle on agents {1,2,3} with agent 4 hanging off agent 3 (1-based).
/// This is the fixed four-agent network of the reference regret experiment.
inline Graph four_agent_reference_graph() {
  return graph_from_edges(4, {{0, 1}, {0, 2}, {1, 2}, {2, 3}});
}

/// Parses "u v" lines with 1-based ids. Blank lines and anything after '#'
/// are ignored. A line with a single id declares that node without edges,
/// which is the only way to describe a one-node graph.
inline Graph read_edge_list(std::istream& in) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::size_t agents = 0;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw GraphError(GraphErrorKind::bad_edge_list,
                     "edge list line " + std::to_string(line_no) + ": " + why);
  };
  auto parse_id = [&](const std::string& token) -> std::size_t {
    std::size_t pos = 0;
    long long id = 0;
    try {
      id = std::stoll(token, &pos);
    } catch (const std::exception&) {
      fail("'" + token + "' is not a node id");
    }
    if (pos != token.size()) fail("'" + token + "' is not a node id");
    if (id < 1) fail("node ids are 1-based");
    return static_cast<std::size_t>(id);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::vector<std::string> fields;
    for (std::string tok; tokens >> tok;) fields.push_back(tok);
    if (fields.empty()) continue;
    if (fields.size() > 2) fail("expected 'u v'");
    const auto u = parse_id(fields[0]);
    agents = std::max(agents, u);
    if (fields.size() == 2) {
      const auto v = parse_id(fields[1]);
      agents = std::max(agents, v);
      edges.emplace_back(u - 1, v - 1);
    }
  }
  if (agents == 0) throw GraphError(GraphErrorKind::empty, "edge list declares no nodes");
  return graph_from_edges(agents, edges);
}

inline Graph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GraphError(GraphErrorKind::bad_edge_list, "cannot open edge list '" + path + "'");
  return read_edge_list(in);
}

inline std::string to_edge_list(const Graph& g) {
  std::ostringstream out;
  if (g.size() == 1) out << "1\n";
  for (const auto& [a, b] : g.edges()) out << a + 1 << ' ' << b + 1 << '\n';
  return out.str();
}

/// L = D - A.
inline Eigen::MatrixXd laplacian(const Graph& g) {
  const Eigen::MatrixXd a = g.adjacency().cast<double>();
  Eigen::MatrixXd l = -a;
  l.diagonal() = a.rowwise().sum();
  return l;
}

/// Erdos-Renyi G(M, rho), resampled whole until connected.
inline Graph erdos_renyi(std::size_t agents, double rho, std::uint64_t seed,
                         std::size_t attempt_cap = 10000) {
  if (agents < 2) throw ValidationError("erdos_renyi needs at least 2 agents");
  if (!(rho > 0.0 && rho <= 1.0)) throw ValidationError("erdos_renyi needs 0 < rho <= 1");
  std::seed_seq seq{seed};
  std::mt19937_64 engine(seq);
  std::bernoulli_distribution coin(rho);
  const auto m = static_cast<Eigen::Index>(agents);
  Eigen::MatrixXi adjacency(m, m);
  for (std::size_t attempt = 0; attempt < attempt_cap; ++attempt) {
    adjacency.setZero();
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j)
        if (coin(engine)) adjacency(i, j) = adjacency(j, i) = 1;
    if (detail::is_connected(adjacency)) return build_graph(adjacency);
  }
  throw GraphError(GraphErrorKind::connectivity_cap_exceeded, "connectivity cap exceeded");
}

/// d_max / (d_max + 1). Keeps every diagonal entry of P positive and the
/// spectrum inside (-1, 1]; on K_M it gives P = (1/M) 11^T.
inline double default_kappa(const Graph& g) {
  const int dmax = g.max_degree();
  return dmax == 0 ? 1.0 : static_cast<double>(dmax) / (dmax + 1);
}

/// P together with its eigendecomposition. Eigenpairs are sorted by
/// descending eigenvalue; every eigenvector has its first nonzero component
/// positive.
class ConsensusMatrix {
 public:
  const Eigen::MatrixXd& matrix() const noexcept { return p_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  /// Column p is the unit eigenvector for eigenvalues()[p].
  const Eigen::MatrixXd& eigenvectors() const noexcept { return eigenvectors_; }
  double kappa() const noexcept { return kappa_; }
  int max_degree() const noexcept { return dmax_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(p_.rows()); }

  /// Same P with a replaced eigenbasis. For tests that probe invariance
  /// under eigenvector sign flips or rotations inside an eigenspace.
  ConsensusMatrix with_eigenvectors(Eigen::MatrixXd vectors) const {
    ConsensusMatrix copy = *this;
    copy.eigenvectors_ = std::move(vectors);
    return copy;
  }

 private:
  friend ConsensusMatrix build_consensus_matrix(const Graph& g, double kappa);
  ConsensusMatrix() = default;

  Eigen::MatrixXd p_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  double kappa_ = 1.0;
  int dmax_ = 0;
};

inline ConsensusMatrix build_consensus_matrix(const Graph& g, double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ValidationError("kappa must be positive");
  const auto m = static_cast<Eigen::Index>(g.size());
  ConsensusMatrix cm;
  cm.kappa_ = kappa;
  cm.dmax_ = g.max_degree();
  if (m == 1) {
    cm.p_ = Eigen::MatrixXd::Ones(1, 1);
    cm.eigenvalues_ = Eigen::VectorXd::Ones(1);
    cm.eigenvectors_ = Eigen::MatrixXd::Ones(1, 1);
    return cm;
  }
  cm.p_ = Eigen::MatrixXd::Identity(m, m) - (kappa / cm.dmax_) * laplacian(g);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cm.p_);
  if (solver.info() != Eigen::Success) throw SpectrumError("eigendecomposition failed");
  // Solver output is ascending.
  cm.eigenvalues_ = solver.eigenvalues().reverse();
  cm.eigenvectors_ = solver.eigenvectors().rowwise().reverse();
  for (Eigen::Index p = 0; p < m; ++p) {
    auto column = cm.eigenvectors_.col(p);
    for (Eigen::Index d = 0; d < m; ++d) {
      if (std::abs(column(d)) > 1e-12) {
        if (column(d) < 0) column = -column;
        break;
      }
    }
  }
  // lambda_1 = 1 is exact in theory; snap the solver's rounding so that the
  // leading eigenpair is exactly (1, 1/sqrt(M)).
  cm.eigenvalues_(0) = 1.0;
  cm.eigenvectors_.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(m)));

  if (cm.eigenvalues_(m - 1) <= -1.0 + 1e-12)
    throw SpectrumError("spectrum violation: lambda_M <= -1 (lambda_M = " +
                        std::to_string(cm.eigenvalues_(m - 1)) + ", kappa = " +
                        std::to_string(kappa) + ")");
  if (cm.eigenvalues_(1) >= 1.0 - 1e-12)
    throw SpectrumError("spectrum violation: lambda_2 >= 1");
  return cm;
}

inline ConsensusMatrix build_consensus_matrix(const Graph& g) {
  return build_consensus_matrix(g, default_kappa(g));
}

}  // namespace coopucb

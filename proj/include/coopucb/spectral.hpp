#pragma once

// Graph-dependent explore/exploit measures derived from the spectrum of P:
//   eps_n      bound on |n_hat - n_cent| for every agent and arm,
//   eps_c[k]   variance inflation of agent k's running-consensus estimate,
//   varsigma   node certainty 1 / eps_c[k].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coopucb/graph.hpp"

namespace coopucb {

/// Values at or below this are reported as exactly zero. Eigen solver
/// residue on a centralized-equivalent agent is ~1e-16.
inline constexpr double kZeroTolerance = 1e-12;

/// How the indicator inside nu^{+sum} / nu^{-sum} is read.
///
/// per_component: 1(u_p^d u_j^d >= 0), evaluated per summand d. nu^{+sum} and
///   nu^{-sum} are then the positive and negative parts of u_p . u_j.
/// diagonal_literal: 1((u_p u_j^T)_{kk} >= 0), constant in d. nu^{+sum}
///   collapses to (u_p . u_j) 1(...), which vanishes for p != j.
enum class IndicatorReading { per_component, diagonal_literal };

struct PairTerms {
  double nu_plus = 0.0;
  double nu_minus = 0.0;
  double nu_max = 0.0;
};

namespace detail {

inline void check_index(std::size_t index, std::size_t bound, const char* what) {
  if (index >= bound)
    throw std::out_of_range(std::string(what) + " index " + std::to_string(index) +
                            " out of range [0, " + std::to_string(bound) + ")");
}

inline double clamp_zero(double x) { return std::abs(x) <= kZeroTolerance ? 0.0 : x; }

inline PairTerms pair_terms(const Eigen::MatrixXd& u, std::size_t p, std::size_t j,
                            IndicatorReading reading, std::size_t k) {
  PairTerms terms;
  const auto up = u.col(static_cast<Eigen::Index>(p));
  const auto uj = u.col(static_cast<Eigen::Index>(j));
  if (reading == IndicatorReading::per_component) {
    for (Eigen::Index d = 0; d < u.rows(); ++d) {
      const double h = up(d) * uj(d);
      if (h >= 0) terms.nu_plus += h;
      if (h <= 0) terms.nu_minus += h;
    }
  } else {
    const double dot = up.dot(uj);
    const double kk = up(static_cast<Eigen::Index>(k)) * uj(static_cast<Eigen::Index>(k));
    terms.nu_plus = kk >= 0 ? dot : 0.0;
    terms.nu_minus = kk <= 0 ? dot : 0.0;
  }
  terms.nu_max = std::max(std::abs(terms.nu_minus), terms.nu_plus);
  return terms;
}

inline double a_pj(double lambda_p, double lambda_j, double kk, const PairTerms& terms) {
  const double lp = lambda_p * lambda_j;
  if (lp >= 0 && kk >= 0) return terms.nu_plus * kk;
  if (lp >= 0) return terms.nu_minus * kk;
  return terms.nu_max * std::abs(kk);
}

}  // namespace detail

/// Positive and negative parts of the Hadamard product u_p o u_j, summed
/// (per-component reading; 0-based indices).
inline PairTerms pair_terms(const ConsensusMatrix& cm, std::size_t p, std::size_t j) {
  detail::check_index(p, cm.size(), "eigenvector");
  detail::check_index(j, cm.size(), "eigenvector");
  return detail::pair_terms(cm.eigenvectors(), p, j, IndicatorReading::per_component, 0);
}

/// Nonnegative contribution of the eigenvector pair (p, j) to agent k's
/// variance term. Each branch multiplies quantities of matching sign.
inline double a_pj(const ConsensusMatrix& cm, std::size_t p, std::size_t j, std::size_t k,
                   IndicatorReading reading = IndicatorReading::per_component) {
  detail::check_index(p, cm.size(), "eigenvector");
  detail::check_index(j, cm.size(), "eigenvector");
  detail::check_index(k, cm.size(), "agent");
  const auto& u = cm.eigenvectors();
  const auto& lambda = cm.eigenvalues();
  const auto pi = static_cast<Eigen::Index>(p);
  const auto ji = static_cast<Eigen::Index>(j);
  const double kk = u(static_cast<Eigen::Index>(k), pi) * u(static_cast<Eigen::Index>(k), ji);
  return detail::a_pj(lambda(pi), lambda(ji), kk, detail::pair_terms(u, p, j, reading, k));
}

/// sqrt(M) * sum_{p >= 2} |lambda_p| / (1 - |lambda_p|).
inline double epsilon_n(const ConsensusMatrix& cm) {
  const auto& lambda = cm.eigenvalues();
  double sum = 0.0;
  for (Eigen::Index p = 1; p < lambda.size(); ++p) {
    const double a = std::abs(lambda(p));
    sum += a / (1.0 - a);
  }
  return detail::clamp_zero(std::sqrt(static_cast<double>(cm.size())) * sum);
}

namespace detail {

// Shared by the closed form and the truncated-series oracle: only the
// per-pair weight |lambda_p lambda_j|-function differs.
template <typename Weight>
std::vector<double> assemble_eps_c(const ConsensusMatrix& cm, IndicatorReading reading,
                                   Weight&& weight) {
  const auto m = static_cast<Eigen::Index>(cm.size());
  const auto& u = cm.eigenvectors();
  const auto& lambda = cm.eigenvalues();
  std::vector<double> eps(static_cast<std::size_t>(m), 0.0);
  std::vector<PairTerms> shared;
  if (reading == IndicatorReading::per_component) {
    shared.reserve(static_cast<std::size_t>(m * m));
    for (Eigen::Index p = 0; p < m; ++p)
      for (Eigen::Index j = 0; j < m; ++j)
        shared.push_back(pair_terms(u, static_cast<std::size_t>(p), static_cast<std::size_t>(j),
                                    reading, 0));
  }
  for (Eigen::Index k = 0; k < m; ++k) {
    double sum = 0.0;
    for (Eigen::Index p = 0; p < m; ++p) {
      for (Eigen::Index j = 1; j < m; ++j) {
        const double w = weight(std::abs(lambda(p) * lambda(j)));
        if (w == 0.0) continue;
        const PairTerms terms =
            reading == IndicatorReading::per_component
                ? shared[static_cast<std::size_t>(p * m + j)]
                : pair_terms(u, static_cast<std::size_t>(p), static_cast<std::size_t>(j), reading,
                             static_cast<std::size_t>(k));
        sum += w * a_pj(lambda(p), lambda(j), u(k, p) * u(k, j), terms);
      }
    }
    eps[static_cast<std::size_t>(k)] = clamp_zero(static_cast<double>(m) * sum);
  }
  return eps;
}

}  // namespace detail

/// eps_c for every agent: M * sum_{p>=1} sum_{j>=2} |l_p l_j|/(1-|l_p l_j|) a_pj(k).
inline std::vector<double> epsilon_c_all(const ConsensusMatrix& cm,
                                         IndicatorReading reading = IndicatorReading::per_component) {
  return detail::assemble_eps_c(cm, reading, [](double x) { return x / (1.0 - x); });
}

inline double epsilon_c(const ConsensusMatrix& cm, std::size_t k,
                        IndicatorReading reading = IndicatorReading::per_component) {
  detail::check_index(k, cm.size(), "agent");
  return epsilon_c_all(cm, reading)[k];
}

/// 1 / eps_c, +inf when eps_c is zero (centralized-equivalent agent).
inline double node_certainty(double eps_c) {
  return eps_c <= kZeroTolerance ? std::numeric_limits<double>::infinity() : 1.0 / eps_c;
}

struct SpectralMetrics {
  double eps_n = 0.0;
  std::vector<double> eps_c;
  std::vector<double> varsigma;

  std::size_t agents() const noexcept { return eps_c.size(); }
  bool centralized_equivalent(std::size_t k) const { return std::isinf(varsigma.at(k)); }
};

inline SpectralMetrics spectral_metrics(const ConsensusMatrix& cm,
                                        IndicatorReading reading = IndicatorReading::per_component) {
  SpectralMetrics out;
  out.eps_n = epsilon_n(cm);
  out.eps_c = epsilon_c_all(cm, reading);
  out.varsigma.reserve(out.eps_c.size());
  for (double e : out.eps_c) out.varsigma.push_back(node_certainty(e));
  return out;
}

struct SeriesEstimate {
  double eps_n = 0.0;
  std::vector<double> eps_c;
};

/// Truncated-series evaluation of eps_n and eps_c: every x/(1-x) factor is
/// replaced by sum_{t=1..horizon} x^t accumulated term by term. Converges
/// to the closed forms geometrically in the horizon.
inline SeriesEstimate geometric_series_oracle(const ConsensusMatrix& cm, std::size_t horizon,
                                              IndicatorReading reading =
                                                  IndicatorReading::per_component) {
  if (horizon < 1) throw ValidationError("geometric_series_oracle needs horizon >= 1");
  auto truncated = [horizon](double x) {
    double power = 1.0;
    double sum = 0.0;
    for (std::size_t t = 1; t <= horizon; ++t) {
      power *= x;
      sum += power;
    }
    return sum;
  };
  SeriesEstimate out;
  const auto& lambda = cm.eigenvalues();
  double sum = 0.0;
  for (Eigen::Index p = 1; p < lambda.size(); ++p) sum += truncated(std::abs(lambda(p)));
  out.eps_n = detail::clamp_zero(std::sqrt(static_cast<double>(cm.size())) * sum);
  out.eps_c = detail::assemble_eps_c(cm, reading, truncated);
  return out;
}

}  // namespace coopucb

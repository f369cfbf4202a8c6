#pragma once

// Running-consensus estimation of arm statistics and the arm-selection rules
// (cooperative UCB and the single-agent UCB baseline).

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coopucb/bandit.hpp"
#include "coopucb/error.hpp"
#include "coopucb/graph.hpp"

namespace coopucb {

/// Per-agent running-consensus estimates, M x N (agents x arms):
/// n_hat is the per-unit-agent pull count, s_hat the per-unit-agent reward.
struct NetworkState {
  Eigen::MatrixXd n_hat;
  Eigen::MatrixXd s_hat;
  std::size_t steps = 0;

  NetworkState() = default;
  NetworkState(std::size_t agents, std::size_t arms)
      : n_hat(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(agents),
                                    static_cast<Eigen::Index>(arms))),
        s_hat(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(agents),
                                    static_cast<Eigen::Index>(arms))) {}

  std::size_t agents() const noexcept { return static_cast<std::size_t>(n_hat.rows()); }
  std::size_t arms() const noexcept { return static_cast<std::size_t>(n_hat.cols()); }
  double n(std::size_t k, std::size_t i) const {
    return n_hat(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
  }
  double s(std::size_t k, std::size_t i) const {
    return s_hat(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
  }
};

/// One running-consensus step for every arm column:
///   n_hat_i <- P (n_hat_i + xi_i),  s_hat_i <- P (s_hat_i + r_i).
/// xi must have exactly one 1 per row; rewards must vanish off that entry.
inline NetworkState consensus_step(const ConsensusMatrix& cm, NetworkState state,
                                   const Eigen::MatrixXd& xi, const Eigen::MatrixXd& rewards) {
  const auto m = state.n_hat.rows();
  const auto n = state.n_hat.cols();
  if (static_cast<std::size_t>(m) != cm.size() || xi.rows() != m || xi.cols() != n ||
      rewards.rows() != m || rewards.cols() != n)
    throw ValidationError("consensus_step: dimension mismatch");
  for (Eigen::Index k = 0; k < m; ++k) {
    Eigen::Index ones = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (xi(k, i) == 1.0) {
        ++ones;
      } else if (xi(k, i) != 0.0) {
        throw ValidationError("consensus_step: xi entries must be 0 or 1");
      } else if (rewards(k, i) != 0.0) {
        throw ValidationError("consensus_step: reward recorded on an arm that was not pulled");
      }
    }
    if (ones != 1)
      throw ValidationError("consensus_step: agent " + std::to_string(k + 1) +
                            " must pull exactly one arm");
  }
  const auto& p = cm.matrix();
  state.n_hat = p * (state.n_hat + xi);
  state.s_hat = p * (state.s_hat + rewards);
  ++state.steps;
  return state;
}

/// In-place form used by the simulator: agent k pulled arms[k] and saw
/// rewards[k]. Same arithmetic as consensus_step.
inline void consensus_advance(const ConsensusMatrix& cm, NetworkState& state,
                              std::span<const std::uint32_t> arms, std::span<const double> rewards,
                              Eigen::MatrixXd& scratch) {
  const auto& p = cm.matrix();
  scratch = state.n_hat;
  for (std::size_t k = 0; k < arms.size(); ++k)
    scratch(static_cast<Eigen::Index>(k), arms[k]) += 1.0;
  state.n_hat.noalias() = p * scratch;
  scratch = state.s_hat;
  for (std::size_t k = 0; k < arms.size(); ++k)
    scratch(static_cast<Eigen::Index>(k), arms[k]) += rewards[k];
  state.s_hat.noalias() = p * scratch;
  ++state.steps;
}

/// What a fusion center would know: totals over all agents, divided by M.
class CentralizedTracker {
 public:
  CentralizedTracker(std::size_t agents, std::size_t arms)
      : agents_(agents), pulls_(arms, 0), reward_(arms, 0.0) {}

  void record(std::span<const std::uint32_t> arms, std::span<const double> rewards) {
    for (std::size_t k = 0; k < arms.size(); ++k) {
      ++pulls_.at(arms[k]);
      reward_.at(arms[k]) += rewards[k];
    }
  }

  std::uint64_t total_pulls(std::size_t arm) const { return pulls_.at(arm); }
  double n_cent(std::size_t arm) const {
    return static_cast<double>(pulls_.at(arm)) / static_cast<double>(agents_);
  }
  double s_cent(std::size_t arm) const { return reward_.at(arm) / static_cast<double>(agents_); }

 private:
  std::size_t agents_;
  std::vector<std::uint64_t> pulls_;
  std::vector<double> reward_;
};

struct PolicyParams {
  double gamma;
  std::vector<double> eps_c;
  double sigma;

  PolicyParams(double gamma_, std::vector<double> eps_c_, double sigma_)
      : gamma(gamma_), eps_c(std::move(eps_c_)), sigma(sigma_) {
    if (!(gamma > 1.0)) throw ValidationError("gamma must be strictly greater than 1");
    if (!(sigma > 0.0)) throw ValidationError("sigma_s must be positive");
    for (double e : eps_c)
      if (!(e >= 0.0)) throw ValidationError("eps_c must be nonnegative");
  }
};

inline double mu_hat(const NetworkState& state, std::size_t k, std::size_t i) {
  const double n = state.n(k, i);
  if (!(n > 0.0))
    throw EstimateUnavailable("estimate unavailable: agent " + std::to_string(k + 1) +
                              " has no information on arm " + std::to_string(i + 1));
  return state.s(k, i) / n;
}

/// sigma * sqrt(2 gamma ((n + eps_c) / (M n)) (ln t / n)).
inline double cooperative_bonus(double n_hat, double eps_c, std::size_t agents, double sigma,
                                double gamma, double t) {
  const double inflation = (n_hat + eps_c) / (static_cast<double>(agents) * n_hat);
  return sigma * std::sqrt(2.0 * gamma * inflation * (std::log(t) / n_hat));
}

/// Exploration bonus C_i^k(t) at decision time t.
inline double ucb_bonus(const NetworkState& state, std::size_t k, std::size_t i,
                        const PolicyParams& params, double t) {
  const double n = state.n(k, i);
  if (!(n > 0.0))
    throw EstimateUnavailable("estimate unavailable: agent " + std::to_string(k + 1) +
                              " has no information on arm " + std::to_string(i + 1));
  return cooperative_bonus(n, params.eps_c.at(k), state.agents(), params.sigma, params.gamma, t);
}

/// Cooperative UCB choice of agent k for the next step (t = steps + 1).
inline std::size_t select_arm(const NetworkState& state, std::size_t k, const PolicyParams& params,
                              RunRng& rng, std::vector<double>& q) {
  const double t = static_cast<double>(state.steps + 1);
  q.resize(state.arms());
  for (std::size_t i = 0; i < state.arms(); ++i)
    q[i] = mu_hat(state, k, i) + ucb_bonus(state, k, i, params, t);
  return argmax_random_tie(q, rng);
}

inline std::size_t select_arm(const NetworkState& state, std::size_t k, const PolicyParams& params,
                              RunRng& rng) {
  std::vector<double> q;
  return select_arm(state, k, params, rng, q);
}

/// Own-sample statistics of a lone UCB agent.
struct SampleHistory {
  std::vector<std::uint64_t> counts;
  std::vector<double> sums;

  explicit SampleHistory(std::size_t arms) : counts(arms, 0), sums(arms, 0.0) {}
  void record(std::size_t arm, double reward) {
    ++counts.at(arm);
    sums.at(arm) = sums.at(arm) + reward;
  }
};

/// Gaussian UCB: argmax of mean + sigma sqrt(2 gamma ln t / n_i).
inline std::size_t single_agent_ucb_select(const SampleHistory& history, double t, double sigma,
                                           double gamma, RunRng& rng) {
  std::vector<double> q(history.counts.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (history.counts[i] == 0)
      throw EstimateUnavailable("single-agent UCB: arm " + std::to_string(i + 1) +
                                " has not been sampled");
    const double n = static_cast<double>(history.counts[i]);
    q[i] = history.sums[i] / n + sigma * std::sqrt(2.0 * gamma * (std::log(t) / n));
  }
  return argmax_random_tie(q, rng);
}

/// Deterministic schedule for estimation oracles: at step t (1-based) agent
/// k (0-based) pulls arm (t - 1 + k) mod N.
inline std::size_t round_robin_arm(std::size_t step, std::size_t k, std::size_t arms) {
  return (step - 1 + k) % arms;
}

}  // namespace coopucb

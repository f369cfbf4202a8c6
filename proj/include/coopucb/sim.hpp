#pragma once

// Simulation runs, Monte Carlo ensembles, and the empirical checks of the
// estimation and regret guarantees.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coopucb/agents.hpp"
#include "coopucb/bandit.hpp"
#include "coopucb/error.hpp"
#include "coopucb/graph.hpp"
#include "coopucb/parallel.hpp"
#include "coopucb/spectral.hpp"
#include "coopucb/stats.hpp"

namespace coopucb {

/// policy: cooperative UCB after the initialization pulls.
/// round_robin: round_robin_arm() at every step, for estimation oracles.
enum class Schedule { policy, round_robin };

/// synchronized: during steps 1..N every agent pulls arm t.
/// staggered: during steps 1..N agent k pulls round_robin_arm(t, k, N).
enum class InitMode { synchronized, staggered };

/// Slack on the count sandwich and on nonnegativity of n_hat.
inline constexpr double kInvariantSlack = 1e-9;

struct ExperimentConfig {
  Graph graph;
  BanditModel model;
  std::optional<double> kappa;  ///< default_kappa(graph) when empty
  double gamma = 1.1;
  std::size_t horizon = 1000;
  std::size_t runs = 500;
  std::uint64_t seed = 1;
  Schedule schedule = Schedule::policy;
  InitMode init = InitMode::synchronized;
  IndicatorReading reading = IndicatorReading::per_component;
};

struct RunResult {
  RegretTrace trace;
  /// max over steps, agents and arms of |n_hat - n_cent|.
  double max_count_deviation = 0.0;
  std::uint64_t sandwich_checks = 0;
  /// State after each requested checkpoint step, in request order.
  std::vector<NetworkState> snapshots;
};

/// A validated configuration with its consensus matrix, spectral metrics and
/// policy parameters computed once. Immutable; run_once is safe to call
/// concurrently.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig cfg)
      : cfg_(std::move(cfg)),
        cm_(build_consensus_matrix(cfg_.graph, cfg_.kappa.value_or(default_kappa(cfg_.graph)))),
        metrics_(spectral_metrics(cm_, cfg_.reading)),
        policy_(cfg_.gamma, metrics_.eps_c, cfg_.model.sigma()) {
    if (cfg_.horizon < cfg_.model.arms())
      throw ValidationError("horizon must be at least the number of arms (initialization)");
    if (cfg_.runs < 1) throw ValidationError("runs must be at least 1");
  }

  const ExperimentConfig& config() const noexcept { return cfg_; }
  const ConsensusMatrix& consensus() const noexcept { return cm_; }
  const SpectralMetrics& metrics() const noexcept { return metrics_; }
  const PolicyParams& policy() const noexcept { return policy_; }
  std::size_t agents() const noexcept { return cfg_.graph.size(); }
  std::size_t arms() const noexcept { return cfg_.model.arms(); }

  /// One full run with its own RNG stream. Asserts the count sandwich
  /// n_cent - eps_n <= n_hat <= n_cent + eps_n, n_hat >= 0 and column-sum
  /// conservation after every step; a failure throws InvariantViolation.
  RunResult run_once(std::uint64_t seed, std::span<const std::size_t> checkpoints = {}) const {
    const std::size_t m = agents();
    const std::size_t n = arms();
    const std::size_t horizon = cfg_.horizon;
    const auto& model = cfg_.model;

    RunRng rng(seed);
    NetworkState state(m, n);
    CentralizedTracker tracker(m, n);
    RunResult result;
    result.trace = RegretTrace(m, n, horizon);
    auto& trace = result.trace;

    std::vector<std::uint32_t> chosen(m);
    std::vector<double> rewards(m);
    std::vector<double> q;
    Eigen::MatrixXd scratch;
    std::vector<double> regret(m, 0.0);
    std::vector<double> realized(m, 0.0);
    auto next_checkpoint = checkpoints.begin();

    for (std::size_t step = 1; step <= horizon; ++step) {
      for (std::size_t k = 0; k < m; ++k) {
        std::size_t arm = 0;
        if (cfg_.schedule == Schedule::round_robin) {
          arm = round_robin_arm(step, k, n);
        } else if (step <= n) {
          arm = cfg_.init == InitMode::synchronized ? step - 1 : round_robin_arm(step, k, n);
        } else {
          arm = select_arm(state, k, policy_, rng, q);
        }
        chosen[k] = static_cast<std::uint32_t>(arm);
        rewards[k] = sample_reward(model, arm, rng);
      }

      const std::size_t row = (step - 1) * m;
      for (std::size_t k = 0; k < m; ++k) {
        regret[k] += model.gap(chosen[k]);
        realized[k] += model.best_mean() - rewards[k];
        trace.chosen[row + k] = chosen[k];
        trace.rewards[row + k] = rewards[k];
        trace.cumulative_regret[row + k] = regret[k];
        trace.realized_regret[row + k] = realized[k];
        ++trace.pull_counts[k * n + chosen[k]];
      }

      consensus_advance(cm_, state, chosen, rewards, scratch);
      tracker.record(chosen, rewards);
      check_invariants(state, tracker, step, result);

      while (next_checkpoint != checkpoints.end() && *next_checkpoint == step) {
        result.snapshots.push_back(state);
        ++next_checkpoint;
      }
    }
    return result;
  }

 private:
  void check_invariants(const NetworkState& state, const CentralizedTracker& tracker,
                        std::size_t step, RunResult& result) const {
    const double eps_n = metrics_.eps_n;
    for (std::size_t i = 0; i < state.arms(); ++i) {
      const double cent = tracker.n_cent(i);
      const double total = static_cast<double>(tracker.total_pulls(i));
      if (std::abs(state.n_hat.col(static_cast<Eigen::Index>(i)).sum() - total) >
          kInvariantSlack * std::max(1.0, total))
        throw InvariantViolation("column-sum conservation failed at step " +
                                 std::to_string(step) + ", arm " + std::to_string(i + 1));
      for (std::size_t k = 0; k < state.agents(); ++k) {
        const double nk = state.n(k, i);
        const double dev = std::abs(nk - cent);
        result.max_count_deviation = std::max(result.max_count_deviation, dev);
        ++result.sandwich_checks;
        if (dev > eps_n + kInvariantSlack)
          throw InvariantViolation("count sandwich violated at step " + std::to_string(step) +
                                   ", agent " + std::to_string(k + 1) + ", arm " +
                                   std::to_string(i + 1) + ": |n_hat - n_cent| = " +
                                   std::to_string(dev) + " > eps_n = " + std::to_string(eps_n));
        if (nk < -kInvariantSlack)
          throw InvariantViolation("negative count estimate at step " + std::to_string(step) +
                                   ", agent " + std::to_string(k + 1) + ", arm " +
                                   std::to_string(i + 1) + " (P has negative entries)");
      }
    }
  }

  ExperimentConfig cfg_;
  ConsensusMatrix cm_;
  SpectralMetrics metrics_;
  PolicyParams policy_;
};

inline RunResult run_once(const Experiment& experiment, std::uint64_t seed) {
  return experiment.run_once(seed);
}

struct RunSummary {
  std::uint64_t seed = 0;
  std::vector<double> final_regret;     ///< per agent
  std::vector<double> realized_regret;  ///< per agent
  std::vector<std::uint64_t> group_pulls;  ///< per arm, summed over agents
};

struct EnsembleResult {
  std::size_t agents = 0;
  std::size_t arms = 0;
  std::size_t horizon = 0;
  std::size_t runs = 0;
  SpectralMetrics metrics;
  std::vector<double> eigenvalues;
  /// [(t-1) * agents + k]
  std::vector<double> mean_regret;
  std::vector<double> stderr_regret;
  std::vector<double> final_mean;    ///< per agent
  std::vector<double> final_stderr;  ///< per agent
  double group_final_mean = 0.0;
  double group_final_stderr = 0.0;
  /// E[n_i^k(T)], [k * arms + i]
  std::vector<double> mean_pulls;
  std::vector<double> group_pulls_mean;    ///< per arm
  std::vector<double> group_pulls_stderr;  ///< per arm
  std::vector<RunSummary> per_run;
  double max_count_deviation = 0.0;
  std::uint64_t sandwich_checks = 0;

  double mean_at(std::size_t step, std::size_t k) const { return mean_regret.at((step - 1) * agents + k); }
  double stderr_at(std::size_t step, std::size_t k) const {
    return stderr_regret.at((step - 1) * agents + k);
  }
};

/// `runs` independent runs seeded base_seed + run_index. Runs execute on up
/// to `threads` workers; reduction happens in run-index order, so the result
/// does not depend on the thread count.
inline EnsembleResult run_ensemble(const Experiment& experiment,
                                   std::size_t threads = default_thread_count()) {
  const auto& cfg = experiment.config();
  const std::size_t m = experiment.agents();
  const std::size_t n = experiment.arms();
  const std::size_t horizon = cfg.horizon;

  std::vector<MomentAccumulator> trajectory(horizon * m);
  std::vector<MomentAccumulator> final_regret(m);
  MomentAccumulator group_final;
  std::vector<MomentAccumulator> agent_pulls(m * n);
  std::vector<MomentAccumulator> group_pulls(n);

  EnsembleResult out;
  out.agents = m;
  out.arms = n;
  out.horizon = horizon;
  out.runs = cfg.runs;
  out.metrics = experiment.metrics();
  const auto& ev = experiment.consensus().eigenvalues();
  out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  out.per_run.reserve(cfg.runs);

  const std::size_t block = std::max<std::size_t>(threads * 4, 16);
  for (std::size_t start = 0; start < cfg.runs; start += block) {
    const std::size_t count = std::min(block, cfg.runs - start);
    std::vector<RunResult> results(count);
    parallel_for(count, threads, [&](std::size_t i) {
      results[i] = experiment.run_once(cfg.seed + start + i);
    });
    for (std::size_t i = 0; i < count; ++i) {
      const auto& r = results[i];
      const auto& trace = r.trace;
      RunSummary summary;
      summary.seed = cfg.seed + start + i;
      summary.group_pulls.assign(n, 0);
      double group = 0.0;
      for (std::size_t idx = 0; idx < horizon * m; ++idx) trajectory[idx].add(trace.cumulative_regret[idx]);
      for (std::size_t k = 0; k < m; ++k) {
        const double fr = trace.final_regret(k);
        final_regret[k].add(fr);
        group += fr;
        summary.final_regret.push_back(fr);
        summary.realized_regret.push_back(trace.realized_regret[(horizon - 1) * m + k]);
        for (std::size_t a = 0; a < n; ++a) {
          agent_pulls[k * n + a].add(static_cast<double>(trace.pulls(k, a)));
          summary.group_pulls[a] += trace.pulls(k, a);
        }
      }
      group_final.add(group);
      for (std::size_t a = 0; a < n; ++a) group_pulls[a].add(static_cast<double>(summary.group_pulls[a]));
      out.max_count_deviation = std::max(out.max_count_deviation, r.max_count_deviation);
      out.sandwich_checks += r.sandwich_checks;
      out.per_run.push_back(std::move(summary));
    }
  }

  for (const auto& acc : trajectory) {
    out.mean_regret.push_back(acc.mean());
    out.stderr_regret.push_back(acc.stderr_of_mean());
  }
  for (const auto& acc : final_regret) {
    out.final_mean.push_back(acc.mean());
    out.final_stderr.push_back(acc.stderr_of_mean());
  }
  out.group_final_mean = group_final.mean();
  out.group_final_stderr = group_final.stderr_of_mean();
  for (const auto& acc : agent_pulls) out.mean_pulls.push_back(acc.mean());
  for (const auto& acc : group_pulls) {
    out.group_pulls_mean.push_back(acc.mean());
    out.group_pulls_stderr.push_back(acc.stderr_of_mean());
  }
  return out;
}

/// Upper bound on sum_k E[n_i^k(T)] for a suboptimal arm:
///   ceil(M eps_n + sum_k 8 sigma^2 gamma (1 + eps_c^k) / (M Delta^2) ln T) + M gamma / (gamma - 1).
inline double theorem1_bound(const BanditModel& model, const SpectralMetrics& metrics,
                             std::size_t arm, double horizon, double gamma) {
  const double delta = model.gap(arm);
  if (delta <= 0.0) throw ValidationError("regret bound is undefined for an optimal arm");
  if (!(gamma > 1.0)) throw ValidationError("gamma must be strictly greater than 1");
  if (horizon < 1.0) throw ValidationError("horizon must be at least 1");
  const double m = static_cast<double>(metrics.agents());
  const double s2 = model.sigma() * model.sigma();
  double inner = m * metrics.eps_n;
  for (double e : metrics.eps_c) inner += 8.0 * s2 * gamma * (1.0 + e) / (m * delta * delta) * std::log(horizon);
  return std::ceil(inner) + m * gamma / (gamma - 1.0);
}

struct EstimateCheck {
  std::size_t step = 0;
  std::size_t agent = 0;
  std::size_t arm = 0;
  double n_hat = 0.0;
  double mean = 0.0;
  double stderr_of_mean = 0.0;
  double variance = 0.0;
  double variance_bound = 0.0;
  bool unbiased = false;
  bool variance_ok = false;
};

struct Proposition1Report {
  double eps_n = 0.0;
  double max_count_deviation = 0.0;
  std::uint64_t sandwich_checks = 0;
  bool sandwich_ok = false;
  std::vector<EstimateCheck> checks;
  bool unbiased_ok = false;
  bool variance_ok = false;

  bool passed() const noexcept { return sandwich_ok && unbiased_ok && variance_ok; }
};

/// Empirical check of the estimation guarantees under the round-robin
/// schedule: (a) count sandwich, (b) |mean mu_hat - m_i| <= z_tolerance SE,
/// (c) Var[mu_hat] <= (1 + variance_slack) sigma^2/M (n_hat + eps_c)/n_hat^2.
/// Every agent must have sampled every arm by the first checkpoint.
inline Proposition1Report verify_proposition1(const Experiment& experiment,
                                              std::vector<std::size_t> checkpoints,
                                              std::size_t threads = default_thread_count(),
                                              double z_tolerance = 3.0,
                                              double variance_slack = 0.10) {
  const auto& cfg = experiment.config();
  if (cfg.schedule != Schedule::round_robin)
    throw ValidationError("verify_proposition1 requires the round-robin schedule");
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  if (checkpoints.empty() || checkpoints.front() < 1 || checkpoints.back() > cfg.horizon)
    throw ValidationError("checkpoints must lie in [1, horizon]");

  const std::size_t m = experiment.agents();
  const std::size_t n = experiment.arms();
  const std::size_t cells = checkpoints.size() * m * n;
  std::vector<MomentAccumulator> moments(cells);
  std::vector<double> n_hat(cells);

  Proposition1Report report;
  report.eps_n = experiment.metrics().eps_n;

  const std::size_t block = std::max<std::size_t>(threads * 8, 64);
  for (std::size_t start = 0; start < cfg.runs; start += block) {
    const std::size_t count = std::min(block, cfg.runs - start);
    std::vector<RunResult> results(count);
    parallel_for(count, threads, [&](std::size_t i) {
      results[i] = experiment.run_once(cfg.seed + start + i, checkpoints);
      results[i].trace = RegretTrace();
    });
    for (std::size_t r = 0; r < count; ++r) {
      const auto& res = results[r];
      report.max_count_deviation = std::max(report.max_count_deviation, res.max_count_deviation);
      report.sandwich_checks += res.sandwich_checks;
      for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        const auto& snap = res.snapshots[c];
        for (std::size_t k = 0; k < m; ++k) {
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t cell = (c * m + k) * n + i;
            moments[cell].add(mu_hat(snap, k, i));
            n_hat[cell] = snap.n(k, i);
          }
        }
      }
    }
  }

  report.sandwich_ok = report.max_count_deviation <= report.eps_n + kInvariantSlack;
  report.unbiased_ok = true;
  report.variance_ok = true;
  const double s2 = cfg.model.sigma() * cfg.model.sigma();
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cell = (c * m + k) * n + i;
        EstimateCheck check;
        check.step = checkpoints[c];
        check.agent = k;
        check.arm = i;
        check.n_hat = n_hat[cell];
        check.mean = moments[cell].mean();
        check.stderr_of_mean = moments[cell].stderr_of_mean();
        check.variance = moments[cell].variance();
        check.variance_bound = s2 / static_cast<double>(m) *
                               (check.n_hat + experiment.metrics().eps_c[k]) /
                               (check.n_hat * check.n_hat);
        check.unbiased = std::abs(check.mean - cfg.model.mean(i)) <=
                         z_tolerance * check.stderr_of_mean + 1e-12;
        check.variance_ok = check.variance <= (1.0 + variance_slack) * check.variance_bound;
        report.unbiased_ok = report.unbiased_ok && check.unbiased;
        report.variance_ok = report.variance_ok && check.variance_ok;
        report.checks.push_back(check);
      }
    }
  }
  return report;
}

struct ArmBoundCheck {
  std::size_t arm = 0;
  double delta = 0.0;
  double empirical_mean = 0.0;
  double empirical_stderr = 0.0;
  double bound = 0.0;
  double fusion_lower_bound = 0.0;
  double margin = 0.0;  ///< bound - empirical_mean
  bool holds = false;
};

struct Theorem1Report {
  std::vector<ArmBoundCheck> arms;
  EnsembleResult ensemble;
  bool passed() const noexcept {
    return std::all_of(arms.begin(), arms.end(), [](const auto& a) { return a.holds; });
  }
};

/// Per-arm bound table from an ensemble's group pull counts.
inline std::vector<ArmBoundCheck> bound_table(const Experiment& experiment,
                                              const EnsembleResult* ensemble = nullptr) {
  const auto& cfg = experiment.config();
  std::vector<ArmBoundCheck> rows;
  const auto horizon = static_cast<double>(cfg.horizon);
  for (std::size_t i = 0; i < cfg.model.arms(); ++i) {
    if (cfg.model.gap(i) <= 0.0) continue;
    ArmBoundCheck row;
    row.arm = i;
    row.delta = cfg.model.gap(i);
    row.bound = theorem1_bound(cfg.model, experiment.metrics(), i, horizon, cfg.gamma);
    row.fusion_lower_bound = fusion_center_lower_bound(cfg.model, i, horizon);
    if (ensemble != nullptr) {
      row.empirical_mean = ensemble->group_pulls_mean.at(i);
      row.empirical_stderr = ensemble->group_pulls_stderr.at(i);
      row.margin = row.bound - row.empirical_mean;
      row.holds = row.empirical_mean <= row.bound;
    }
    rows.push_back(row);
  }
  return rows;
}

inline Theorem1Report verify_theorem1(const Experiment& experiment,
                                      std::size_t threads = default_thread_count()) {
  if (experiment.config().schedule != Schedule::policy)
    throw ValidationError("verify_theorem1 requires the policy schedule");
  Theorem1Report report;
  report.ensemble = run_ensemble(experiment, threads);
  report.arms = bound_table(experiment, &report.ensemble);
  return report;
}

struct SingleAgentRun {
  std::vector<std::size_t> decisions;
  RegretTrace trace;
};

/// Lone Gaussian-UCB agent: each arm once, then single_agent_ucb_select.
/// Consumes its RNG in the same order as Experiment::run_once with M = 1.
inline SingleAgentRun run_single_agent_ucb(const BanditModel& model, std::size_t horizon,
                                           double gamma, std::uint64_t seed) {
  if (horizon < model.arms()) throw ValidationError("horizon must cover initialization");
  RunRng rng(seed);
  SampleHistory history(model.arms());
  SingleAgentRun out;
  out.trace = RegretTrace(1, model.arms(), horizon);
  double regret = 0.0;
  double realized = 0.0;
  for (std::size_t step = 1; step <= horizon; ++step) {
    const std::size_t arm = step <= model.arms()
                                ? step - 1
                                : single_agent_ucb_select(history, static_cast<double>(step),
                                                          model.sigma(), gamma, rng);
    const double reward = sample_reward(model, arm, rng);
    history.record(arm, reward);
    regret += model.gap(arm);
    realized += model.best_mean() - reward;
    out.decisions.push_back(arm);
    out.trace.chosen[step - 1] = static_cast<std::uint32_t>(arm);
    out.trace.rewards[step - 1] = reward;
    out.trace.cumulative_regret[step - 1] = regret;
    out.trace.realized_regret[step - 1] = realized;
    ++out.trace.pull_counts[arm];
  }
  return out;
}

}  // namespace coopucb

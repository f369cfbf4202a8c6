#pragma once

// Gaussian N-armed bandit, per-run random streams, and regret accounting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "coopucb/error.hpp"

namespace coopucb {

/// N Gaussian arms with means m_i and a shared, known standard deviation.
class BanditModel {
 public:
  BanditModel(std::vector<double> means, double sigma) : means_(std::move(means)), sigma_(sigma) {
    if (means_.empty()) throw ValidationError("bandit model needs at least one arm");
    if (!(sigma_ > 0.0) || !std::isfinite(sigma_))
      throw ValidationError("sigma_s must be positive");
    for (double m : means_)
      if (!std::isfinite(m)) throw ValidationError("arm means must be finite");
    // Lowest index wins ties.
    best_arm_ = static_cast<std::size_t>(std::max_element(means_.begin(), means_.end()) -
                                         means_.begin());
  }

  std::size_t arms() const noexcept { return means_.size(); }
  const std::vector<double>& means() const noexcept { return means_; }
  double mean(std::size_t arm) const { return means_.at(arm); }
  double sigma() const noexcept { return sigma_; }
  std::size_t best_arm() const noexcept { return best_arm_; }
  double best_mean() const noexcept { return means_[best_arm_]; }
  /// Delta_i = best_mean - m_i; zero for every maximizer.
  double gap(std::size_t arm) const { return best_mean() - means_.at(arm); }

  std::vector<double> gaps() const {
    std::vector<double> out;
    out.reserve(means_.size());
    for (std::size_t i = 0; i < means_.size(); ++i) out.push_back(gap(i));
    return out;
  }

 private:
  std::vector<double> means_;
  double sigma_;
  std::size_t best_arm_ = 0;
};

/// Ten-arm benchmark with sigma_s = 30 used by the reference experiments.
inline BanditModel ten_arm_benchmark() {
  return BanditModel({40, 50, 50, 60, 70, 70, 80, 90, 92, 95}, 30.0);
}

/// A run's private random stream: mt19937_64 seeded through seed_seq,
/// Gaussian draws from std::normal_distribution. Bit-reproducible for a
/// given seed on a given standard library.
class RunRng {
 public:
  explicit RunRng(std::uint64_t seed) : engine_(make_engine(seed)) {}

  double gaussian(double mean, double sigma) {
    return normal_(engine_, std::normal_distribution<double>::param_type(mean, sigma));
  }

  std::size_t uniform_index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  static std::mt19937_64 make_engine(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return std::mt19937_64(seq);
  }

  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

inline double sample_reward(const BanditModel& model, std::size_t arm, RunRng& rng) {
  if (arm >= model.arms())
    throw std::out_of_range("arm index " + std::to_string(arm) + " out of range");
  return rng.gaussian(model.mean(arm), model.sigma());
}

/// Everything a single run produced, indexed [t * agents + k] for t in
/// 0..horizon-1 (step t+1).
struct RegretTrace {
  std::size_t agents = 0;
  std::size_t arms = 0;
  std::size_t horizon = 0;
  std::vector<std::uint32_t> chosen;
  std::vector<double> rewards;
  /// Cumulative expected regret sum_{tau <= t} Delta_{i^k(tau)}.
  std::vector<double> cumulative_regret;
  /// Cumulative realized regret sum_{tau <= t} (m_{i*} - r^k(tau)).
  std::vector<double> realized_regret;
  /// n_i^k(T), row-major [k * arms + i].
  std::vector<std::uint64_t> pull_counts;

  RegretTrace() = default;
  RegretTrace(std::size_t m, std::size_t n, std::size_t t)
      : agents(m), arms(n), horizon(t), chosen(m * t), rewards(m * t),
        cumulative_regret(m * t), realized_regret(m * t), pull_counts(m * n, 0) {}

  std::uint64_t pulls(std::size_t k, std::size_t arm) const { return pull_counts.at(k * arms + arm); }
  double regret(std::size_t step, std::size_t k) const {
    return cumulative_regret.at((step - 1) * agents + k);
  }
  double final_regret(std::size_t k) const { return regret(horizon, k); }

  /// n_i^k(t) recomputed from the chosen-arm history.
  std::vector<std::uint64_t> pull_counts_at(std::size_t step) const {
    std::vector<std::uint64_t> out(agents * arms, 0);
    for (std::size_t s = 0; s < step; ++s)
      for (std::size_t k = 0; k < agents; ++k) ++out[k * arms + chosen[s * agents + k]];
    return out;
  }
};

/// sum_k sum_i Delta_i n_i^k(T) over the realized counts.
inline double expected_group_regret(const RegretTrace& trace, const BanditModel& model) {
  double total = 0.0;
  for (std::size_t k = 0; k < trace.agents; ++k)
    for (std::size_t i = 0; i < trace.arms; ++i)
      total += model.gap(i) * static_cast<double>(trace.pulls(k, i));
  return total;
}

/// Leading term (2 sigma^2 / Delta^2) ln T of the fusion-center lower bound
/// on sum_k E[n_i^k(T)]; the o(1) correction is dropped.
inline double fusion_center_lower_bound(const BanditModel& model, std::size_t arm, double horizon) {
  const double delta = model.gap(arm);
  if (delta <= 0.0) throw ValidationError("fusion-center bound is undefined for an optimal arm");
  if (horizon < 1.0) throw ValidationError("horizon must be at least 1");
  const double s2 = model.sigma() * model.sigma();
  return 2.0 * s2 / (delta * delta) * std::log(horizon);
}

/// Index of the largest value; exact ties resolved uniformly with rng.
/// No draw is consumed when the maximizer is unique.
inline std::size_t argmax_random_tie(std::span<const double> values, RunRng& rng) {
  if (values.empty()) throw std::invalid_argument("argmax of an empty range");
  const double best = *std::max_element(values.begin(), values.end());
  std::size_t ties = 0;
  std::size_t first = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == best) {
      if (ties == 0) first = i;
      ++ties;
    }
  }
  if (ties == 1) return first;
  std::size_t pick = rng.uniform_index(ties);
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] == best && pick-- == 0) return i;
  return first;
}

}  // namespace coopucb

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace srl::grpo {

class GrpoError : public std::invalid_argument {
 public:
  enum class Kind { GroupTooSmall, AlignmentMismatch, ParseError };
  GrpoError(Kind kind, const std::string& msg) : std::invalid_argument(msg), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

using TokenLogprobs = std::vector<std::vector<double>>;  // [trajectory][token]

/// N trajectories sampled for one prompt: scalar rewards and per-token
/// log-probabilities under the current, behaviour and reference policies.
struct RolloutGroup {
  std::vector<double> rewards;
  TokenLogprobs logp_new;
  TokenLogprobs logp_old;
  TokenLogprobs logp_ref;

  std::size_t size() const noexcept { return rewards.size(); }
  std::size_t length(std::size_t i) const { return logp_new.at(i).size(); }

  /// Throws GrpoError(AlignmentMismatch) unless the three log-prob tables
  /// agree with each other and with `rewards` in shape, and every
  /// trajectory has at least one token.
  void check_alignment() const;

  friend bool operator==(const RolloutGroup&, const RolloutGroup&) = default;
};

enum class KlEstimator {
  K3,     // exp(ref - new) - (ref - new) - 1, non-negative
  Naive,  // new - ref
};

struct GrpoConfig {
  double epsilon = 1e-6;  // advantage denominator guard
  double eps_low = 0.2;
  double eps_high = 0.3;
  double beta = 1e-2;
  KlEstimator kl = KlEstimator::K3;

  void validate() const;
  friend bool operator==(const GrpoConfig&, const GrpoConfig&) = default;
};

struct LossReport {
  double loss = 0.0;
  double clip_fraction = 0.0;
  double mean_kl = 0.0;
  std::vector<double> advantages;
};

/// (r - mean) / (population stddev + epsilon). Throws GroupTooSmall for N < 2.
std::vector<double> group_advantages(std::span<const double> rewards, double epsilon = 1e-6);

TokenLogprobs importance_ratios(const RolloutGroup& group);
TokenLogprobs token_kl(const RolloutGroup& group, KlEstimator estimator = KlEstimator::K3);

/// Clipped, KL-regularized group objective:
///   L = -(1/N) sum_i (1/|y_i|) sum_t [ min(r A, clip(r, 1-eps_l, 1+eps_h) A) - beta KL ]
/// clip_fraction counts tokens where the clipped branch is strictly smaller.
/// Summation order is fixed (trajectory, then token) so results are
/// reproducible bit for bit.
LossReport grpo_loss(const RolloutGroup& group, const GrpoConfig& cfg = {});

/// dL / d logp_new for every token, holding rewards, old and reference
/// log-probs fixed. At the clip boundary the unclipped branch is used.
TokenLogprobs grpo_loss_grad_logp(const RolloutGroup& group, const GrpoConfig& cfg = {});

// Rollout JSONL: one group per line,
// {"rewards":[...],"lengths":[...],"logp_new":[[...]],"logp_old":[[...]],"logp_ref":[[...]]}
std::string rollout_to_json(const RolloutGroup& group);
RolloutGroup rollout_from_json(std::string_view line);

std::string loss_report_to_json(const LossReport& report);

}  // namespace srl::grpo

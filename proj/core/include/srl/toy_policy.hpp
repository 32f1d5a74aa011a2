#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "srl/config.hpp"
#include "srl/gradcheck.hpp"
#include "srl/grpo.hpp"
#include "srl/reward.hpp"
#include "srl/rng.hpp"

namespace srl::toy {

inline constexpr std::size_t kVocab = 16;

using Logits = std::array<double, kVocab>;

/// Softmax policy over a 16-token vocabulary. The logits at step t are
/// theta + bias[t], so every step shares the parameters but not the
/// distribution.
class ToyPolicy {
 public:
  ToyPolicy(std::vector<double> theta, std::vector<Logits> step_bias);

  /// Bias table drawn from N(0, bias_scale^2), theta = 0.
  static ToyPolicy random(std::uint64_t seed, std::size_t max_length, double bias_scale = 0.5);

  std::span<const double> theta() const noexcept { return theta_; }
  ToyPolicy with_theta(std::vector<double> theta) const;
  std::size_t max_length() const noexcept { return bias_.size(); }

  Logits probabilities(std::size_t step) const;
  Logits log_probabilities(std::size_t step) const;

  std::vector<int> sample(Rng& rng, std::size_t length) const;
  std::vector<double> token_logprobs(std::span<const int> tokens) const;

  /// d/dtheta of sum_t w[t] * log pi(tokens[t] | t).
  std::vector<double> weighted_logprob_grad(std::span<const int> tokens,
                                            std::span<const double> weights) const;

 private:
  std::vector<double> theta_;
  std::vector<Logits> bias_;
};

/// Token meanings used by render_response:
///   0-3   answer option A-D (last one wins)
///   4-7   box quality, exact to sloppy (last one wins)
///   8-11  object count: exact, one missing, one extra, many extra
///   12    stray tag inside the reasoning (breaks the format)
///   13-15 filler words
struct ToyTask {
  GroundTruth truth;
  std::array<std::string, 4> options;
};

ToyTask default_task();

std::string render_response(std::span<const int> tokens, const ToyTask& task);

/// A GRPO group sampled from a behaviour policy, with everything needed to
/// differentiate the loss with respect to the current policy's parameters.
struct GradcheckProblem {
  ToyPolicy old_policy;
  ToyPolicy ref_policy;
  std::vector<double> theta_new;
  std::vector<std::vector<int>> tokens;
  std::vector<double> rewards;
  grpo::GrpoConfig grpo;
  /// Scales one gradient coordinate; anything but 1 is a deliberate bug.
  double gradient_bug = 1.0;

  grpo::RolloutGroup group_at(std::span<const double> theta) const;
  double loss(std::span<const double> theta) const;
  std::vector<double> gradient(std::span<const double> theta) const;
  Objective objective() const;
};

GradcheckProblem make_gradcheck_problem(const GradcheckSection& section,
                                        const grpo::GrpoConfig& grpo, std::uint64_t seed,
                                        const ScoringConfig& scoring = {});

}  // namespace srl::toy

#include "srl/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "json_util.hpp"

namespace srl::grpo {
namespace {

using Kind = GrpoError::Kind;

double kl_value(double logp_new, double logp_ref, KlEstimator estimator) {
  const double d = logp_ref - logp_new;
  return estimator == KlEstimator::K3 ? std::exp(d) - d - 1.0 : logp_new - logp_ref;
}

double kl_grad_new(double logp_new, double logp_ref, KlEstimator estimator) {
  return estimator == KlEstimator::K3 ? 1.0 - std::exp(logp_ref - logp_new) : 1.0;
}

bool same_shape(const TokenLogprobs& a, const TokenLogprobs& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) return false;
  }
  return true;
}

}  // namespace

void RolloutGroup::check_alignment() const {
  if (logp_new.size() != rewards.size()) {
    throw GrpoError(Kind::AlignmentMismatch,
                    "alignment mismatch: " + std::to_string(rewards.size()) + " rewards but " +
                        std::to_string(logp_new.size()) + " trajectories");
  }
  if (!same_shape(logp_new, logp_old) || !same_shape(logp_new, logp_ref)) {
    throw GrpoError(Kind::AlignmentMismatch,
                    "alignment mismatch: new/old/ref log-prob tables differ in shape");
  }
  for (std::size_t i = 0; i < logp_new.size(); ++i) {
    if (logp_new[i].empty()) {
      throw GrpoError(Kind::AlignmentMismatch,
                      "alignment mismatch: trajectory " + std::to_string(i) + " has no tokens");
    }
  }
}

void GrpoConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("grpo epsilon must be > 0");
  if (!(eps_low > 0.0 && eps_low < 1.0) || !(eps_high > 0.0 && eps_high < 1.0)) {
    throw std::invalid_argument("grpo clip ranges must lie in (0, 1)");
  }
  if (!(beta >= 0.0)) throw std::invalid_argument("grpo beta must be >= 0");
}

std::vector<double> group_advantages(std::span<const double> rewards, double epsilon) {
  const std::size_t n = rewards.size();
  if (n < 2) {
    throw GrpoError(Kind::GroupTooSmall,
                    "group too small: advantage normalization needs N >= 2, got " +
                        std::to_string(n));
  }
  std::vector<double> adv(n);
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; })) {
    return adv;
  }
  std::vector<double> sorted(rewards.begin(), rewards.end());
  std::sort(sorted.begin(), sorted.end());
  double mean = 0.0;
  for (double r : sorted) mean += r;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double r : sorted) var += (r - mean) * (r - mean);
  const double sigma = std::sqrt(var / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) adv[i] = (rewards[i] - mean) / (sigma + epsilon);
  return adv;
}

TokenLogprobs importance_ratios(const RolloutGroup& group) {
  group.check_alignment();
  TokenLogprobs out(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    out[i].resize(group.length(i));
    for (std::size_t t = 0; t < group.length(i); ++t) {
      out[i][t] = std::exp(group.logp_new[i][t] - group.logp_old[i][t]);
    }
  }
  return out;
}

TokenLogprobs token_kl(const RolloutGroup& group, KlEstimator estimator) {
  group.check_alignment();
  TokenLogprobs out(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    out[i].resize(group.length(i));
    for (std::size_t t = 0; t < group.length(i); ++t) {
      out[i][t] = kl_value(group.logp_new[i][t], group.logp_ref[i][t], estimator);
    }
  }
  return out;
}

LossReport grpo_loss(const RolloutGroup& group, const GrpoConfig& cfg) {
  group.check_alignment();
  LossReport report;
  report.advantages = group_advantages(group.rewards, cfg.epsilon);
  const auto ratios = importance_ratios(group);
  const auto kl = token_kl(group, cfg.kl);

  std::size_t tokens = 0;
  std::size_t clipped = 0;
  double kl_sum = 0.0;
  double objective = 0.0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    const double a = report.advantages[i];
    double traj = 0.0;
    for (std::size_t t = 0; t < group.length(i); ++t) {
      const double r = ratios[i][t];
      const double unclipped = r * a;
      const double clipped_term = std::clamp(r, 1.0 - cfg.eps_low, 1.0 + cfg.eps_high) * a;
      if (clipped_term < unclipped) ++clipped;
      traj += std::min(unclipped, clipped_term) - cfg.beta * kl[i][t];
      kl_sum += kl[i][t];
      ++tokens;
    }
    objective += traj / static_cast<double>(group.length(i));
  }
  report.loss = -objective / static_cast<double>(group.size());
  report.clip_fraction = static_cast<double>(clipped) / static_cast<double>(tokens);
  report.mean_kl = kl_sum / static_cast<double>(tokens);
  return report;
}

TokenLogprobs grpo_loss_grad_logp(const RolloutGroup& group, const GrpoConfig& cfg) {
  group.check_alignment();
  const auto adv = group_advantages(group.rewards, cfg.epsilon);
  const auto ratios = importance_ratios(group);
  const double inv_n = 1.0 / static_cast<double>(group.size());

  TokenLogprobs grad(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    const double scale = -inv_n / static_cast<double>(group.length(i));
    grad[i].resize(group.length(i));
    for (std::size_t t = 0; t < group.length(i); ++t) {
      const double r = ratios[i][t];
      const double clipped_term = std::clamp(r, 1.0 - cfg.eps_low, 1.0 + cfg.eps_high) * adv[i];
      // d(r A)/d logp_new = r A; the clipped branch is constant when active.
      const double surrogate = clipped_term < r * adv[i] ? 0.0 : r * adv[i];
      const double kl = kl_grad_new(group.logp_new[i][t], group.logp_ref[i][t], cfg.kl);
      grad[i][t] = scale * (surrogate - cfg.beta * kl);
    }
  }
  return grad;
}

std::string rollout_to_json(const RolloutGroup& group) {
  detail::ordered_json j;
  j["rewards"] = group.rewards;
  std::vector<std::size_t> lengths;
  for (const auto& traj : group.logp_new) lengths.push_back(traj.size());
  j["lengths"] = lengths;
  j["logp_new"] = group.logp_new;
  j["logp_old"] = group.logp_old;
  j["logp_ref"] = group.logp_ref;
  return j.dump();
}

RolloutGroup rollout_from_json(std::string_view line) {
  auto j = detail::json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw GrpoError(Kind::ParseError, "rollout line is not a JSON object");
  }
  RolloutGroup g;
  std::vector<std::size_t> lengths;
  try {
    j.at("rewards").get_to(g.rewards);
    j.at("logp_new").get_to(g.logp_new);
    j.at("logp_old").get_to(g.logp_old);
    j.at("logp_ref").get_to(g.logp_ref);
    if (j.contains("lengths")) j.at("lengths").get_to(lengths);
  } catch (const detail::json::exception& e) {
    throw GrpoError(Kind::ParseError, std::string("rollout line: ") + e.what());
  }
  g.check_alignment();
  if (!lengths.empty() || j.contains("lengths")) {
    if (lengths.size() != g.size()) {
      throw GrpoError(Kind::AlignmentMismatch, "alignment mismatch: lengths count differs from group size");
    }
    for (std::size_t i = 0; i < lengths.size(); ++i) {
      if (lengths[i] != g.length(i)) {
        throw GrpoError(Kind::AlignmentMismatch,
                        "alignment mismatch: trajectory " + std::to_string(i) + " declares " +
                            std::to_string(lengths[i]) + " tokens but has " +
                            std::to_string(g.length(i)));
      }
    }
  }
  return g;
}

std::string loss_report_to_json(const LossReport& report) {
  detail::ordered_json j;
  j["loss"] = report.loss;
  j["clip_fraction"] = report.clip_fraction;
  j["mean_kl"] = report.mean_kl;
  j["advantages"] = report.advantages;
  return j.dump();
}

}  // namespace srl::grpo

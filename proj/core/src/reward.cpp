#include "srl/reward.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "json_util.hpp"
#include "srl/geometry.hpp"

namespace srl {

void RewardWeights::validate() const {
  for (double w : {w_format, w_count, w_accuracy, w_spatial, lambda_obj, lambda_rel,
                   lambda_spatial, lambda_semantic}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("reward weights must be finite and non-negative");
    }
  }
  if (std::fabs(w_format + w_count + w_accuracy + w_spatial - 1.0) > 1e-9) {
    throw std::invalid_argument("w_format + w_count + w_accuracy + w_spatial must equal 1");
  }
  if (std::fabs(lambda_obj + lambda_rel - 1.0) > 1e-9) {
    throw std::invalid_argument("lambda_obj + lambda_rel must equal 1");
  }
}

double count_reward(std::size_t n_obj_pred, std::size_t n_rel_pred, std::size_t n_obj_gt,
                    std::size_t n_rel_gt, const RewardWeights& w) {
  auto term = [](std::size_t pred, std::size_t gt) {
    const double deviation =
        std::fabs(static_cast<double>(pred) - static_cast<double>(gt));
    return std::max(0.0, 1.0 - deviation / static_cast<double>(std::max<std::size_t>(gt, 1)));
  };
  return w.lambda_obj * term(n_obj_pred, n_obj_gt) + w.lambda_rel * term(n_rel_pred, n_rel_gt);
}

int accuracy_reward(std::string_view pred_answer, std::string_view gt_answer, AnswerMode mode) {
  try {
    return extract_answer(pred_answer, mode) == extract_answer(gt_answer, mode) ? 1 : 0;
  } catch (const AnswerError&) {
    return 0;
  }
}

SpatialScore spatial_reward(std::span<const ObjectNode> pred, std::span<const ObjectNode> gt,
                            const MatchWeights& w, bool clamp_negative) {
  SpatialScore score;
  if (pred.empty() || gt.empty()) return score;
  score.match = match_objects(pred, gt, w);
  double sum = 0.0;
  double raw_sum = 0.0;
  for (const auto& [i, j] : score.match.pairs) {
    const double c = ciou(pred[i].bbox, gt[j].bbox).ciou;
    score.pair_ciou.push_back(c);
    raw_sum += c;
    sum += clamp_negative ? std::max(0.0, c) : c;
  }
  const auto n = static_cast<double>(score.match.pairs.size());
  score.reward = sum / n;
  score.raw_mean = raw_sum / n;
  return score;
}

RewardBreakdown total_reward(std::string_view raw_response, const GroundTruth& truth,
                             const ScoringConfig& config) {
  const auto& w = config.weights;
  RewardBreakdown b;
  b.n_obj_gt = truth.n_obj();
  b.n_rel_gt = truth.n_rel();

  ParseOptions options;
  options.scene = config.validation();
  auto parsed = parse_response(raw_response, options);

  std::optional<SceneGraph> scene;
  std::optional<std::string> answer;
  if (parsed.ok()) {
    b.violations = parsed.response->scene_violations;
    scene = parsed.response->scene;
    answer = parsed.response->answer;
    b.r_format = scene && b.violations.empty() ? 1 : 0;
  } else {
    b.violations = std::move(parsed.violations);
    // Diagnostics only: salvage whatever payloads can be found.
    if (auto raw_scene = find_tag_payload(raw_response, "scene")) {
      scene = parse_scene_json(*raw_scene, options.scene).graph;
    }
    answer = find_tag_payload(raw_response, "answer");
  }

  if (scene) {
    b.n_obj_pred = scene->objects.size();
    b.n_rel_pred = scene->relations.size();
  }
  b.r_count = count_reward(b.n_obj_pred, b.n_rel_pred, b.n_obj_gt, b.n_rel_gt, w);

  if (answer) {
    b.r_accuracy = accuracy_reward(*answer, truth.answer, config.accuracy_mode);
    try {
      b.predicted_answer = extract_answer(*answer, AnswerMode::Strict);
    } catch (const AnswerError&) {
    }
  }

  if (scene) {
    auto spatial = spatial_reward(scene->objects, truth.subgraph.objects, w.match(),
                                  config.clamp_negative_ciou);
    b.r_spatial = spatial.reward;
    b.raw_mean_ciou = spatial.raw_mean;
    b.match_pairs = std::move(spatial.match.pairs);
    b.pair_ciou = std::move(spatial.pair_ciou);
  }

  b.gated_spatial_applied = b.r_format == 1 && b.r_accuracy == 1;
  if (b.r_format == 1) {
    b.total = w.w_format * b.r_format + w.w_count * b.r_count + w.w_accuracy * b.r_accuracy;
    if (b.gated_spatial_applied) b.total += w.w_spatial * b.r_spatial;
  }
  return b;
}

std::vector<RewardBreakdown> score_batch(std::span<const std::string> responses,
                                         std::span<const GroundTruth> truths,
                                         const ScoringConfig& config, unsigned workers) {
  if (responses.size() != truths.size()) {
    throw LengthMismatch("score_batch: " + std::to_string(responses.size()) + " responses vs " +
                         std::to_string(truths.size()) + " ground truths");
  }
  std::vector<RewardBreakdown> out(responses.size());
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(responses.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < responses.size(); ++i) {
      out[i] = total_reward(responses[i], truths[i], config);
    }
    return out;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < responses.size(); i += workers) {
        out[i] = total_reward(responses[i], truths[i], config);
      }
    });
  }
  return out;
}

std::string breakdown_to_json(const RewardBreakdown& b) {
  using detail::number;
  detail::ordered_json j;
  j["r_format"] = b.r_format;
  j["r_count"] = b.r_count;
  j["r_accuracy"] = b.r_accuracy;
  j["r_spatial"] = b.r_spatial;
  j["gated_spatial_applied"] = b.gated_spatial_applied;
  j["total"] = b.total;
  j["n_obj_pred"] = b.n_obj_pred;
  j["n_rel_pred"] = b.n_rel_pred;
  j["n_obj_gt"] = b.n_obj_gt;
  j["n_rel_gt"] = b.n_rel_gt;
  auto pairs = detail::ordered_json::array();
  for (const auto& [i, k] : b.match_pairs) pairs.push_back({i, k});
  j["match_pairs"] = std::move(pairs);
  j["pair_ciou"] = b.pair_ciou;
  j["raw_mean_ciou"] = b.raw_mean_ciou;
  j["predicted_answer"] = b.predicted_answer;
  auto violations = detail::ordered_json::array();
  for (const auto& v : b.violations) violations.push_back(describe(v));
  j["violations"] = std::move(violations);
  return j.dump(-1, ' ', false, detail::ordered_json::error_handler_t::replace);
}

}  // namespace srl

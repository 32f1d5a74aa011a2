#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "srl/matcher.hpp"
#include "srl/response_parser.hpp"
#include "srl/scene_graph.hpp"

namespace srl {

/// Reference answer plus the question-aligned subgraph it is grounded in.
struct GroundTruth {
  std::string answer;
  SceneGraph subgraph;

  std::size_t n_obj() const noexcept { return subgraph.objects.size(); }
  std::size_t n_rel() const noexcept { return subgraph.relations.size(); }
};

struct RewardWeights {
  double w_format = 0.1;
  double w_count = 0.2;
  double w_accuracy = 0.5;
  double w_spatial = 0.2;
  double lambda_obj = 0.7;
  double lambda_rel = 0.3;
  double lambda_spatial = 1.0;
  double lambda_semantic = 2.0;

  /// Throws std::invalid_argument on negative weights or budgets that do not
  /// sum to one (within 1e-9).
  void validate() const;
  MatchWeights match() const noexcept { return {lambda_spatial, lambda_semantic}; }
  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

struct ScoringConfig {
  RewardWeights weights;
  AnswerMode accuracy_mode = AnswerMode::Strict;
  /// Clamp each pair's CIoU at 0 before averaging.
  bool clamp_negative_ciou = true;
  bool strict_vocabulary = false;
  std::optional<PredicateVocabulary> vocabulary;

  ValidationOptions validation() const noexcept {
    return {vocabulary ? &*vocabulary : nullptr, strict_vocabulary};
  }
};

struct SpatialScore {
  double reward = 0.0;    // mean of per-pair (optionally clamped) CIoU
  double raw_mean = 0.0;  // mean of unclamped CIoU
  MatchResult match;
  std::vector<double> pair_ciou;
};

struct RewardBreakdown {
  int r_format = 0;
  double r_count = 0.0;
  int r_accuracy = 0;
  double r_spatial = 0.0;
  bool gated_spatial_applied = false;
  double total = 0.0;

  // diagnostics
  std::size_t n_obj_pred = 0;
  std::size_t n_rel_pred = 0;
  std::size_t n_obj_gt = 0;
  std::size_t n_rel_gt = 0;
  std::vector<std::pair<std::size_t, std::size_t>> match_pairs;
  std::vector<double> pair_ciou;
  double raw_mean_ciou = 0.0;
  std::string predicted_answer;
  std::vector<Violation> violations;
};

double count_reward(std::size_t n_obj_pred, std::size_t n_rel_pred, std::size_t n_obj_gt,
                    std::size_t n_rel_gt, const RewardWeights& w = {});

/// Compares answers under `mode`. In letter mode an answer with no option
/// letter scores 0.
int accuracy_reward(std::string_view pred_answer, std::string_view gt_answer,
                    AnswerMode mode = AnswerMode::Strict);

SpatialScore spatial_reward(std::span<const ObjectNode> pred, std::span<const ObjectNode> gt,
                            const MatchWeights& w = {}, bool clamp_negative = true);

/// Lexicographically gated total over an arbitrary completion. Components
/// are still computed best-effort when the format check fails, but the
/// total is then 0.
RewardBreakdown total_reward(std::string_view raw_response, const GroundTruth& truth,
                             const ScoringConfig& config = {});

class LengthMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Elementwise total_reward; order-preserving. `workers` > 1 fans the batch
/// out over threads, each writing only its own output slots.
std::vector<RewardBreakdown> score_batch(std::span<const std::string> responses,
                                         std::span<const GroundTruth> truths,
                                         const ScoringConfig& config = {}, unsigned workers = 1);

/// One JSON object per trajectory with every RewardBreakdown field.
std::string breakdown_to_json(const RewardBreakdown& b);

}  // namespace srl

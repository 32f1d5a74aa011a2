#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "srl/scene_graph.hpp"

namespace srl {

class EmptyLabel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MatchWeights {
  double spatial = 1.0;
  double semantic = 2.0;
};

struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (pred, gt), sorted by pred
  double total_cost = 0.0;
  std::vector<std::size_t> unmatched_pred;
  std::vector<std::size_t> unmatched_gt;
};

/// 1.0 when the lemmatized, case-folded labels match; otherwise the Jaccard
/// overlap of their lemma token sets.
double semantic_similarity(std::string_view a, std::string_view b);

double pair_cost(const ObjectNode& pred, const ObjectNode& gt, const MatchWeights& w = {});

/// Dense row-major cost matrix.
class CostMatrix {
 public:
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

/// Minimum-cost assignment of cardinality min(rows, cols). Among optimal
/// assignments (costs equal within a relative 1e-10), returns the one whose
/// (row, col) pair list is lexicographically smallest.
MatchResult solve_assignment(const CostMatrix& cost);

/// Hungarian matching of predicted to ground-truth objects under pair_cost.
MatchResult match_objects(std::span<const ObjectNode> pred, std::span<const ObjectNode> gt,
                          const MatchWeights& w = {});

}  // namespace srl

#include "srl/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "srl/geometry.hpp"
#include "srl/text.hpp"

namespace srl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SubAssignment {
  double cost = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // original (row, col) ids
};

// Shortest-augmenting-path Hungarian (potentials form) on the submatrix
// selected by `rows` x `cols`; assigns min(|rows|, |cols|) pairs.
SubAssignment min_cost(const CostMatrix& cost, const std::vector<std::size_t>& rows,
                       const std::vector<std::size_t>& cols) {
  SubAssignment result;
  if (rows.empty() || cols.empty()) return result;

  const bool transposed = rows.size() > cols.size();
  const auto& r_ids = transposed ? cols : rows;
  const auto& c_ids = transposed ? rows : cols;
  const std::size_t n = r_ids.size();
  const std::size_t m = c_ids.size();
  auto at = [&](std::size_t i, std::size_t j) {
    return transposed ? cost(c_ids[j], r_ids[i]) : cost(r_ids[i], c_ids[j]);
  };

  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    const std::size_t r = r_ids[p[j] - 1];
    const std::size_t c = c_ids[j - 1];
    result.pairs.emplace_back(transposed ? c : r, transposed ? r : c);
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  for (const auto& [r, c] : result.pairs) result.cost += cost(r, c);
  return result;
}

double pair_list_cost(const CostMatrix& cost,
                      const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  double total = 0.0;
  for (const auto& [r, c] : pairs) total += cost(r, c);
  return total;
}

}  // namespace

double semantic_similarity(std::string_view a, std::string_view b) {
  if (text::trim(a).empty() || text::trim(b).empty()) throw EmptyLabel("empty object label");
  const auto la = text::lemma_tokens(a);
  const auto lb = text::lemma_tokens(b);
  if (la.empty() || lb.empty()) {
    return text::to_lower(text::trim(a)) == text::to_lower(text::trim(b)) ? 1.0 : 0.0;
  }
  if (la == lb) return 1.0;
  const std::set<std::string> sa(la.begin(), la.end());
  const std::set<std::string> sb(lb.begin(), lb.end());
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  const std::size_t uni = sa.size() + sb.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

double pair_cost(const ObjectNode& pred, const ObjectNode& gt, const MatchWeights& w) {
  return w.spatial * (1.0 - iou(pred.bbox, gt.bbox)) +
         w.semantic * (1.0 - semantic_similarity(pred.label, gt.label));
}

MatchResult solve_assignment(const CostMatrix& cost) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  MatchResult result;

  std::vector<std::size_t> all_rows(n), all_cols(m);
  for (std::size_t i = 0; i < n; ++i) all_rows[i] = i;
  for (std::size_t j = 0; j < m; ++j) all_cols[j] = j;

  auto incumbent = min_cost(cost, all_rows, all_cols);
  const double optimum = incumbent.cost;
  const double tol = 1e-10 * std::max(1.0, std::fabs(optimum));

  // Lexicographic tie-break: walk rows in order, fixing each to the lowest
  // column (or, failing every column, to "unmatched") that still admits an
  // optimal completion. Only columns below the incumbent's choice need a
  // re-solve; the incumbent itself is already optimal.
  std::vector<std::pair<std::size_t, std::size_t>> fixed;
  std::vector<std::size_t> free_cols = all_cols;
  for (std::size_t i = 0; i < n && !free_cols.empty(); ++i) {
    std::vector<std::size_t> later_rows;
    for (std::size_t r = i + 1; r < n; ++r) later_rows.push_back(r);

    auto current = std::find_if(incumbent.pairs.begin(), incumbent.pairs.end(),
                                [i](const auto& p) { return p.first == i; });
    const std::size_t limit = current == incumbent.pairs.end() ? m : current->second;

    for (std::size_t j : free_cols) {
      if (j >= limit) break;
      std::vector<std::size_t> rest_cols;
      for (std::size_t c : free_cols) {
        if (c != j) rest_cols.push_back(c);
      }
      if (n <= m ? later_rows.size() > rest_cols.size() : later_rows.size() < rest_cols.size()) {
        continue;
      }
      auto completion = min_cost(cost, later_rows, rest_cols);
      const double candidate = pair_list_cost(cost, fixed) + cost(i, j) + completion.cost;
      if (candidate <= optimum + tol) {
        auto pairs = fixed;
        pairs.emplace_back(i, j);
        pairs.insert(pairs.end(), completion.pairs.begin(), completion.pairs.end());
        incumbent = SubAssignment{candidate, std::move(pairs)};
        break;
      }
    }
    current = std::find_if(incumbent.pairs.begin(), incumbent.pairs.end(),
                           [i](const auto& p) { return p.first == i; });
    if (current != incumbent.pairs.end()) {
      fixed.emplace_back(i, current->second);
      free_cols.erase(std::find(free_cols.begin(), free_cols.end(), current->second));
    }
  }

  result.pairs = std::move(incumbent.pairs);
  std::sort(result.pairs.begin(), result.pairs.end());
  result.total_cost = pair_list_cost(cost, result.pairs);

  std::vector<char> row_used(n, 0), col_used(m, 0);
  for (const auto& [r, c] : result.pairs) {
    row_used[r] = 1;
    col_used[c] = 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!row_used[i]) result.unmatched_pred.push_back(i);
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (!col_used[j]) result.unmatched_gt.push_back(j);
  }
  return result;
}

MatchResult match_objects(std::span<const ObjectNode> pred, std::span<const ObjectNode> gt,
                          const MatchWeights& w) {
  CostMatrix cost(pred.size(), gt.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < gt.size(); ++j) cost(i, j) = pair_cost(pred[i], gt[j], w);
  }
  return solve_assignment(cost);
}

}  // namespace srl

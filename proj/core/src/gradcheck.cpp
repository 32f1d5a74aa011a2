#include "srl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace srl {

GradCheckResult finite_difference_check(const Objective& objective, std::span<const double> x,
                                        double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be > 0");
  GradCheckResult result;
  result.analytic = objective.gradient(x);
  if (result.analytic.size() != x.size()) {
    throw std::invalid_argument("analytic gradient has the wrong dimension");
  }

  std::vector<double> probe(x.begin(), x.end());
  result.numeric.resize(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    probe[k] = x[k] + h;
    const double up = objective.value(probe);
    probe[k] = x[k] - h;
    const double down = objective.value(probe);
    probe[k] = x[k];
    result.numeric[k] = (up - down) / (2.0 * h);
  }

  for (std::size_t k = 0; k < x.size(); ++k) {
    const double a = result.analytic[k];
    const double n = result.numeric[k];
    if (!std::isfinite(a) || !std::isfinite(n)) {
      throw NonFiniteGradient("non-finite gradient at coordinate " + std::to_string(k));
    }
    const double err = std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), kGradCheckFloor});
    if (err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = k;
    }
  }
  return result;
}

}  // namespace srl

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace srl {

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A scalar function of a parameter vector together with its claimed
/// analytic gradient.
struct Objective {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

/// Relative error floor: |a - n| / max(|a|, |n|, floor). Keeps components
/// whose true derivative is ~0 from dividing rounding noise by ~0.
inline constexpr double kGradCheckFloor = 1e-6;

/// Central differences (f(x + h e_k) - f(x - h e_k)) / 2h over every
/// coordinate, compared with `objective.gradient(x)`.
/// Throws NonFiniteGradient if either gradient has a non-finite entry.
GradCheckResult finite_difference_check(const Objective& objective, std::span<const double> x,
                                        double h);

}  // namespace srl

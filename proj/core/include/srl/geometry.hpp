#pragma once

#include <stdexcept>

#include "srl/scene_graph.hpp"

namespace srl {

class DegenerateBox : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct OverlapReport {
  double iou = 0.0;
  double center_distance_sq = 0.0;  // rho^2, pixels^2
  double enclosing_diag_sq = 0.0;   // c^2, pixels^2
  double aspect_term_v = 0.0;
  double alpha = 0.0;
  double ciou = 0.0;
};

/// Intersection over union of two closed rectangles. Throws DegenerateBox
/// when either box has non-positive area.
double iou(const BBox& a, const BBox& b);

/// Complete IoU: iou - rho^2/c^2 - alpha*v, with
/// v = 4/pi^2 * (atan(w_a/h_a) - atan(w_b/h_b))^2 and alpha = v / ((1 - iou) + v).
/// alpha is taken as 0 whenever v == 0; identical boxes give exactly 1.
OverlapReport ciou(const BBox& a, const BBox& b);

}  // namespace srl

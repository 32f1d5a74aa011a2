#include "srl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace srl {
namespace {

void require_positive_area(const BBox& b) {
  if (!(b.width() > 0.0) || !(b.height() > 0.0) || !std::isfinite(b.area())) {
    throw DegenerateBox("degenerate box [" + std::to_string(b.x1) + "," + std::to_string(b.y1) +
                        "," + std::to_string(b.x2) + "," + std::to_string(b.y2) + "]");
  }
}

double iou_unchecked(const BBox& a, const BBox& b) {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace

double iou(const BBox& a, const BBox& b) {
  require_positive_area(a);
  require_positive_area(b);
  return iou_unchecked(a, b);
}

OverlapReport ciou(const BBox& a, const BBox& b) {
  require_positive_area(a);
  require_positive_area(b);

  OverlapReport r;
  r.iou = iou_unchecked(a, b);

  const double dx = a.center_x() - b.center_x();
  const double dy = a.center_y() - b.center_y();
  r.center_distance_sq = dx * dx + dy * dy;

  const double cw = std::max(a.x2, b.x2) - std::min(a.x1, b.x1);
  const double ch = std::max(a.y2, b.y2) - std::min(a.y1, b.y1);
  r.enclosing_diag_sq = cw * cw + ch * ch;

  if (a == b) {
    r.ciou = 1.0;
    return r;
  }

  constexpr double kAspectScale = 4.0 / (std::numbers::pi * std::numbers::pi);
  const double angle_gap = std::atan(a.width() / a.height()) - std::atan(b.width() / b.height());
  r.aspect_term_v = kAspectScale * angle_gap * angle_gap;
  r.alpha = r.aspect_term_v == 0.0 ? 0.0 : r.aspect_term_v / ((1.0 - r.iou) + r.aspect_term_v);

  r.ciou = r.iou - r.center_distance_sq / r.enclosing_diag_sq - r.alpha * r.aspect_term_v;
  return r;
}

}  // namespace srl

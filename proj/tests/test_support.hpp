// Helpers and independent oracles shared by the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "srl/matcher.hpp"
#include "srl/reward.hpp"
#include "srl/rng.hpp"
#include "srl/scene_graph.hpp"

namespace test {

inline std::string fixture(const std::string& name) { return std::string(SRL_FIXTURE_DIR) + "/" + name; }

/// Valid graph with unique ids, fractional and integral coordinates, and
/// relations only between existing, distinct objects.
inline srl::SceneGraph random_graph(srl::Rng& rng, std::size_t max_objects = 8) {
  static const char* labels[] = {"cup", "red cup", "plate", "tree", "dog", "café table", "lamp", "a \"quoted\" box"};
  static const char* predicates[] = {"on", "left of", "above", "behind", "next to", "holding"};
  srl::SceneGraph g;
  const auto n = rng.below(max_objects + 1);
  for (std::size_t i = 0; i < n; ++i) {
    double x1 = rng.uniform(0, 1000), y1 = rng.uniform(0, 1000);
    double w = rng.uniform(0.001, 300), h = rng.uniform(0.001, 300);
    if (rng.bernoulli(0.3)) {
      x1 = std::floor(x1);
      y1 = std::floor(y1);
      w = std::ceil(w);
      h = std::ceil(h);
    }
    g.objects.push_back({"o" + std::to_string(rng.below(1000)) + "_" + std::to_string(i),
                         labels[rng.below(8)], {x1, y1, x1 + w, y1 + h}});
  }
  if (n >= 2) {
    const auto m = rng.below(2 * n);
    for (std::size_t k = 0; k < m; ++k) {
      const auto a = rng.below(n);
      auto b = rng.below(n - 1);
      if (b >= a) ++b;
      g.relations.push_back({g.objects[a].id, predicates[rng.below(6)], g.objects[b].id});
    }
  }
  return g;
}

/// IoU by counting unit cells of integer-coordinate boxes.
inline double pixel_iou(int ax1, int ay1, int ax2, int ay2, int bx1, int by1, int bx2, int by2) {
  long inter = 0, a = 0, b = 0;
  const int lo = std::min({ax1, ay1, bx1, by1}), hi = std::max({ax2, ay2, bx2, by2});
  for (int x = lo; x < hi; ++x) {
    for (int y = lo; y < hi; ++y) {
      const bool in_a = x >= ax1 && x < ax2 && y >= ay1 && y < ay2;
      const bool in_b = x >= bx1 && x < bx2 && y >= by1 && y < by2;
      a += in_a;
      b += in_b;
      inter += in_a && in_b;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(a + b - inter);
}

/// Minimum over all injective maps from the smaller side to the larger.
inline double brute_force_assignment(const srl::CostMatrix& c) {
  const bool transpose = c.rows() > c.cols();
  const std::size_t small = transpose ? c.cols() : c.rows();
  const std::size_t large = transpose ? c.rows() : c.cols();
  auto at = [&](std::size_t s, std::size_t l) { return transpose ? c(l, s) : c(s, l); };
  std::vector<std::size_t> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  double best = small == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < small; ++i) s += at(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Textbook CIoU written out from its definition, for cross-checking.
inline double ciou_reference(const srl::BBox& a, const srl::BBox& b) {
  if (a == b) return 1.0;
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double iou = inter / (a.area() + b.area() - inter);
  const double dx = a.center_x() - b.center_x(), dy = a.center_y() - b.center_y();
  const double cw = std::max(a.x2, b.x2) - std::min(a.x1, b.x1);
  const double ch = std::max(a.y2, b.y2) - std::min(a.y1, b.y1);
  const double pi = std::acos(-1.0);
  const double d = std::atan(a.width() / a.height()) - std::atan(b.width() / b.height());
  const double v = 4.0 / (pi * pi) * d * d;
  const double alpha = v == 0.0 ? 0.0 : v / ((1.0 - iou) + v);
  return iou - (dx * dx + dy * dy) / (cw * cw + ch * ch) - alpha * v;
}

inline srl::BBox random_box(srl::Rng& rng, double extent = 1000.0) {
  const double x = rng.uniform(0, extent), y = rng.uniform(0, extent);
  return {x, y, x + rng.uniform(0.5, extent / 3), y + rng.uniform(0.5, extent / 3)};
}

inline std::string make_response(const std::string& scene_json, const std::string& answer,
                                 const std::string& think = "reasoning") {
  return "<observe>the image</observe><scene>" + scene_json + "</scene><think>" + think +
         "</think><answer>" + answer + "</answer>";
}

inline std::string make_response(const srl::SceneGraph& scene, const std::string& answer) {
  return make_response(srl::serialize_scene(scene), answer);
}

inline srl::GroundTruth random_truth(srl::Rng& rng) {
  srl::GroundTruth t;
  do {
    t.subgraph = random_graph(rng, 5);
  } while (t.subgraph.objects.empty());
  t.answer = "(B) The " + t.subgraph.objects[0].label;
  return t;
}

/// Mixes well-formed and broken responses: missing, repeated, reordered or
/// unclosed tags, invalid scene payloads, wrong answers, jittered or extra
/// boxes, and plain noise.
inline std::string fuzz_response(srl::Rng& rng, const srl::GroundTruth& truth) {
  auto scene = truth.subgraph;
  for (auto& o : scene.objects) {
    if (rng.bernoulli(0.5)) {
      const double dx = rng.uniform(-20, 20), dy = rng.uniform(-20, 20);
      o.bbox = {o.bbox.x1 + dx, o.bbox.y1 + dy, o.bbox.x2 + dx + rng.uniform(0, 10),
                o.bbox.y2 + dy + rng.uniform(0, 10)};
    }
  }
  const auto extra = rng.below(4);
  for (std::size_t k = 0; k < extra; ++k) {
    scene.objects.push_back({"x" + std::to_string(k), "thing", random_box(rng, 500)});
  }
  if (!scene.objects.empty() && rng.bernoulli(0.2)) scene.objects.pop_back();
  std::string scene_json;
  switch (rng.below(6)) {
    case 0: scene_json = "{\"objects\":[{\"id\":\"a\",\"bbox\":[0,0,1,1]}],\"relations\":[]}"; break;
    case 1: scene_json = "{not json"; break;
    case 2: scene_json = "{\"objects\":[],\"relations\":[[\"a\",\"on\",\"b\"]]}"; break;
    default: {
      scene.relations.erase(std::remove_if(scene.relations.begin(), scene.relations.end(),
                                           [&](const srl::RelationTriplet& r) {
                                             auto has = [&](const std::string& id) {
                                               return std::any_of(scene.objects.begin(), scene.objects.end(),
                                                                  [&](const auto& o) { return o.id == id; });
                                             };
                                             return !has(r.subject_id) || !has(r.object_id);
                                           }),
                            scene.relations.end());
      scene_json = srl::serialize_scene(scene);
    }
  }
  std::string answer = rng.bernoulli(0.5) ? truth.answer : "(A) something else";
  if (rng.bernoulli(0.1)) answer = "  ";
  std::vector<std::string> parts = {"<observe>seen</observe>", "<scene>" + scene_json + "</scene>",
                                    "<think>because</think>", "<answer>" + answer + "</answer>"};
  switch (rng.below(8)) {
    case 0: parts.erase(parts.begin() + static_cast<long>(rng.below(4))); break;
    case 1: std::swap(parts[rng.below(4)], parts[rng.below(4)]); break;
    case 2: parts.push_back(parts[rng.below(4)]); break;
    case 3: parts[rng.below(4)].resize(parts[0].size() / 2); break;
    case 4: return "random noise " + std::to_string(rng.next());
    default: break;
  }
  std::string out;
  for (const auto& p : parts) out += (rng.bernoulli(0.2) ? "\n" : "") + p;
  return out;
}

}  // namespace test
